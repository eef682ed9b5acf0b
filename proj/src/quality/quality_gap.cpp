#include "raf/quality_gap.hpp"

#include <cmath>
#include <complex>
#include <map>

#include "../dsp/fft.hpp"
#include "raf/errors.hpp"

namespace raf::quality {
namespace {

constexpr double kFloor = dsp::kLogFloor;

}  // namespace

BaselineExtractor::BaselineExtractor(BaselineExtractorConfig cfg)
    : cfg_(std::move(cfg)) {
  dsp::MelConfig mel;
  mel.n_mels = cfg_.n_mels;
  mel.f_min = 0.0;
  mel.f_max = cfg_.sample_rate / 2.0;
  mel.fft_size = cfg_.fft_size;
  mel.hop_size = cfg_.hop_size;
  mel.sample_rate = cfg_.sample_rate;
  filterbank_ = dsp::mel_filterbank(mel);
  window_ = dsp::hann_window(cfg_.fft_size);
}

std::size_t BaselineExtractor::channels() const noexcept {
  return cfg_.n_mels + (cfg_.spectral_stats ? 4 : 0);
}

Tensor BaselineExtractor::embed(const dsp::Waveform& w) const {
  RAF_REQUIRE(w.sample_rate == cfg_.sample_rate,
              cfg_.id + " expects " + std::to_string(cfg_.sample_rate) +
                  " Hz input, got " + std::to_string(w.sample_rate));
  const std::size_t n = cfg_.fft_size;
  const std::size_t bins = n / 2 + 1;
  const std::size_t frames = 1 + w.size() / cfg_.hop_size;
  const std::size_t c = channels();
  const auto pad = static_cast<std::ptrdiff_t>(n / 2);
  const auto len = static_cast<std::ptrdiff_t>(w.size());

  Tensor out(Shape{frames, c});
  std::vector<double> raw(n), frame(n), power(bins);
  std::vector<std::complex<double>> spec(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * cfg_.hop_size) - pad;
    for (std::size_t k = 0; k < n; ++k) {
      const std::ptrdiff_t i = start + static_cast<std::ptrdiff_t>(k);
      raw[k] = (i >= 0 && i < len) ? w.samples[static_cast<std::size_t>(i)] : 0.0;
      frame[k] = raw[k] * window_[k];
    }
    dsp::detail::rfft(frame, spec);
    double total = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      power[k] = std::norm(spec[k]);
      total += power[k];
    }
    for (std::size_t m = 0; m < cfg_.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += filterbank_.at(m, k) * power[k];
      out.at(t, m) = std::log(std::max(e, kFloor));
    }
    if (!cfg_.spectral_stats) continue;

    double energy = 0.0;
    for (double v : frame) energy += v * v;
    std::size_t crossings = 0;
    for (std::size_t k = 1; k < n; ++k)
      if ((raw[k - 1] >= 0.0) != (raw[k] >= 0.0)) ++crossings;
    double centroid = 0.0;
    if (total > 0.0) {
      for (std::size_t k = 0; k < bins; ++k)
        centroid += static_cast<double>(k) * power[k];
      centroid /= total * static_cast<double>(bins - 1);
    }
    double log_mean = 0.0;
    for (double p : power) log_mean += std::log(p + kFloor);
    log_mean /= static_cast<double>(bins);
    const double flatness =
        std::exp(log_mean) / (total / static_cast<double>(bins) + kFloor);

    const std::size_t base = cfg_.n_mels;
    out.at(t, base) = std::log(std::max(energy, kFloor));
    out.at(t, base + 1) =
        static_cast<double>(crossings) / static_cast<double>(n - 1);
    out.at(t, base + 2) = centroid;
    out.at(t, base + 3) = flatness;
  }
  return out;
}

BaselineExtractor make_extractor_w() { return BaselineExtractor{}; }

BaselineExtractor make_extractor_h() {
  BaselineExtractorConfig cfg;
  cfg.id = "baseline_h";
  cfg.fft_size = 1024;
  cfg.n_mels = 32;
  cfg.spectral_stats = false;
  return BaselineExtractor(cfg);
}

Tensor baseline_extractor(const dsp::Waveform& w) {
  static const BaselineExtractor ex = make_extractor_w();
  return ex.embed(w);
}

double normalized_embedding_gap(const Tensor& emb_a, const Tensor& emb_b) {
  RAF_REQUIRE(emb_a.shape() == emb_b.shape(),
              "embedding shapes differ: " + shape_str(emb_a.shape()) + " vs " +
                  shape_str(emb_b.shape()));
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < emb_a.size(); ++i) {
    na += emb_a[i] * emb_a[i];
    nb += emb_b[i] * emb_b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw DegenerateEmbedding("cannot normalize a zero-norm embedding");
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  double acc = 0.0;
  for (std::size_t i = 0; i < emb_a.size(); ++i) {
    const double d = emb_a[i] / na - emb_b[i] / nb;
    acc += d * d;
  }
  return acc / static_cast<double>(emb_a.size());
}

double normalized_embedding_gap(const dsp::Waveform& y, const dsp::Waveform& g,
                                const EmbeddingExtractor& ex) {
  RAF_REQUIRE(y.size() == g.size() && y.sample_rate == g.sample_rate,
              "quality gap inputs differ in length or rate");
  const double rate = ex.required_rate();
  return normalized_embedding_gap(ex.embed(dsp::sinc_resample(y, rate)),
                                  ex.embed(dsp::sinc_resample(g, rate)));
}

QualityGapVector quality_gap_vector(
    const dsp::Waveform& y, const dsp::Waveform& g,
    std::span<const EmbeddingExtractor* const> extractors,
    std::span<const double> alphas,
    std::span<const dsp::StftConfig> resolutions) {
  RAF_REQUIRE(alphas.size() == extractors.size() + 1,
              "expected " + std::to_string(extractors.size() + 1) +
                  " scales, got " + std::to_string(alphas.size()));
  RAF_REQUIRE(y.size() == g.size() && y.sample_rate == g.sample_rate,
              "quality gap inputs differ in length or rate");
  QualityGapVector q;
  // Resample once per distinct extractor rate.
  std::map<double, std::pair<dsp::Waveform, dsp::Waveform>> resampled;
  for (const EmbeddingExtractor* ex : extractors) {
    RAF_REQUIRE(ex != nullptr, "null extractor");
    const double rate = ex->required_rate();
    auto it = resampled.find(rate);
    if (it == resampled.end()) {
      it = resampled
               .emplace(rate, std::make_pair(dsp::sinc_resample(y, rate),
                                             dsp::sinc_resample(g, rate)))
               .first;
    }
    q.unscaled.push_back(normalized_embedding_gap(ex->embed(it->second.first),
                                                  ex->embed(it->second.second)));
    q.component_ids.push_back(ex->id());
  }
  q.unscaled.push_back(dsp::mstft_distance(y, g, resolutions));
  q.component_ids.emplace_back(kMstftComponentId);
  q.scales.assign(alphas.begin(), alphas.end());
  for (std::size_t k = 0; k < q.unscaled.size(); ++k)
    q.components.push_back(alphas[k] * q.unscaled[k]);
  return q;
}

double toy_quality_gap(double a, double b) { return std::fabs(a - b); }

std::vector<double> alphas_from_unscaled(
    const std::vector<std::vector<double>>& unscaled) {
  RAF_REQUIRE(!unscaled.empty(), "calibration batch is empty");
  const std::size_t k = unscaled.front().size();
  std::vector<double> mean(k, 0.0);
  for (const auto& row : unscaled) {
    RAF_REQUIRE(row.size() == k, "ragged calibration rows");
    for (std::size_t j = 0; j < k; ++j) mean[j] += row[j];
  }
  std::vector<double> alphas(k);
  for (std::size_t j = 0; j < k; ++j) {
    mean[j] /= static_cast<double>(unscaled.size());
    if (mean[j] == 0.0) {
      throw DegenerateCalibration("component " + std::to_string(j) +
                                  " has zero mean over the calibration batch");
    }
    alphas[j] = 1.0 / mean[j];
  }
  return alphas;
}

std::vector<double> alpha_calibration(
    std::span<const WaveformPair> batch,
    std::span<const EmbeddingExtractor* const> extractors,
    std::span<const dsp::StftConfig> resolutions) {
  const std::vector<double> ones(extractors.size() + 1, 1.0);
  std::vector<std::vector<double>> rows;
  for (const WaveformPair& p : batch)
    rows.push_back(
        quality_gap_vector(p.first, p.second, extractors, ones, resolutions)
            .unscaled);
  return alphas_from_unscaled(rows);
}

}  // namespace raf::quality
