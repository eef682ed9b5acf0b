#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "common.hpp"
#include "raf/errors.hpp"
#include "raf/experiments.hpp"
#include "raf/quality_gap.hpp"

namespace raf::experiments {

void SegmentStudyConfig::validate() const {
  if (segment_sizes.empty()) throw ConfigError("segment_sizes is empty");
  if (!std::is_sorted(segment_sizes.begin(), segment_sizes.end()))
    throw ConfigError("segment_sizes must be sorted ascending");
  if (corpus_pairs < 1 || segments_per_size < 1)
    throw ConfigError("corpus_pairs and segments_per_size must be positive");
  if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
  if (alphas.size() != 3) throw ConfigError("alphas must have 3 entries");
  if (segment_sizes.front() == 0) throw ConfigError("segment sizes must be positive");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Voiced-like harmonic tone with vibrato, a syllable envelope and a little
// background noise.
std::vector<double> synth_real(std::size_t n, double sr, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double f0_center = 90.0 + 160.0 * u(rng);
  const double vibrato_hz = 4.0 + 3.0 * u(rng);
  const double vibrato_depth = 0.02 + 0.04 * u(rng);
  const std::size_t harmonics = 6 + static_cast<std::size_t>(u(rng) * 10.0);
  const double tilt = 0.5 + u(rng);
  const double syllable_hz = 2.0 + 3.0 * u(rng);
  const double env_phase = kTwoPi * u(rng);
  std::vector<double> amps(harmonics), phases(harmonics);
  for (std::size_t h = 0; h < harmonics; ++h) {
    amps[h] = std::pow(static_cast<double>(h + 1), -tilt) * (0.5 + u(rng));
    phases[h] = kTwoPi * u(rng);
  }
  std::vector<double> out(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f0 =
        f0_center * (1.0 + vibrato_depth * std::sin(kTwoPi * vibrato_hz * t));
    phase += kTwoPi * f0 / sr;
    double v = 0.0;
    for (std::size_t h = 0; h < harmonics; ++h) {
      if (f0 * static_cast<double>(h + 1) >= 0.45 * sr) break;
      v += amps[h] * std::sin(static_cast<double>(h + 1) * phase + phases[h]);
    }
    const double s = std::sin(kTwoPi * syllable_hz * t + env_phase);
    const double env = 0.15 + 0.85 * s * s;
    out[i] = 0.3 * env * v + 0.005 * noise(rng);
  }
  return out;
}

// Additive noise with a time-varying level, a moving-average lowpass and a
// hard clip, each at a random strength.
std::vector<double> degrade(const std::vector<double>& x, double sr,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  double power = 0.0;
  double peak = 0.0;
  for (double v : x) {
    power += v * v;
    peak = std::max(peak, std::fabs(v));
  }
  const double rms = std::sqrt(power / static_cast<double>(x.size()));
  const double snr_db = 5.0 + 15.0 * u(rng);
  const double noise_std = rms * std::pow(10.0, -snr_db / 20.0);
  const double wobble_hz = 2.0 + 3.0 * u(rng);
  const auto taps = static_cast<std::size_t>(2 + u(rng) * 6.0);
  const double clip = peak * (0.4 + 0.4 * u(rng));

  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i];
    if (i >= taps) acc -= x[i - taps];
    const double lp = acc / static_cast<double>(std::min(i + 1, taps));
    const double level =
        1.0 + 0.8 * std::sin(kTwoPi * wobble_hz * static_cast<double>(i) / sr);
    const double v = lp + noise_std * level * noise(rng);
    y[i] = std::clamp(v, -clip, clip);
  }
  return y;
}

std::vector<dsp::StftConfig> study_resolutions(const SegmentStudyConfig& cfg) {
  if (!cfg.resolutions.empty()) return cfg.resolutions;
  std::vector<dsp::StftConfig> out;
  for (const dsp::StftConfig& r : dsp::default_resolutions())
    if (r.fft_size <= cfg.segment_sizes.front()) out.push_back(r);
  if (out.empty()) throw ConfigError("no default STFT resolution fits the smallest segment");
  return out;
}

}  // namespace

SegmentStudyResult run_segment_size_study(const SegmentStudyConfig& cfg) {
  cfg.validate();
  for (std::size_t s : cfg.segment_sizes)
    RAF_REQUIRE(s <= cfg.full_length, "segment of " + std::to_string(s) +
                                          " samples exceeds signal length " +
                                          std::to_string(cfg.full_length));

  const std::vector<dsp::StftConfig> resolutions = study_resolutions(cfg);
  const quality::BaselineExtractor ex_w = quality::make_extractor_w();
  const quality::BaselineExtractor ex_h = quality::make_extractor_h();
  const quality::EmbeddingExtractor* extractors[] = {&ex_w, &ex_h};

  const std::size_t n_sizes = cfg.segment_sizes.size();
  const std::size_t k = cfg.alphas.size();
  // abs_err[pair][size][component]
  std::vector<std::vector<std::vector<double>>> abs_err(
      cfg.corpus_pairs,
      std::vector<std::vector<double>>(n_sizes, std::vector<double>(k, 0.0)));
  std::vector<std::string> ids;

  auto run_pair = [&](std::size_t p) {
    std::mt19937_64 rng(detail::derive_seed(cfg.seed, 100 + p));
    const std::vector<double> real = synth_real(cfg.full_length, cfg.sample_rate, rng);
    const std::vector<double> fake =
        cfg.identical_pairs ? real : degrade(real, cfg.sample_rate, rng);
    const dsp::Waveform y(real, cfg.sample_rate);
    const dsp::Waveform g(fake, cfg.sample_rate);
    const quality::QualityGapVector full =
        quality::quality_gap_vector(y, g, extractors, cfg.alphas, resolutions);

    for (std::size_t si = 0; si < n_sizes; ++si) {
      const std::size_t s = cfg.segment_sizes[si];
      std::uniform_int_distribution<std::size_t> offset(0, cfg.full_length - s);
      const std::size_t reps = s == cfg.full_length ? 1 : cfg.segments_per_size;
      std::vector<double> mean(k, 0.0);
      for (std::size_t r = 0; r < reps; ++r) {
        const std::size_t o = offset(rng);
        const dsp::Waveform ys(
            std::vector<double>(real.begin() + o, real.begin() + o + s),
            cfg.sample_rate);
        const dsp::Waveform gs(
            std::vector<double>(fake.begin() + o, fake.begin() + o + s),
            cfg.sample_rate);
        const quality::QualityGapVector q =
            quality::quality_gap_vector(ys, gs, extractors, cfg.alphas, resolutions);
        for (std::size_t c = 0; c < k; ++c) mean[c] += q.components[c];
      }
      for (std::size_t c = 0; c < k; ++c)
        abs_err[p][si][c] =
            std::fabs(full.components[c] - mean[c] / static_cast<double>(reps));
    }
  };
  parallel_for(cfg.corpus_pairs, cfg.threads, run_pair);

  SegmentStudyResult res;
  res.segment_sizes = cfg.segment_sizes;
  res.component_ids = {ex_w.id(), ex_h.id(), quality::kMstftComponentId};
  res.errors.assign(n_sizes, std::vector<double>(k, 0.0));
  for (std::size_t si = 0; si < n_sizes; ++si)
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t p = 0; p < cfg.corpus_pairs; ++p)
        res.errors[si][c] += abs_err[p][si][c];
      res.errors[si][c] /= static_cast<double>(cfg.corpus_pairs);
    }
  std::vector<double> log_size;
  for (std::size_t s : cfg.segment_sizes) log_size.push_back(std::log(static_cast<double>(s)));
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> col;
    for (std::size_t si = 0; si < n_sizes; ++si) col.push_back(res.errors[si][c]);
    res.spearman.push_back(n_sizes < 2 ? std::numeric_limits<double>::quiet_NaN()
                                       : detail::spearman(log_size, col));
  }
  return res;
}

}  // namespace raf::experiments
