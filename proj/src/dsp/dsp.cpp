#include "raf/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <utility>

#include "fft.hpp"
#include "raf/errors.hpp"

namespace raf::dsp {
namespace {

constexpr double kPi = std::numbers::pi;
// Lower bound on STFT power before the square root in the differentiable
// magnitude path; keeps d sqrt / dx finite at exactly silent bins.
constexpr double kPowerFloor = 1e-24;
constexpr int kSincZeroCrossings = 64;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t reflect_index(std::ptrdiff_t i, std::size_t len) {
  const auto n = static_cast<std::ptrdiff_t>(len);
  if (i < 0) i = -i;
  if (i >= n) i = 2 * (n - 1) - i;
  return static_cast<std::size_t>(i);
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

Waveform::Waveform(std::vector<double> s, double rate)
    : samples(std::move(s)), sample_rate(rate) {
  RAF_REQUIRE(sample_rate > 0.0, "sample rate must be positive");
  RAF_REQUIRE(!samples.empty(), "waveform must be non-empty");
}

void StftConfig::validate() const {
  RAF_REQUIRE(is_pow2(fft_size) && fft_size >= 2,
              "fft size must be a power of two, got " + std::to_string(fft_size));
  RAF_REQUIRE(hop_size >= 1 && hop_size <= fft_size,
              "hop size must lie in [1, fft size]");
}

std::vector<StftConfig> default_resolutions() {
  std::vector<StftConfig> out;
  for (std::size_t n : {256u, 512u, 1024u, 2048u, 4096u}) out.push_back({n, n / 4});
  return out;
}

void MelConfig::validate() const {
  RAF_REQUIRE(n_mels >= 1, "n_mels must be at least 1");
  RAF_REQUIRE(sample_rate > 0.0, "mel sample rate must be positive");
  RAF_REQUIRE(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0,
              "mel band edges must satisfy 0 <= f_min < f_max <= rate/2");
  StftConfig{fft_size, hop_size}.validate();
}

std::vector<double> hann_window(std::size_t n) {
  RAF_REQUIRE(n >= 2, "hann window length must be at least 2");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(k) /
                                static_cast<double>(n));
  return w;
}

std::size_t stft_frame_count(std::size_t length, const StftConfig& cfg) {
  return 1 + length / cfg.hop_size;
}

StftMap::StftMap(std::size_t length, StftConfig cfg)
    : length_(length), cfg_(cfg) {
  cfg_.validate();
  RAF_REQUIRE(length_ >= cfg_.fft_size,
              "signal of " + std::to_string(length_) +
                  " samples is shorter than the FFT size " +
                  std::to_string(cfg_.fft_size));
  frames_ = stft_frame_count(length_, cfg_);
  bins_ = cfg_.fft_size / 2 + 1;
  window_ = hann_window(cfg_.fft_size);
}

void StftMap::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = cfg_.fft_size;
  const auto pad = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<double> frame(n);
  std::vector<std::complex<double>> spec(bins_);
  const std::size_t plane = frames_ * bins_;
  for (std::size_t f = 0; f < frames_; ++f) {
    const auto start = static_cast<std::ptrdiff_t>(f * cfg_.hop_size) - pad;
    for (std::size_t k = 0; k < n; ++k)
      frame[k] = in[reflect_index(start + static_cast<std::ptrdiff_t>(k),
                                  length_)] *
                 window_[k];
    detail::rfft(frame, spec);
    for (std::size_t k = 0; k < bins_; ++k) {
      out[f * bins_ + k] = spec[k].real();
      out[plane + f * bins_ + k] = spec[k].imag();
    }
  }
}

void StftMap::apply_adjoint(std::span<const double> in,
                            std::span<double> out) const {
  const std::size_t n = cfg_.fft_size;
  const auto pad = static_cast<std::ptrdiff_t>(n / 2);
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<std::complex<double>> spec(bins_);
  std::vector<double> frame(n);
  const std::size_t plane = frames_ * bins_;
  for (std::size_t f = 0; f < frames_; ++f) {
    // Re sum_k (a_k + i b_k) e^{+i theta} over the half spectrum. The c2r
    // transform doubles interior bins, so they are halved here.
    for (std::size_t k = 0; k < bins_; ++k) {
      const std::complex<double> z(in[f * bins_ + k], in[plane + f * bins_ + k]);
      spec[k] = (k == 0 || k == bins_ - 1) ? std::complex<double>(z.real(), 0.0)
                                           : 0.5 * z;
    }
    detail::irfft_unnormalized(spec, frame);
    const auto start = static_cast<std::ptrdiff_t>(f * cfg_.hop_size) - pad;
    for (std::size_t k = 0; k < n; ++k)
      out[reflect_index(start + static_cast<std::ptrdiff_t>(k), length_)] +=
          frame[k] * window_[k];
  }
}

Tensor stft_magnitude(std::span<const double> samples, const StftConfig& cfg) {
  const StftMap map(samples.size(), cfg);
  std::vector<double> buf(2 * map.frames() * map.bins());
  map.apply(samples, buf);
  Tensor mag(Shape{map.frames(), map.bins()});
  const std::size_t plane = mag.size();
  for (std::size_t i = 0; i < plane; ++i)
    mag[i] = std::hypot(buf[i], buf[plane + i]);
  return mag;
}

Tensor stft_magnitude(const Waveform& w, const StftConfig& cfg) {
  return stft_magnitude(std::span<const double>(w.samples), cfg);
}

Tensor mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const double mlo = hz_to_mel(cfg.f_min);
  const double mhi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) /
                                   static_cast<double>(cfg.n_mels + 1));
  Tensor fb(Shape{cfg.n_mels, bins});
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate /
                       static_cast<double>(cfg.fft_size);
      const double up = (f - lo) / (c - lo);
      const double down = (hi - f) / (hi - c);
      fb.at(m, k) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

Tensor mel_spectrogram(const Waveform& w, const MelConfig& cfg) {
  cfg.validate();
  RAF_REQUIRE(w.sample_rate == cfg.sample_rate,
              "waveform rate " + std::to_string(w.sample_rate) +
                  " does not match mel config rate " +
                  std::to_string(cfg.sample_rate));
  const Tensor mag = stft_magnitude(w, {cfg.fft_size, cfg.hop_size});
  const Tensor fb = mel_filterbank(cfg);
  const std::size_t frames = mag.dim(0), bins = mag.dim(1);
  Tensor out(Shape{frames, cfg.n_mels});
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) {
        const double a = mag.at(f, k);
        e += fb.at(m, k) * a * a;
      }
      out.at(f, m) = std::log(std::max(e, kLogFloor));
    }
  return out;
}

double spectral_convergence(const Tensor& ref_mag, const Tensor& est_mag) {
  RAF_REQUIRE(ref_mag.shape() == est_mag.shape(),
              "spectral_convergence: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref_mag.size(); ++i) {
    const double d = ref_mag[i] - est_mag[i];
    num += d * d;
    den += ref_mag[i] * ref_mag[i];
  }
  if (den == 0.0) {
    throw DegenerateReference("spectral convergence of an all-zero reference");
  }
  return std::sqrt(num) / std::sqrt(den);
}

double log_magnitude_loss(const Tensor& ref_mag, const Tensor& est_mag) {
  RAF_REQUIRE(ref_mag.shape() == est_mag.shape(),
              "log_magnitude_loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref_mag.size(); ++i)
    acc += std::fabs(std::log(std::max(ref_mag[i], kLogFloor)) -
                     std::log(std::max(est_mag[i], kLogFloor)));
  return acc / static_cast<double>(ref_mag.size());
}

double mstft_distance(const Waveform& y, const Waveform& g,
                      std::span<const StftConfig> resolutions) {
  RAF_REQUIRE(!resolutions.empty(), "mstft_distance needs a resolution");
  RAF_REQUIRE(y.size() == g.size() && y.sample_rate == g.sample_rate,
              "mstft_distance: waveforms differ in length or rate");
  double total = 0.0;
  for (const StftConfig& cfg : resolutions) {
    const Tensor ry = stft_magnitude(y, cfg);
    const Tensor rg = stft_magnitude(g, cfg);
    total += spectral_convergence(ry, rg) + log_magnitude_loss(ry, rg);
  }
  return total;
}

Waveform sinc_resample(const Waveform& w, double target_rate) {
  RAF_REQUIRE(target_rate > 0.0, "target rate must be positive");
  RAF_REQUIRE(w.sample_rate > 0.0 && !w.samples.empty(),
              "cannot resample an empty waveform");
  if (target_rate == w.sample_rate) return w;

  const double ratio = target_rate / w.sample_rate;
  const double cutoff = std::min(1.0, ratio);
  const double half_width = kSincZeroCrossings / cutoff;
  const auto taps_half = static_cast<std::ptrdiff_t>(std::ceil(half_width));
  const std::size_t in_len = w.size();
  const auto out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(in_len) * ratio));

  auto kernel = [&](double tau) {
    if (std::fabs(tau) >= half_width) return 0.0;
    const double x = cutoff * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    const double win = 0.5 + 0.5 * std::cos(kPi * tau / half_width);
    return cutoff * sinc * win;
  };

  // Integer rates with a small reduced denominator repeat the same set of
  // fractional offsets; precompute one tap row per offset.
  const bool integral = std::floor(w.sample_rate) == w.sample_rate &&
                        std::floor(target_rate) == target_rate;
  std::uint64_t num = 0, den = 0;
  if (integral) {
    const auto src = static_cast<std::uint64_t>(w.sample_rate);
    const auto tgt = static_cast<std::uint64_t>(target_rate);
    const std::uint64_t gcd = std::gcd(src, tgt);
    num = src / gcd;  // input step per output sample = num / den
    den = tgt / gcd;
  }
  const std::size_t row = static_cast<std::size_t>(2 * taps_half + 1);
  std::vector<double> table;
  const bool use_table = integral && den <= 4096;
  if (use_table) {
    table.resize(den * row);
    for (std::uint64_t p = 0; p < den; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(den);
      for (std::ptrdiff_t j = -taps_half; j <= taps_half; ++j)
        table[p * row + static_cast<std::size_t>(j + taps_half)] =
            kernel(frac - static_cast<double>(j));
    }
  }

  std::vector<double> out(out_len);
  const auto n_in = static_cast<std::ptrdiff_t>(in_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    std::ptrdiff_t base;
    double frac;
    std::size_t phase = 0;
    if (use_table) {
      const std::uint64_t pos = m * num;
      base = static_cast<std::ptrdiff_t>(pos / den);
      phase = static_cast<std::size_t>(pos % den);
      frac = static_cast<double>(phase) / static_cast<double>(den);
    } else {
      const double t = static_cast<double>(m) / ratio;
      base = static_cast<std::ptrdiff_t>(std::floor(t));
      frac = t - static_cast<double>(base);
    }
    double acc = 0.0;
    for (std::ptrdiff_t j = -taps_half; j <= taps_half; ++j) {
      const std::ptrdiff_t n = base + j;
      if (n < 0 || n >= n_in) continue;
      const double h = use_table
                           ? table[phase * row + static_cast<std::size_t>(j + taps_half)]
                           : kernel(frac - static_cast<double>(j));
      acc += w.samples[static_cast<std::size_t>(n)] * h;
    }
    out[m] = acc;
  }
  return Waveform(std::move(out), target_rate);
}

// ---------------------------------------------------------------------------
// Differentiable path

ad::Var stft_power(ad::Var signal, const StftConfig& cfg) {
  RAF_REQUIRE(signal.shape().size() == 1, "stft expects a rank-1 signal");
  auto map = std::make_shared<StftMap>(signal.shape()[0], cfg);
  const std::size_t frames = map->frames(), bins = map->bins();
  ad::Var spec = ad::linear_map(std::move(map), signal);
  ad::Var power = ad::sum_to(ad::square(spec), Shape{1, frames, bins});
  return ad::reshape(power, Shape{frames, bins});
}

ad::Var stft_magnitude(ad::Var signal, const StftConfig& cfg) {
  return ad::sqrt(ad::clamp_min(stft_power(signal, cfg), kPowerFloor));
}

ad::Var log_mel_spectrogram(ad::Var signal, const MelConfig& cfg) {
  cfg.validate();
  ad::Var power = stft_power(signal, {cfg.fft_size, cfg.hop_size});
  ad::Var fb_t = ad::transpose(signal.graph()->constant(mel_filterbank(cfg)));
  return ad::log(ad::clamp_min(ad::matmul(power, fb_t), kLogFloor));
}

ad::Var spectral_convergence(ad::Var ref_mag, ad::Var est_mag) {
  RAF_REQUIRE(ref_mag.shape() == est_mag.shape(),
              "spectral_convergence: shape mismatch");
  ad::Var den = ad::l2_norm(ref_mag);
  if (den.item() == 0.0) {
    throw DegenerateReference("spectral convergence of an all-zero reference");
  }
  return ad::div(ad::l2_norm(ad::sub(ref_mag, est_mag)), den);
}

ad::Var log_magnitude_loss(ad::Var ref_mag, ad::Var est_mag) {
  RAF_REQUIRE(ref_mag.shape() == est_mag.shape(),
              "log_magnitude_loss: shape mismatch");
  ad::Var lr = ad::log(ad::clamp_min(ref_mag, kLogFloor));
  ad::Var le = ad::log(ad::clamp_min(est_mag, kLogFloor));
  return ad::mean(ad::abs(ad::sub(lr, le)));
}

ad::Var mstft_distance(ad::Var y, ad::Var g,
                       std::span<const StftConfig> resolutions) {
  RAF_REQUIRE(!resolutions.empty(), "mstft_distance needs a resolution");
  RAF_REQUIRE(y.shape() == g.shape(), "mstft_distance: length mismatch");
  ad::Var total;
  for (const StftConfig& cfg : resolutions) {
    ad::Var my = stft_magnitude(y, cfg);
    ad::Var mg = stft_magnitude(g, cfg);
    ad::Var term =
        ad::add(spectral_convergence(my, mg), log_magnitude_loss(my, mg));
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

}  // namespace raf::dsp
