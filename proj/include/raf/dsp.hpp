#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "raf/autodiff.hpp"
#include "raf/tensor.hpp"

namespace raf::dsp {

/// Floor applied before every log of a magnitude or mel energy.
inline constexpr double kLogFloor = 1e-7;

/// Mono audio with its sample rate in Hz.
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;

  Waveform() = default;
  Waveform(std::vector<double> s, double rate);

  std::size_t size() const noexcept { return samples.size(); }
};

struct StftConfig {
  std::size_t fft_size = 1024;
  std::size_t hop_size = 256;

  /// hop <= fft, fft a power of two.
  void validate() const;
};

/// Five resolutions, window = FFT size, hop = FFT / 4.
std::vector<StftConfig> default_resolutions();

struct MelConfig {
  std::size_t n_mels = 100;
  double f_min = 0.0;
  double f_max = 12000.0;
  std::size_t fft_size = 1024;
  std::size_t hop_size = 256;
  double sample_rate = 24000.0;

  void validate() const;
};

/// Periodic Hann window, w[k] = 0.5 - 0.5 cos(2 pi k / n).
std::vector<double> hann_window(std::size_t n);

/// Number of STFT frames for a signal of `length` samples with centered,
/// reflect-padded framing.
std::size_t stft_frame_count(std::size_t length, const StftConfig& cfg);

/// Windowed real DFT of every frame of a reflect-padded signal as a linear
/// operator. Input shape (L); output shape (2, frames, bins) holding the real
/// parts in [0] and the imaginary parts in [1].
class StftMap final : public ad::LinearMap {
 public:
  StftMap(std::size_t length, StftConfig cfg);

  Shape input_shape() const override { return {length_}; }
  Shape output_shape() const override { return {2, frames_, bins_}; }
  void apply(std::span<const double> in, std::span<double> out) const override;
  void apply_adjoint(std::span<const double> in,
                     std::span<double> out) const override;

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }

 private:
  std::size_t length_;
  StftConfig cfg_;
  std::size_t frames_;
  std::size_t bins_;
  std::vector<double> window_;
};

/// |STFT| as (frames x bins).
Tensor stft_magnitude(std::span<const double> samples, const StftConfig& cfg);
Tensor stft_magnitude(const Waveform& w, const StftConfig& cfg);

/// Triangular HTK-scale filterbank, (n_mels x bins), unit peak.
Tensor mel_filterbank(const MelConfig& cfg);

/// log(max(mel power, floor)) as (frames x n_mels).
Tensor mel_spectrogram(const Waveform& w, const MelConfig& cfg);

/// ||ref - est||_F / ||ref||_F.
double spectral_convergence(const Tensor& ref_mag, const Tensor& est_mag);

/// Mean |log max(ref, eps) - log max(est, eps)|.
double log_magnitude_loss(const Tensor& ref_mag, const Tensor& est_mag);

/// Sum over resolutions of spectral convergence plus log-magnitude loss.
double mstft_distance(const Waveform& y, const Waveform& g,
                      std::span<const StftConfig> resolutions);

/// Hann-windowed sinc interpolation, 64 zero crossings per side.
Waveform sinc_resample(const Waveform& w, double target_rate);

// Differentiable counterparts over rank-1 signal nodes.
ad::Var stft_power(ad::Var signal, const StftConfig& cfg);
ad::Var stft_magnitude(ad::Var signal, const StftConfig& cfg);
ad::Var log_mel_spectrogram(ad::Var signal, const MelConfig& cfg);
ad::Var spectral_convergence(ad::Var ref_mag, ad::Var est_mag);
ad::Var log_magnitude_loss(ad::Var ref_mag, ad::Var est_mag);
ad::Var mstft_distance(ad::Var y, ad::Var g,
                       std::span<const StftConfig> resolutions);

enum class WavFormat { kPcm16, kFloat32 };

/// Reads a mono PCM16 or float32 RIFF/WAVE file.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavFormat format = WavFormat::kFloat32);

}  // namespace raf::dsp
