#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "raf/dsp.hpp"
#include "raf/tensor.hpp"

namespace raf::quality {

/// Maps a waveform at required_rate() to a (T x C) feature matrix.
/// Implementations must be deterministic and pure, and T must not decrease
/// as the input grows.
class EmbeddingExtractor {
 public:
  virtual ~EmbeddingExtractor() = default;
  virtual std::string id() const = 0;
  virtual double required_rate() const = 0;
  virtual Tensor embed(const dsp::Waveform& w) const = 0;
};

struct BaselineExtractorConfig {
  std::string id = "baseline_w";
  double sample_rate = 16000.0;
  std::size_t fft_size = 512;
  std::size_t hop_size = 320;
  std::size_t n_mels = 20;
  /// Appends log-energy, zero-crossing rate, spectral centroid and flatness.
  bool spectral_stats = true;
};

/// Frame-level log-mel features plus optional spectral statistics, computed
/// on centered, zero-padded Hann frames. T = 1 + len / hop.
class BaselineExtractor final : public EmbeddingExtractor {
 public:
  explicit BaselineExtractor(BaselineExtractorConfig cfg = {});

  std::string id() const override { return cfg_.id; }
  double required_rate() const override { return cfg_.sample_rate; }
  Tensor embed(const dsp::Waveform& w) const override;

  std::size_t channels() const noexcept;
  const BaselineExtractorConfig& config() const noexcept { return cfg_; }

 private:
  BaselineExtractorConfig cfg_;
  Tensor filterbank_;
  std::vector<double> window_;
};

/// 20 log-mel bands + 4 spectral statistics (C = 24) at 16 kHz.
BaselineExtractor make_extractor_w();
/// 32 log-mel bands over a 1024-point FFT, no statistics (C = 32).
BaselineExtractor make_extractor_h();

/// Embedding of the default baseline extractor.
Tensor baseline_extractor(const dsp::Waveform& w);

/// ||Z(a) - Z(b)||^2 / (T C) where Z flattens and L2-normalizes.
double normalized_embedding_gap(const Tensor& emb_a, const Tensor& emb_b);

/// Resamples both inputs to the extractor rate, embeds and compares them.
double normalized_embedding_gap(const dsp::Waveform& y, const dsp::Waveform& g,
                                const EmbeddingExtractor& ex);

struct QualityGapVector {
  /// alpha_k * Q_k.
  std::vector<double> components;
  std::vector<double> unscaled;
  std::vector<double> scales;
  std::vector<std::string> component_ids;

  std::size_t size() const noexcept { return components.size(); }
};

inline constexpr const char* kMstftComponentId = "mstft";

/// [alpha_s Q_s for each extractor] ++ [alpha_M Q_M]. `alphas` holds one
/// entry per extractor followed by alpha_M.
QualityGapVector quality_gap_vector(
    const dsp::Waveform& y, const dsp::Waveform& g,
    std::span<const EmbeddingExtractor* const> extractors,
    std::span<const double> alphas,
    std::span<const dsp::StftConfig> resolutions);

/// |a - b|.
double toy_quality_gap(double a, double b);

using WaveformPair = std::pair<dsp::Waveform, dsp::Waveform>;

/// alpha_k = 1 / mean of the unscaled component over the batch.
std::vector<double> alpha_calibration(
    std::span<const WaveformPair> batch,
    std::span<const EmbeddingExtractor* const> extractors,
    std::span<const dsp::StftConfig> resolutions);

/// Same rule applied to precomputed unscaled components (rows = pairs).
std::vector<double> alphas_from_unscaled(
    const std::vector<std::vector<double>>& unscaled);

}  // namespace raf::quality
