#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "raf/dsp.hpp"
#include "raf/models.hpp"
#include "raf/objectives.hpp"

namespace raf::experiments {

enum class Objective {
  kRaf,
  kMetricGanRafV1,
  kMetricGanRafV2,
  kLsgan,
  kHingeGan,
  kRpganGp,
};

std::string_view objective_name(Objective o);
/// Accepts the names produced by objective_name(); throws ConfigError.
Objective parse_objective(std::string_view name);
std::vector<Objective> all_objectives();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write results into slot i. The first
/// exception is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Two-cluster 1D toy

struct ToyConfig {
  std::vector<double> modes{0.0, 4.0};
  double mode_std = 0.2;
  double latent_std = 1.0;
  Objective objective = Objective::kRaf;
  long steps = 3000;
  std::size_t batch = 128;
  std::uint64_t seed = 0;
  std::size_t hidden = 32;
  bool use_gp = true;
  std::size_t gp_interval = 7;
  double gamma = 0.1;
  objectives::GapTransform transform = objectives::GapTransform::kSoftplus;
  /// Q = alpha * |y - g|. With calibrate_alpha, alpha is set so the
  /// untrained generator's mean Q is 1 and this field is ignored.
  double alpha = 1.0;
  bool calibrate_alpha = true;
  models::AdamWConfig adam{1e-3, 0.5, 0.99, 0.01, 1e-8};
  /// With a scalar input, zero biases put every first-layer kink at the
  /// origin; the toy spreads them instead.
  models::BiasInit bias_init = models::BiasInit::kFanInUniform;
  double lr_decay = 0.999;
  long decay_every = 1000;
  long log_every = 25;
  std::size_t eval_samples = 512;
  double coverage_radius = 0.5;
  double coverage_threshold = 0.2;
  int sustain_logs = 3;

  void validate() const;
};

struct ToyTraceRow {
  long step = 0;
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  std::vector<double> coverage;
  /// Gap statistics over the training steps since the previous row.
  double gap_mean = 0.0;
  double gap_min = 0.0;
  double quality_mean = 0.0;
  /// Generated samples for the fixed evaluation latents.
  std::vector<double> samples;
};

struct TrainTrace {
  double alpha = 1.0;
  std::vector<ToyTraceRow> rows;
  bool diverged = false;
  std::string diagnostic;
};

/// Fraction of samples within +-radius of each mode.
std::vector<double> mode_coverage(std::span<const double> samples,
                                  std::span<const double> modes, double radius);

/// First logged step at which every mode's coverage reaches `threshold` and
/// stays there for `sustain` consecutive rows; nullopt if never.
std::optional<long> steps_to_bimodality(const TrainTrace& trace,
                                        double threshold, int sustain);

/// 1D Wasserstein distance between the final samples and a reference draw
/// from the data distribution: the toy quality gap under optimal pairing.
double toy_final_quality(const TrainTrace& trace, const ToyConfig& cfg);

TrainTrace run_toy1d(const ToyConfig& cfg);

// ---------------------------------------------------------------------------
// Segment-size study

struct SegmentStudyConfig {
  std::vector<std::size_t> segment_sizes{2048, 4096, 8192, 16384, 24576, 32768};
  std::size_t full_length = 49152;
  std::size_t corpus_pairs = 12;
  std::size_t segments_per_size = 8;
  double sample_rate = 24000.0;
  std::uint64_t seed = 0;
  std::vector<double> alphas{10000.0, 10000.0, 1.0};
  /// Empty means: default resolutions whose FFT fits the smallest segment.
  std::vector<dsp::StftConfig> resolutions;
  bool identical_pairs = false;
  unsigned threads = 1;

  void validate() const;
};

struct SegmentStudyResult {
  std::vector<std::size_t> segment_sizes;
  std::vector<std::string> component_ids;
  /// errors[i][k]: size i, component k.
  std::vector<std::vector<double>> errors;
  /// Spearman correlation of log(size) and error per component; NaN with
  /// fewer than two sizes.
  std::vector<double> spearman;
};

SegmentStudyResult run_segment_size_study(const SegmentStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Waveform toy, end-to-end training

struct WaveToyConfig {
  std::uint64_t seed = 0;
  long steps = 1500;
  std::size_t batch = 4;
  std::size_t chunk = 1024;
  std::size_t segment_size = 8192;
  std::size_t envelope_bands = 8;
  /// Log-mel bands of the discriminator's frame features.
  std::size_t disc_mels = 32;
  std::size_t hidden = 32;
  double sample_rate = 24000.0;
  std::size_t train_examples = 48;
  std::size_t heldout_examples = 64;
  Objective objective = Objective::kRaf;
  objectives::GapTransform transform = objectives::GapTransform::kSoftplus;
  bool use_gp = true;
  std::size_t gp_interval = 7;
  double gamma = 0.1;
  double lambda_fm = 1.0;
  double lambda_mel = 26.0;
  models::AdamWConfig adam{1e-3, 0.8, 0.99, 0.01, 1e-8};
  double lr_decay = 0.999;
  long decay_every = 1000;
  /// Used as given when calibrate_alphas is false.
  std::vector<double> alphas{10000.0, 10000.0, 1.0};
  bool calibrate_alphas = true;
  long log_every = 50;

  void validate() const;
};

struct WaveTraceRow {
  long step = 0;
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  double mel_loss = 0.0;
  double gap_mean = 0.0;
  double gap_min = 0.0;
  std::vector<double> quality_mean;
};

struct WaveToyReport {
  std::vector<std::string> component_ids;
  std::vector<double> alphas;
  /// Held-out means of the scaled quality components.
  std::vector<double> initial_quality;
  std::vector<double> final_quality;
  /// Pearson correlation between per-sample summed gap and summed Q.
  double gap_quality_correlation = 0.0;
  std::vector<double> component_correlation;
  double heldout_disc_loss = 0.0;
  std::vector<WaveTraceRow> trace;
  bool diverged = false;
  std::string diagnostic;
};

WaveToyReport run_wave_toy(const WaveToyConfig& cfg);

// ---------------------------------------------------------------------------
// Objective comparison grid

enum class CompareTask { kToy1d, kWaveToy };

struct CompareConfig {
  std::vector<Objective> objectives = all_objectives();
  std::vector<bool> long_settings{false, true};
  std::vector<bool> gp_settings{false, true};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<CompareTask> tasks{CompareTask::kToy1d};
  ToyConfig toy;
  WaveToyConfig wave;
  std::size_t short_segment = 8192;
  std::size_t long_segment = 24576;
  unsigned threads = 1;

  void validate() const;
};

struct CompareRow {
  CompareTask task = CompareTask::kToy1d;
  Objective objective = Objective::kRaf;
  bool long_segments = false;
  bool gp = false;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  double median_final_quality = 0.0;
  /// Toy only; nullopt when fewer than half the seeds become bimodal.
  std::optional<double> median_steps_to_bimodality;
  std::size_t bimodal_runs = 0;
};

std::vector<CompareRow> run_objective_comparison(const CompareConfig& cfg);

}  // namespace raf::experiments
