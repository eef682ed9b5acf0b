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

using ad::Var;

void WaveToyConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (batch < 1) throw ConfigError("batch must be positive");
  if (chunk < 256) throw ConfigError("chunk must be at least 256 samples");
  if (segment_size < chunk || segment_size % chunk != 0)
    throw ConfigError("segment_size must be a positive multiple of chunk");
  if (envelope_bands < 1 || disc_mels < 1 || hidden < 1)
    throw ConfigError("band counts and hidden width must be positive");
  if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
  if (train_examples < batch) throw ConfigError("train_examples must be >= batch");
  if (heldout_examples < 2) throw ConfigError("heldout_examples must be >= 2");
  if (gp_interval < 1) throw ConfigError("gp_interval must be at least 1");
  if (alphas.size() != 3) throw ConfigError("alphas must have 3 entries");
  if (log_every < 1 || decay_every < 1) throw ConfigError("log_every and decay_every must be positive");
}

namespace {

constexpr std::size_t kHeads = 3;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNotes[] = {110.0, 146.8, 196.0, 261.6, 349.2};

struct WaveSet {
  // Rows are examples.
  std::vector<std::vector<double>> waves;
  // (chunks x bands) per example, standardized with training statistics.
  std::vector<Tensor> envelopes;
};

dsp::MelConfig envelope_config(const WaveToyConfig& cfg) {
  dsp::MelConfig m;
  m.n_mels = cfg.envelope_bands;
  m.fft_size = 1024;
  m.hop_size = 256;
  m.sample_rate = cfg.sample_rate;
  m.f_max = cfg.sample_rate / 2.0;
  return m;
}

dsp::MelConfig disc_config(const WaveToyConfig& cfg) {
  dsp::MelConfig m = envelope_config(cfg);
  m.n_mels = cfg.disc_mels;
  return m;
}

std::vector<double> synth_example(const WaveToyConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kNotes) - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0 = kNotes[pick(rng)];
  const double tilt = 0.5 + u(rng);
  std::vector<double> weights;
  double norm = 0.0;
  for (std::size_t h = 1; f0 * static_cast<double>(h) < 0.45 * cfg.sample_rate && h <= 12; ++h) {
    weights.push_back(std::pow(static_cast<double>(h), -tilt));
    norm += weights.back();
  }
  std::vector<double> out(cfg.segment_size);
  for (std::size_t c = 0; c < cfg.segment_size / cfg.chunk; ++c) {
    const double level = 0.1 + 0.4 * u(rng);
    for (std::size_t n = 0; n < cfg.chunk; ++n) {
      double v = 0.0;
      for (std::size_t h = 0; h < weights.size(); ++h)
        v += weights[h] * std::sin(kTwoPi * static_cast<double>(h + 1) * f0 *
                                   static_cast<double>(n) / cfg.sample_rate);
      out[c * cfg.chunk + n] = level * v / norm;
    }
  }
  return out;
}

Tensor raw_envelope(const WaveToyConfig& cfg, const std::vector<double>& wave) {
  const std::size_t chunks = cfg.segment_size / cfg.chunk;
  const dsp::MelConfig mel = envelope_config(cfg);
  Tensor env(Shape{chunks, cfg.envelope_bands});
  for (std::size_t c = 0; c < chunks; ++c) {
    const dsp::Waveform w(std::vector<double>(wave.begin() + c * cfg.chunk,
                                              wave.begin() + (c + 1) * cfg.chunk),
                          cfg.sample_rate);
    const Tensor m = dsp::mel_spectrogram(w, mel);
    for (std::size_t b = 0; b < cfg.envelope_bands; ++b) {
      double acc = 0.0;
      for (std::size_t f = 0; f < m.dim(0); ++f) acc += m.at(f, b);
      env.at(c, b) = acc / static_cast<double>(m.dim(0));
    }
  }
  return env;
}

struct Standardizer {
  std::vector<double> mean, inv_std;

  void apply(Tensor& env) const {
    for (std::size_t r = 0; r < env.dim(0); ++r)
      for (std::size_t b = 0; b < env.dim(1); ++b)
        env.at(r, b) = (env.at(r, b) - mean[b]) * inv_std[b];
  }
};

Standardizer fit_standardizer(const std::vector<Tensor>& envs) {
  const std::size_t bands = envs.front().dim(1);
  Standardizer s{std::vector<double>(bands, 0.0), std::vector<double>(bands, 0.0)};
  std::size_t n = 0;
  for (const Tensor& e : envs)
    for (std::size_t r = 0; r < e.dim(0); ++r, ++n)
      for (std::size_t b = 0; b < bands; ++b) s.mean[b] += e.at(r, b);
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(bands, 0.0);
  for (const Tensor& e : envs)
    for (std::size_t r = 0; r < e.dim(0); ++r)
      for (std::size_t b = 0; b < bands; ++b) {
        const double d = e.at(r, b) - s.mean[b];
        var[b] += d * d;
      }
  for (std::size_t b = 0; b < bands; ++b) {
    const double sd = std::sqrt(var[b] / static_cast<double>(n));
    s.inv_std[b] = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  return s;
}

std::pair<WaveSet, WaveSet> make_data(const WaveToyConfig& cfg) {
  std::mt19937_64 rng(detail::derive_seed(cfg.seed, 10));
  WaveSet train, heldout;
  for (std::size_t i = 0; i < cfg.train_examples; ++i) {
    train.waves.push_back(synth_example(cfg, rng));
    train.envelopes.push_back(raw_envelope(cfg, train.waves.back()));
  }
  for (std::size_t i = 0; i < cfg.heldout_examples; ++i) {
    heldout.waves.push_back(synth_example(cfg, rng));
    heldout.envelopes.push_back(raw_envelope(cfg, heldout.waves.back()));
  }
  const Standardizer st = fit_standardizer(train.envelopes);
  for (Tensor& e : train.envelopes) st.apply(e);
  for (Tensor& e : heldout.envelopes) st.apply(e);
  return {std::move(train), std::move(heldout)};
}

// Stacks the chunk envelopes of the selected examples: (B * chunks x bands).
Tensor stack_envelopes(const WaveSet& set, std::span<const std::size_t> idx) {
  const Tensor& first = set.envelopes[idx.front()];
  const std::size_t rows = first.dim(0), bands = first.dim(1);
  Tensor out(Shape{idx.size() * rows, bands});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Tensor& e = set.envelopes[idx[i]];
    std::copy(e.data().begin(), e.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * rows * bands));
  }
  return out;
}

Tensor stack_waves(const WaveSet& set, std::span<const std::size_t> idx) {
  const std::size_t len = set.waves[idx.front()].size();
  Tensor out(Shape{idx.size(), len});
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(set.waves[idx[i]].begin(), set.waves[idx[i]].end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * len));
  return out;
}

Var generate(const models::BoundMlp& gen, Var envelopes, std::size_t batch,
             std::size_t segment) {
  return ad::reshape(models::mlp_forward(gen, envelopes).out, Shape{batch, segment});
}

struct DiscOut {
  Var scores;                 // (B x K)
  std::vector<Var> features;  // (B x N_l)
};

// The discriminator sees fixed log-mel frames; penalties are taken with
// respect to these frames. Rows of a batch are stacked: (B * F x M).
Var frame_features(Var waves, const dsp::MelConfig& mel) {
  const std::size_t batch = waves.shape()[0];
  const std::size_t len = waves.shape()[1];
  std::vector<Var> rows;
  for (std::size_t b = 0; b < batch; ++b) {
    Var row = ad::reshape(ad::slice(waves, 0, b, b + 1), Shape{len});
    rows.push_back(ad::scale(ad::add_scalar(dsp::log_mel_spectrogram(row, mel), 8.0), 0.25));
  }
  return ad::concat(rows, 0);
}

Tensor frame_features(const Tensor& waves, const dsp::MelConfig& mel) {
  ad::Graph graph;
  return frame_features(graph.constant(waves), mel).value();
}

// Frame-wise MLP averaged over each example's frames. The paired variant
// feeds [frames(x), frames(reference)].
DiscOut discriminate(const models::BoundMlp& disc, Var frames, std::size_t batch,
                     const Var* reference) {
  const std::size_t rows = frames.shape()[0];
  const std::size_t per = rows / batch;
  Var in = frames;
  if (reference != nullptr) {
    const Var parts[] = {frames, *reference};
    in = ad::concat(parts, 1);
  }
  const models::MlpOutput o = models::mlp_forward(disc, in);
  Tensor avg(Shape{batch, rows});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t f = 0; f < per; ++f) avg.at(b, b * per + f) = 1.0 / static_cast<double>(per);
  DiscOut out;
  out.scores = ad::matmul(frames.graph()->constant(avg), o.out);
  for (Var h : o.features)
    out.features.push_back(ad::reshape(h, Shape{batch, per * h.shape()[1]}));
  return out;
}

struct QualityBatch {
  Tensor scaled;                          // (B x K)
  std::vector<std::vector<double>> unscaled;
};

class QualityOracle {
 public:
  QualityOracle(const WaveToyConfig& cfg)
      : cfg_(cfg),
        ex_w_(quality::make_extractor_w()),
        ex_h_(quality::make_extractor_h()),
        resolutions_(dsp::default_resolutions()) {
    resolutions_.erase(std::remove_if(resolutions_.begin(), resolutions_.end(),
                                      [&](const dsp::StftConfig& r) {
                                        return r.fft_size > cfg.segment_size;
                                      }),
                       resolutions_.end());
  }

  std::vector<std::string> ids() const {
    return {ex_w_.id(), ex_h_.id(), quality::kMstftComponentId};
  }

  QualityBatch evaluate(const Tensor& real, const Tensor& fake,
                        std::span<const double> alphas) const {
    const std::size_t batch = real.dim(0), len = real.dim(1);
    const quality::EmbeddingExtractor* ex[] = {&ex_w_, &ex_h_};
    QualityBatch q{Tensor(Shape{batch, kHeads}), {}};
    for (std::size_t b = 0; b < batch; ++b) {
      const auto row = [&](const Tensor& t) {
        const auto begin = t.data().begin() + static_cast<std::ptrdiff_t>(b * len);
        return dsp::Waveform(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(len)),
                             cfg_.sample_rate);
      };
      const quality::QualityGapVector v =
          quality::quality_gap_vector(row(real), row(fake), ex, alphas, resolutions_);
      for (std::size_t k = 0; k < kHeads; ++k) q.scaled.at(b, k) = v.components[k];
      q.unscaled.push_back(v.unscaled);
    }
    return q;
  }

 private:
  const WaveToyConfig& cfg_;
  quality::BaselineExtractor ex_w_;
  quality::BaselineExtractor ex_h_;
  std::vector<dsp::StftConfig> resolutions_;
};

struct LossVars {
  Var gen;
  Var disc;
};

// Adversarial terms for every objective. Baselines apply their per-score
// loss to each of the K heads and average.
LossVars adversarial(const WaveToyConfig& cfg, Var d_real, Var d_fake, Var quality) {
  namespace ob = objectives;
  switch (cfg.objective) {
    case Objective::kRaf: {
      Var gap = ob::discriminator_gap(d_real, d_fake, cfg.transform);
      return {ob::raf_gen_loss(gap), ob::raf_disc_loss(gap, quality)};
    }
    case Objective::kMetricGanRafV1: {
      const ob::LossPair p = ob::metricgan_raf_v1_losses(d_real, d_fake, quality);
      return {p.generator, p.discriminator};
    }
    case Objective::kMetricGanRafV2: {
      const ob::LossPair p = ob::metricgan_raf_v2_losses(d_real, d_fake, quality);
      return {p.generator, p.discriminator};
    }
    case Objective::kLsgan: {
      const ob::LossPair p = ob::lsgan_losses(d_real, d_fake);
      return {p.generator, p.discriminator};
    }
    case Objective::kHingeGan: {
      const ob::LossPair p = ob::hingegan_losses(d_real, d_fake);
      return {p.generator, p.discriminator};
    }
    case Objective::kRpganGp: {
      const ob::LossPair p = ob::rpgan_losses(d_real, d_fake, cfg.transform);
      return {p.generator, p.discriminator};
    }
  }
  throw ContractViolation("unknown objective");
}

}  // namespace

WaveToyReport run_wave_toy(const WaveToyConfig& cfg) {
  cfg.validate();
  const bool paired = cfg.objective == Objective::kMetricGanRafV1;
  const bool gp_enabled = cfg.use_gp || cfg.objective == Objective::kRpganGp;
  const dsp::MelConfig disc_mel = disc_config(cfg);
  dsp::MelConfig recon_mel = envelope_config(cfg);

  auto [train, heldout] = make_data(cfg);
  const QualityOracle oracle(cfg);

  models::Mlp gen({cfg.envelope_bands, cfg.hidden, cfg.hidden, cfg.chunk});
  models::Mlp disc({paired ? 2 * cfg.disc_mels : cfg.disc_mels, cfg.hidden, cfg.hidden, kHeads});
  models::init_params(gen, detail::derive_seed(cfg.seed, 1));
  models::init_params(disc, detail::derive_seed(cfg.seed, 2));
  const std::vector<Tensor*> gen_params = gen.parameters();
  const std::vector<Tensor*> disc_params = disc.parameters();
  models::OptimizerState gen_opt = models::make_optimizer(cfg.adam, gen_params);
  models::OptimizerState disc_opt = models::make_optimizer(cfg.adam, disc_params);

  auto fake_of = [&](const WaveSet& set, std::span<const std::size_t> idx) {
    const Tensor out = detail::mlp_eval(gen, stack_envelopes(set, idx));
    return Tensor(Shape{idx.size(), cfg.segment_size},
                  std::vector<double>(out.data().begin(), out.data().end()));
  };
  std::vector<std::size_t> all_train(cfg.train_examples), all_held(cfg.heldout_examples);
  for (std::size_t i = 0; i < all_train.size(); ++i) all_train[i] = i;
  for (std::size_t i = 0; i < all_held.size(); ++i) all_held[i] = i;

  WaveToyReport report;
  report.component_ids = oracle.ids();
  report.alphas = cfg.alphas;
  if (cfg.calibrate_alphas) {
    const std::vector<double> ones(kHeads, 1.0);
    report.alphas = quality::alphas_from_unscaled(
        oracle.evaluate(stack_waves(train, all_train), fake_of(train, all_train), ones)
            .unscaled);
  }

  const Tensor held_real = stack_waves(heldout, all_held);
  auto heldout_quality = [&]() {
    const QualityBatch q = oracle.evaluate(held_real, fake_of(heldout, all_held), report.alphas);
    std::vector<double> mean(kHeads, 0.0);
    for (std::size_t b = 0; b < q.scaled.dim(0); ++b)
      for (std::size_t k = 0; k < kHeads; ++k) mean[k] += q.scaled.at(b, k);
    for (double& m : mean) m /= static_cast<double>(q.scaled.dim(0));
    return std::make_pair(mean, q.scaled);
  };
  report.initial_quality = heldout_quality().first;

  std::mt19937_64 rng(detail::derive_seed(cfg.seed, 3));
  std::uniform_int_distribution<std::size_t> pick(0, cfg.train_examples - 1);

  struct Interval {
    double d = 0.0, g = 0.0, mel = 0.0, gap = 0.0;
    double gap_min = std::numeric_limits<double>::infinity();
    std::vector<double> q = std::vector<double>(kHeads, 0.0);
    std::size_t steps = 0, gaps = 0, rows = 0;
  } acc;

  for (long step = 0; step < cfg.steps; ++step) {
    try {
      const double lr = models::exp_lr_decay(
          cfg.adam.lr, static_cast<double>(step / cfg.decay_every), cfg.lr_decay);
      detail::set_learning_rate(gen_opt, lr);
      detail::set_learning_rate(disc_opt, lr);

      std::vector<std::size_t> idx(cfg.batch);
      for (std::size_t& i : idx) i = pick(rng);
      const Tensor real = stack_waves(train, idx);
      const Tensor env = stack_envelopes(train, idx);
      const Tensor fake = fake_of(train, idx);
      const QualityBatch q = oracle.evaluate(real, fake, report.alphas);

      {
        ad::Graph graph;
        const models::BoundMlp d = models::bind(graph, disc);
        Var real_in = graph.leaf(frame_features(real, disc_mel));
        Var fake_in = graph.leaf(frame_features(fake, disc_mel));
        Var ref = graph.constant(real_in.value());
        const DiscOut dr = discriminate(d, real_in, cfg.batch, paired ? &ref : nullptr);
        const DiscOut df = discriminate(d, fake_in, cfg.batch, paired ? &ref : nullptr);
        Var loss = adversarial(cfg, dr.scores, df.scores, graph.constant(q.scaled)).disc;
        if (gp_enabled && step % static_cast<long>(cfg.gp_interval) == 0) {
          const objectives::Penalties p = objectives::gradient_penalty(
              dr.scores, real_in, df.scores, fake_in, cfg.gamma);
          loss = ad::add(loss, ad::add(p.r1, p.r2));
        }
        const Tensor gap =
            objectives::discriminator_gap(dr.scores, df.scores, cfg.transform).value();
        for (double v : gap.data()) {
          acc.gap += v;
          acc.gap_min = std::min(acc.gap_min, v);
          ++acc.gaps;
        }
        acc.d += loss.item();
        const std::vector<Tensor> grads = ad::backward(loss, d.leaves());
        models::adamw_step(disc_opt, disc_params, grads);
      }

      {
        ad::Graph graph;
        const models::BoundMlp g = models::bind(graph, gen);
        const models::BoundMlp d = models::bind(graph, disc);
        Var real_c = graph.constant(real);
        Var fake_v = generate(g, graph.constant(env), cfg.batch, cfg.segment_size);
        Var real_f = graph.constant(frame_features(real, disc_mel));
        Var fake_f = frame_features(fake_v, disc_mel);
        const DiscOut dr = discriminate(d, real_f, cfg.batch, paired ? &real_f : nullptr);
        const DiscOut df = discriminate(d, fake_f, cfg.batch, paired ? &real_f : nullptr);
        Var adv = adversarial(cfg, dr.scores, df.scores, graph.constant(q.scaled)).gen;
        Var fm = objectives::feature_matching_loss(dr.features, df.features);
        Var mel;
        for (std::size_t b = 0; b < cfg.batch; ++b) {
          Var yr = ad::reshape(ad::slice(real_c, 0, b, b + 1), Shape{cfg.segment_size});
          Var gr = ad::reshape(ad::slice(fake_v, 0, b, b + 1), Shape{cfg.segment_size});
          Var term = objectives::mel_loss(yr, gr, recon_mel);
          mel = mel.valid() ? ad::add(mel, term) : term;
        }
        mel = ad::scale(mel, 1.0 / static_cast<double>(cfg.batch));
        Var loss = ad::add(adv, objectives::recon_loss(fm, mel, cfg.lambda_fm, cfg.lambda_mel));
        acc.g += loss.item();
        acc.mel += mel.item();
        const std::vector<Tensor> grads = ad::backward(loss, g.leaves());
        models::adamw_step(gen_opt, gen_params, grads);
      }

      for (std::size_t b = 0; b < cfg.batch; ++b)
        for (std::size_t k = 0; k < kHeads; ++k) acc.q[k] += q.scaled.at(b, k);
      acc.rows += cfg.batch;
      ++acc.steps;
    } catch (const NumericFault& e) {
      report.diverged = true;
      report.diagnostic = "step " + std::to_string(step) + ": " + e.what();
      break;
    }

    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) {
      WaveTraceRow row;
      row.step = step + 1;
      const double n = static_cast<double>(acc.steps);
      row.disc_loss = acc.d / n;
      row.gen_loss = acc.g / n;
      row.mel_loss = acc.mel / n;
      row.gap_mean = acc.gap / static_cast<double>(acc.gaps);
      row.gap_min = acc.gap_min;
      for (double v : acc.q) row.quality_mean.push_back(v / static_cast<double>(acc.rows));
      report.trace.push_back(std::move(row));
      acc = Interval{};
    }
  }

  const auto [final_mean, final_q] = heldout_quality();
  report.final_quality = final_mean;

  // Held-out discriminator gap against the quality gap.
  ad::Graph graph;
  const models::BoundMlp d = models::bind(graph, disc);
  Var real_f = graph.constant(frame_features(held_real, disc_mel));
  Var fake_f = graph.constant(frame_features(fake_of(heldout, all_held), disc_mel));
  const DiscOut dr = discriminate(d, real_f, cfg.heldout_examples, paired ? &real_f : nullptr);
  const DiscOut df = discriminate(d, fake_f, cfg.heldout_examples, paired ? &real_f : nullptr);
  Var gap = objectives::discriminator_gap(dr.scores, df.scores, cfg.transform);
  report.heldout_disc_loss =
      objectives::raf_disc_loss(gap, graph.constant(final_q)).item();
  const Tensor& gv = gap.value();
  const std::size_t n = gv.dim(0);
  std::vector<double> gap_sum(n, 0.0), q_sum(n, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t k = 0; k < kHeads; ++k) {
      gap_sum[b] += gv.at(b, k);
      q_sum[b] += final_q.at(b, k);
    }
  report.gap_quality_correlation = detail::pearson(gap_sum, q_sum);
  for (std::size_t k = 0; k < kHeads; ++k) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = gv.at(i, k);
      b[i] = final_q.at(i, k);
    }
    report.component_correlation.push_back(detail::pearson(a, b));
  }
  return report;
}

}  // namespace raf::experiments
