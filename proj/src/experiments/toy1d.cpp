#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "common.hpp"
#include "raf/errors.hpp"
#include "raf/experiments.hpp"
#include "raf/quality_gap.hpp"

namespace raf::experiments {

using ad::Var;
using objectives::GapTransform;

void ToyConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (gp_interval < 1) throw ConfigError("gp_interval must be at least 1");
  if (modes.size() < 2) throw ConfigError("toy needs at least two modes");
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j)
      if (modes[i] == modes[j]) throw ConfigError("toy modes must be distinct");
  if (batch < 1 || hidden < 1) throw ConfigError("batch and hidden must be positive");
  if (mode_std < 0.0 || latent_std <= 0.0) throw ConfigError("invalid toy spread");
  if (log_every < 1) throw ConfigError("log_every must be positive");
  if (decay_every < 1) throw ConfigError("decay_every must be positive");
  if (coverage_radius <= 0.0) throw ConfigError("coverage radius must be positive");
  if (eval_samples < 1) throw ConfigError("eval_samples must be positive");
  if (!calibrate_alpha && alpha <= 0.0) throw ConfigError("alpha must be positive");
  if (sustain_logs < 1) throw ConfigError("sustain_logs must be positive");
}

std::vector<double> mode_coverage(std::span<const double> samples,
                                  std::span<const double> modes,
                                  double radius) {
  RAF_REQUIRE(radius > 0.0, "coverage radius must be positive");
  std::vector<double> out(modes.size(), 0.0);
  if (samples.empty()) return out;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::size_t hits = 0;
    for (double s : samples)
      if (std::fabs(s - modes[m]) <= radius) ++hits;
    out[m] = static_cast<double>(hits) / static_cast<double>(samples.size());
  }
  return out;
}

std::optional<long> steps_to_bimodality(const TrainTrace& trace,
                                        double threshold, int sustain) {
  const auto& rows = trace.rows;
  auto covered = [&](const ToyTraceRow& r) {
    return !r.coverage.empty() &&
           std::all_of(r.coverage.begin(), r.coverage.end(),
                       [&](double c) { return c >= threshold; });
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i + static_cast<std::size_t>(sustain) > rows.size()) break;
    bool ok = true;
    for (int k = 0; k < sustain && ok; ++k) ok = covered(rows[i + k]);
    if (ok) return rows[i].step;
  }
  return std::nullopt;
}

namespace {

class ToyData {
 public:
  ToyData(const ToyConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed), pick_(0, cfg.modes.size() - 1) {}

  std::vector<double> real(std::size_t n) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> out(n);
    for (double& v : out) {
      const std::size_t m = pick_(rng_);
      v = cfg_.modes[m] + cfg_.mode_std * noise(rng_);
    }
    return out;
  }

  std::vector<double> latent(std::size_t n) {
    std::normal_distribution<double> noise(0.0, cfg_.latent_std);
    std::vector<double> out(n);
    for (double& v : out) v = noise(rng_);
    return out;
  }

 private:
  const ToyConfig& cfg_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::size_t> pick_;
};

Tensor column(const std::vector<double>& v) {
  return Tensor(Shape{v.size(), 1}, v);
}

Tensor pair_columns(const std::vector<double>& a, const std::vector<double>& b) {
  Tensor t(Shape{a.size(), 2});
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.at(i, 0) = a[i];
    t.at(i, 1) = b[i];
  }
  return t;
}

struct GapStats {
  double sum = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double quality = 0.0;
  std::size_t n = 0;
  std::size_t nq = 0;

  void add_gap(const Tensor& g) {
    for (double v : g.data()) {
      sum += v;
      min = std::min(min, v);
      ++n;
    }
  }
  void add_quality(const Tensor& q) {
    for (double v : q.data()) {
      quality += v;
      ++nq;
    }
  }
};

struct ToyModels {
  models::Mlp gen;
  models::Mlp disc;
};

// Scores of the real and fake batch under the objective's input convention.
struct Scores {
  Var real;
  Var fake;
};

Scores score(const ToyConfig& cfg, const models::BoundMlp& disc, Var real_in,
             Var fake_in) {
  Var r = models::mlp_forward(disc, real_in).out;
  Var f = models::mlp_forward(disc, fake_in).out;
  if (cfg.objective == Objective::kMetricGanRafV1) {
    // MetricGAN-style bounded head replaced by softplus for Q in [0, inf)
    r = ad::softplus(r);
    f = ad::softplus(f);
  }
  return {r, f};
}

}  // namespace

TrainTrace run_toy1d(const ToyConfig& cfg) {
  cfg.validate();
  const bool paired = cfg.objective == Objective::kMetricGanRafV1;
  const bool gp_enabled = cfg.use_gp || cfg.objective == Objective::kRpganGp;

  ToyModels m{models::Mlp({1, cfg.hidden, cfg.hidden, 1}),
              models::Mlp({paired ? 2u : 1u, cfg.hidden, cfg.hidden, 1})};
  models::init_params(m.gen, detail::derive_seed(cfg.seed, 1), cfg.bias_init);
  models::init_params(m.disc, detail::derive_seed(cfg.seed, 2), cfg.bias_init);
  const std::vector<Tensor*> gen_params = m.gen.parameters();
  const std::vector<Tensor*> disc_params = m.disc.parameters();
  models::OptimizerState gen_opt = models::make_optimizer(cfg.adam, gen_params);
  models::OptimizerState disc_opt = models::make_optimizer(cfg.adam, disc_params);

  ToyData data(cfg, detail::derive_seed(cfg.seed, 3));
  ToyData eval_data(cfg, detail::derive_seed(cfg.seed, 4));
  const Tensor eval_latent = column(eval_data.latent(cfg.eval_samples));

  TrainTrace trace;
  trace.alpha = cfg.alpha;
  if (cfg.calibrate_alpha) {
    ToyData calib(cfg, detail::derive_seed(cfg.seed, 6));
    const std::vector<double> y = calib.real(cfg.eval_samples);
    const Tensor g = detail::mlp_eval(m.gen, column(calib.latent(cfg.eval_samples)));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < y.size(); ++i)
      rows.push_back({quality::toy_quality_gap(y[i], g[i])});
    trace.alpha = quality::alphas_from_unscaled(rows).front();
  }
  GapStats stats;
  double last_d = 0.0, last_g = 0.0;

  auto log_row = [&](long step) {
    ToyTraceRow row;
    row.step = step;
    row.disc_loss = last_d;
    row.gen_loss = last_g;
    const Tensor s = detail::mlp_eval(m.gen, eval_latent);
    row.samples.assign(s.data().begin(), s.data().end());
    row.coverage = mode_coverage(row.samples, cfg.modes, cfg.coverage_radius);
    if (stats.n > 0) {
      row.gap_mean = stats.sum / static_cast<double>(stats.n);
      row.gap_min = stats.min;
    }
    if (stats.nq > 0) row.quality_mean = stats.quality / static_cast<double>(stats.nq);
    stats = GapStats{};
    trace.rows.push_back(std::move(row));
  };

  log_row(0);

  for (long step = 0; step < cfg.steps; ++step) {
    try {
      const double lr = models::exp_lr_decay(
          cfg.adam.lr, static_cast<double>(step / cfg.decay_every), cfg.lr_decay);
      detail::set_learning_rate(gen_opt, lr);
      detail::set_learning_rate(disc_opt, lr);

      const std::vector<double> y = data.real(cfg.batch);
      const std::vector<double> z = data.latent(cfg.batch);
      const Tensor fake = detail::mlp_eval(m.gen, column(z));
      const std::vector<double> g(fake.data().begin(), fake.data().end());
      Tensor quality(Shape{cfg.batch, 1});
      for (std::size_t i = 0; i < cfg.batch; ++i)
        quality[i] = trace.alpha * quality::toy_quality_gap(y[i], g[i]);

      // Discriminator update.
      {
        ad::Graph graph;
        const models::BoundMlp disc = models::bind(graph, m.disc);
        Var real_in = graph.leaf(paired ? pair_columns(y, y) : column(y));
        Var fake_in = graph.leaf(paired ? pair_columns(g, y) : column(g));
        const Scores s = score(cfg, disc, real_in, fake_in);
        Var q = graph.constant(quality);
        Var loss;
        switch (cfg.objective) {
          case Objective::kRaf: {
            Var gap = objectives::discriminator_gap(s.real, s.fake, cfg.transform);
            stats.add_gap(gap.value());
            loss = objectives::raf_disc_loss(gap, q);
            break;
          }
          case Objective::kMetricGanRafV1:
            loss = objectives::metricgan_raf_v1_losses(s.real, s.fake, q).discriminator;
            break;
          case Objective::kMetricGanRafV2:
            loss = objectives::metricgan_raf_v2_losses(s.real, s.fake, q).discriminator;
            break;
          case Objective::kLsgan:
            loss = objectives::lsgan_losses(s.real, s.fake).discriminator;
            break;
          case Objective::kHingeGan:
            loss = objectives::hingegan_losses(s.real, s.fake).discriminator;
            break;
          case Objective::kRpganGp:
            loss = objectives::rpgan_losses(s.real, s.fake, cfg.transform).discriminator;
            break;
        }
        if (cfg.objective != Objective::kRaf) {
          stats.add_gap(objectives::discriminator_gap(s.real, s.fake, cfg.transform)
                            .value());
        }
        stats.add_quality(quality);
        if (gp_enabled && step % static_cast<long>(cfg.gp_interval) == 0) {
          const objectives::Penalties p = objectives::gradient_penalty(
              s.real, real_in, s.fake, fake_in, cfg.gamma);
          loss = ad::add(loss, ad::add(p.r1, p.r2));
        }
        last_d = loss.item();
        const std::vector<Var> leaves = disc.leaves();
        const std::vector<Tensor> grads = ad::backward(loss, leaves);
        models::adamw_step(disc_opt, disc_params, grads);
      }

      // Generator update against the refreshed discriminator.
      {
        ad::Graph graph;
        const models::BoundMlp gen = models::bind(graph, m.gen);
        const models::BoundMlp disc = models::bind(graph, m.disc);
        Var fake_out = models::mlp_forward(gen, graph.constant(column(z))).out;
        Var real_c = graph.constant(column(y));
        Var fake_in = fake_out;
        Var real_in = real_c;
        if (paired) {
          const Var parts_fake[] = {fake_out, real_c};
          const Var parts_real[] = {real_c, real_c};
          fake_in = ad::concat(parts_fake, 1);
          real_in = ad::concat(parts_real, 1);
        }
        const Scores s = score(cfg, disc, real_in, fake_in);
        Var loss;
        switch (cfg.objective) {
          case Objective::kRaf:
            loss = objectives::raf_gen_loss(
                objectives::discriminator_gap(s.real, s.fake, cfg.transform));
            break;
          case Objective::kMetricGanRafV1:
            loss = objectives::metricgan_raf_v1_losses(s.real, s.fake,
                                                       graph.constant(quality))
                       .generator;
            break;
          case Objective::kMetricGanRafV2:
            loss = objectives::metricgan_raf_v2_losses(s.real, s.fake,
                                                       graph.constant(quality))
                       .generator;
            break;
          case Objective::kLsgan:
            loss = objectives::lsgan_losses(s.real, s.fake).generator;
            break;
          case Objective::kHingeGan:
            loss = objectives::hingegan_losses(s.real, s.fake).generator;
            break;
          case Objective::kRpganGp:
            loss = objectives::rpgan_losses(s.real, s.fake, cfg.transform).generator;
            break;
        }
        last_g = loss.item();
        const std::vector<Var> leaves = gen.leaves();
        const std::vector<Tensor> grads = ad::backward(loss, leaves);
        models::adamw_step(gen_opt, gen_params, grads);
      }
    } catch (const NumericFault& e) {
      trace.diverged = true;
      trace.diagnostic = "step " + std::to_string(step) + ": " + e.what();
      return trace;
    }

    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) log_row(step + 1);
  }
  return trace;
}

double toy_final_quality(const TrainTrace& trace, const ToyConfig& cfg) {
  RAF_REQUIRE(!trace.rows.empty(), "empty toy trace");
  std::vector<double> fake = trace.rows.back().samples;
  ToyData ref(cfg, detail::derive_seed(cfg.seed, 5));
  std::vector<double> real = ref.real(fake.size());
  std::sort(fake.begin(), fake.end());
  std::sort(real.begin(), real.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < fake.size(); ++i) acc += std::fabs(fake[i] - real[i]);
  return acc / static_cast<double>(fake.size());
}

}  // namespace raf::experiments
