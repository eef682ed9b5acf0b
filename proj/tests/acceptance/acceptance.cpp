// Acceptance run: one PASS/FAIL line per criterion.
//
//   raf_acceptance [--strict] [N ...]
//
// With no numbers every criterion runs. Criteria listed in kKnownRed print
// their real verdict but do not change the exit status unless --strict is
// given.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../support/gradcheck.hpp"
#include "../support/op_cases.hpp"
#include "lab/commands.hpp"
#include "lab/config.hpp"
#include "raf/dsp.hpp"
#include "raf/experiments.hpp"
#include "raf/models.hpp"
#include "raf/objectives.hpp"
#include "raf/quality_gap.hpp"

namespace {

namespace fs = std::filesystem;
namespace ad = raf::ad;
namespace ex = raf::experiments;
namespace ob = raf::objectives;
namespace q = raf::quality;
using raf::Shape;
using raf::Tensor;
using raf::ad::Graph;
using raf::ad::Var;
using raf::testing::gradient_check;
using raf::testing::random_tensor;

const std::set<int> kKnownRed{4};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned worker_count() {
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// 1. Gradients of every op and composite loss against central differences.

Verdict gradient_correctness() {
  std::size_t checked = 0;
  double worst = 0.0;
  std::string worst_name;
  auto record = [&](const std::string& name, double err) {
    ++checked;
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  for (const auto& c : raf::testing::op_cases())
    for (int k = 0; k < 4; ++k) {
      std::mt19937_64 rng(20000 + 31 * checked);
      std::vector<Tensor> inputs;
      for (const Shape& s : c.shapes) inputs.push_back(random_tensor(s, rng, c.lo, c.hi, c.gap));
      const std::uint64_t wseed = 500 + checked;
      record(c.name, gradient_check(
                         [&](Graph&, std::span<const Var> v) {
                           return raf::testing::contract(c.op(v), wseed);
                         },
                         inputs));
    }

  using LossFn = std::function<Var(Var, Var, Var)>;
  const std::vector<std::pair<std::string, LossFn>> losses{
      {"raf_disc", [](Var r, Var f, Var qq) { return ob::raf_disc_loss(ob::discriminator_gap(r, f), qq); }},
      {"raf_gen", [](Var r, Var f, Var) { return ob::raf_gen_loss(ob::discriminator_gap(r, f)); }},
      {"lsgan_gen", [](Var r, Var f, Var) { return ob::lsgan_losses(r, f).generator; }},
      {"lsgan_disc", [](Var r, Var f, Var) { return ob::lsgan_losses(r, f).discriminator; }},
      {"rpgan_gen", [](Var r, Var f, Var) { return ob::rpgan_losses(r, f).generator; }},
      {"rpgan_disc", [](Var r, Var f, Var) { return ob::rpgan_losses(r, f).discriminator; }},
      {"hinge_gen", [](Var r, Var f, Var) { return ob::hingegan_losses(r, f).generator; }},
      {"hinge_disc", [](Var r, Var f, Var) { return ob::hingegan_losses(r, f).discriminator; }},
      {"mg_v1_disc", [](Var r, Var f, Var qq) { return ob::metricgan_raf_v1_losses(r, f, qq).discriminator; }},
      {"mg_v1_gen", [](Var r, Var f, Var qq) { return ob::metricgan_raf_v1_losses(r, f, qq).generator; }},
      {"mg_v2_disc", [](Var r, Var f, Var qq) { return ob::metricgan_raf_v2_losses(r, f, qq).discriminator; }},
      {"mg_v2_gen", [](Var r, Var f, Var qq) { return ob::metricgan_raf_v2_losses(r, f, qq).generator; }},
      {"feature_matching", [](Var r, Var f, Var) {
         const std::vector<Var> a{r}, b{f};
         return ob::feature_matching_loss(a, b);
       }},
  };
  for (const auto& [name, fn] : losses)
    for (int k = 0; k < 5; ++k) {
      std::mt19937_64 rng(30000 + 17 * checked);
      const double gap = name.starts_with("hinge") ? 1.2 : 0.05;
      Tensor r = random_tensor(Shape{3, 3}, rng, -3, 3, gap);
      Tensor f = random_tensor(Shape{3, 3}, rng, -3, 3, gap);
      if (name == "feature_matching")
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = r[i] + (f[i] > 0 ? 0.5 : -0.5);
      const Tensor qq = random_tensor(Shape{3, 3}, rng, 0, 2);
      record(name, gradient_check(
                       [&](Graph&, std::span<const Var> v) { return fn(v[0], v[1], v[2]); },
                       {r, f, qq}));
    }

  // Zero-centered penalties, differentiated w.r.t. a small tanh
  // discriminator's parameters.
  for (int k = 0; k < 5; ++k) {
    std::mt19937_64 rng(40000 + k);
    const Tensor real = random_tensor(Shape{4, 2}, rng), fake = random_tensor(Shape{4, 2}, rng);
    const double err = gradient_check(
        [&](Graph& g, std::span<const Var> v) {
          const Var xr = g.leaf(real), xf = g.leaf(fake);
          auto d = [&](Var x) { return ad::matmul(ad::tanh(ad::matmul(x, v[0])), v[1]); };
          const auto p = ob::gradient_penalty(d(xr), xr, d(xf), xf, 0.1);
          return ad::add(p.r1, ad::scale(p.r2, 0.7));
        },
        {random_tensor(Shape{2, 5}, rng), random_tensor(Shape{5, 3}, rng)});
    record("gradient_penalty", err);
  }

  raf::dsp::MelConfig mel;
  mel.n_mels = 6;
  mel.fft_size = 64;
  mel.hop_size = 16;
  mel.sample_rate = 4000.0;
  mel.f_max = 2000.0;
  const std::vector<raf::dsp::StftConfig> res{{32, 8}, {64, 16}};
  for (int k = 0; k < 4; ++k) {
    std::mt19937_64 rng(50000 + k);
    const Tensor y = random_tensor(Shape{160}, rng, -0.5, 0.5);
    const Tensor g = random_tensor(Shape{160}, rng, -0.5, 0.5);
    record("mel_loss", gradient_check(
                           [&](Graph& gr, std::span<const Var> v) {
                             return ob::mel_loss(gr.constant(y), v[0], mel);
                           },
                           {g}, 1e-6));
    record("mstft", gradient_check(
                        [&](Graph& gr, std::span<const Var> v) {
                          return raf::dsp::mstft_distance(gr.constant(y), v[0], res);
                        },
                        {g}));
  }

  const bool ok = checked >= 100 && worst < 1e-4;
  return {ok, fmt("%zu checks, worst relative error %.2e (%s)", checked, worst,
                  worst_name.c_str())};
}

// ---------------------------------------------------------------------------
// 2. Closed-form loss identities.

Verdict loss_identities() {
  Graph g;
  const double ln2 = std::numbers::ln2;
  std::vector<std::pair<std::string, double>> errs;
  auto check = [&](const std::string& name, double got, double want) {
    errs.emplace_back(name, std::fabs(got - want));
  };
  auto s = [&](double v) { return g.scalar(v); };
  auto row = [&](std::vector<double> v) {
    const std::size_t k = v.size();
    return g.constant(Tensor(Shape{1, k}, std::move(v)));
  };

  check("softplus(0)", ad::softplus(s(0)).item(), ln2);
  check("f(0)", ob::f_transform(s(0)).item(), -ln2);
  check("gap(a,a)", ob::discriminator_gap(s(1.7), s(1.7)).item(), ln2);
  check("raf_disc(gap=Q)", ob::raf_disc_loss(row({0.3, 0.2, 0.9}), row({0.3, 0.2, 0.9})).item(), 0);
  check("raf_disc(ln2,0)", ob::raf_disc_loss(row({ln2, ln2, ln2}), row({0, 0, 0})).item(),
        3 * ln2 * ln2);
  check("raf_gen(ln2)", ob::raf_gen_loss(row({ln2, ln2, ln2})).item(), ln2);
  check("raf_gen mean", ob::raf_gen_loss(row({0.1, 0.2, 0.3})).item(), 0.2);
  check("lsgan gen optimum", ob::lsgan_losses(s(0.3), s(1)).generator.item(), 0);
  check("lsgan disc optimum", ob::lsgan_losses(s(1), s(0)).discriminator.item(), 0);
  check("lsgan 0.5 gen", ob::lsgan_losses(s(0.5), s(0.5)).generator.item(), 0.25);
  check("lsgan 0.5 disc", ob::lsgan_losses(s(0.5), s(0.5)).discriminator.item(), 0.5);
  check("rpgan equal gen", ob::rpgan_losses(s(2), s(2)).generator.item(), -ln2);
  check("rpgan equal disc", ob::rpgan_losses(s(2), s(2)).discriminator.item(), -ln2);
  check("hinge saturation", ob::hingegan_losses(row({1.0, 3.0}), row({-1.0, -2.0})).discriminator.item(), 0);
  check("hinge gen at 0", ob::hingegan_losses(s(0.4), s(0)).generator.item(), 0);
  check("hinge disc at 0", ob::hingegan_losses(s(0), s(0)).discriminator.item(), 2);
  check("v1 identical", ob::metricgan_raf_v1_losses(s(0), s(0), s(0)).discriminator.item(), 0);
  check("v1 arithmetic", ob::metricgan_raf_v1_losses(s(0.1), s(0.5), s(0.4)).discriminator.item(), 0.02);
  check("v2 optimum", ob::metricgan_raf_v2_losses(s(0), s(0.6), s(0.6)).discriminator.item(), 0);
  check("v2 gen at 0", ob::metricgan_raf_v2_losses(s(0.3), s(0), s(0.6)).generator.item(), 0);
  check("v2 arithmetic disc", ob::metricgan_raf_v2_losses(s(0.2), s(0.3), s(0.1)).discriminator.item(), 0.08);
  check("v2 arithmetic gen", ob::metricgan_raf_v2_losses(s(0.2), s(0.3), s(0.1)).generator.item(), 0.09);
  check("recon zero", ob::recon_loss(s(0), s(0)).item(), 0);
  check("recon defaults", ob::recon_loss(s(2), s(1)).item(), 28);
  check("recon linear", ob::recon_loss(s(4), s(2)).item(), 2 * ob::recon_loss(s(2), s(1)).item());
  check("recon lambda_mel 0", ob::recon_loss(s(2), s(1), 1.0, 0.0).item(), 2);
  check("total no gp", ob::total_losses(s(0.5), s(1), s(28), s(2.5), s(0.5), false).discriminator.item(), 1);
  check("total gen", ob::total_losses(s(0.5), s(1), s(28), s(2.5), s(0.5), false).generator.item(), 28.5);
  check("total gp", ob::total_losses(s(0.5), s(1), s(28), s(2.5), s(0.5), true).discriminator.item(), 4);
  check("fm identical", ob::feature_matching_loss(std::vector<Var>{row({1, 2})}, std::vector<Var>{row({1, 2})}).item(), 0);
  check("fm unit diff",
        ob::feature_matching_loss(std::vector<Var>{row({1, 2, 3, 4})}, std::vector<Var>{row({2, 3, 4, 5})}).item(), 1);
  check("toy gap", q::toy_quality_gap(-1.5, 2), 3.5);
  check("toy gap modes", q::toy_quality_gap(0, 4), 4);

  double worst = 0.0;
  std::string name;
  for (const auto& [n, e] : errs)
    if (!(e <= worst)) {
      worst = e;
      name = n;
    }
  return {worst <= 1e-12,
          fmt("%zu identities, worst error %.1e%s%s", errs.size(), worst,
              name.empty() ? "" : " at ", name.c_str())};
}

// ---------------------------------------------------------------------------
// 3. Zero-centered penalty of a linear discriminator.

// gamma * mean_b ||grad_x (x . w)||^2 with the input gradient taken by
// central differences.
double numeric_penalty(const Tensor& w, const Tensor& batch, double gamma) {
  const double h = 1e-5;
  auto d = [&](const std::vector<double>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i];
    return acc;
  };
  double total = 0.0;
  for (std::size_t b = 0; b < batch.dim(0); ++b) {
    std::vector<double> x{batch.at(b, 0), batch.at(b, 1)};
    double norm = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double keep = x[i];
      x[i] = keep + h;
      const double up = d(x);
      x[i] = keep - h;
      const double down = d(x);
      x[i] = keep;
      const double gi = (up - down) / (2 * h);
      norm += gi * gi;
    }
    total += norm;
  }
  return gamma * total / static_cast<double>(batch.dim(0));
}

Verdict zero_gp_check() {
  const double gamma = 0.1;
  const Tensor w = Tensor::matrix(2, 1, {3.0, 4.0});
  std::mt19937_64 rng(7);
  double worst_value = 0.0, worst_grad = 0.0, worst_fd = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor real = random_tensor(Shape{3 + static_cast<std::size_t>(trial), 2}, rng, -5, 5);
    const Tensor fake = random_tensor(Shape{4, 2}, rng, -5, 5);
    Graph g;
    const Var vw = g.leaf(w), xr = g.leaf(real), xf = g.leaf(fake);
    const auto p = ob::gradient_penalty(ad::matmul(xr, vw), xr, ad::matmul(xf, vw), xf, gamma);
    worst_value = std::max({worst_value, std::fabs(p.r1.item() - 2.5), std::fabs(p.r2.item() - 2.5)});
    const std::vector<Var> wrt{vw};
    const Tensor grad = ad::backward(p.r1, wrt)[0];
    // Analytic 2 gamma w, and finite differences of the numeric penalty.
    for (std::size_t i = 0; i < 2; ++i) {
      worst_grad = std::max(worst_grad, std::fabs(grad[i] - 2 * gamma * w[i]));
      Tensor up = w, down = w;
      up[i] += 1e-4;
      down[i] -= 1e-4;
      const double fd = (numeric_penalty(up, real, gamma) - numeric_penalty(down, real, gamma)) / 2e-4;
      worst_fd = std::max(worst_fd, std::fabs(grad[i] - fd) / std::fabs(fd));
    }
  }
  return {worst_value < 1e-12 && worst_grad < 1e-12 && worst_fd < 1e-4,
          fmt("R1=R2=2.5 within %.1e over 5 batches; |grad - 2 gamma w| %.1e; FD rel err %.1e",
              worst_value, worst_grad, worst_fd)};
}

// ---------------------------------------------------------------------------
// 4. Two-cluster toy: steps to bimodality per objective.

struct ToyRuns {
  std::map<ex::Objective, std::vector<ex::TrainTrace>> traces;
  ex::ToyConfig base;
};

ToyRuns& toy_runs() {
  static ToyRuns runs = [] {
    ToyRuns r;
    const std::vector<ex::Objective> objs{ex::Objective::kRaf, ex::Objective::kMetricGanRafV2,
                                          ex::Objective::kMetricGanRafV1};
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<ex::TrainTrace> flat(objs.size() * seeds.size());
    ex::parallel_for(flat.size(), worker_count(), [&](std::size_t i) {
      ex::ToyConfig c = r.base;
      c.objective = objs[i / seeds.size()];
      c.seed = seeds[i % seeds.size()];
      flat[i] = ex::run_toy1d(c);
    });
    for (std::size_t i = 0; i < flat.size(); ++i)
      r.traces[objs[i / seeds.size()]].push_back(std::move(flat[i]));
    return r;
  }();
  return runs;
}

// Median with never-bimodal runs counted as +infinity.
double median_steps(const std::vector<std::optional<long>>& steps) {
  std::vector<double> v;
  for (const auto& s : steps)
    v.push_back(s ? static_cast<double>(*s) : std::numeric_limits<double>::infinity());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string list_steps(const std::vector<std::optional<long>>& steps) {
  std::string out = "[";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += " ";
    out += steps[i] ? std::to_string(*steps[i]) : "-";
  }
  return out + "]";
}

Verdict toy_bimodality() {
  ToyRuns& runs = toy_runs();
  const double budget = static_cast<double>(runs.base.steps);
  std::map<ex::Objective, std::vector<std::optional<long>>> steps;
  for (const auto& [o, traces] : runs.traces)
    for (const auto& t : traces)
      steps[o].push_back(ex::steps_to_bimodality(t, runs.base.coverage_threshold,
                                                 runs.base.sustain_logs));
  const double raf = median_steps(steps[ex::Objective::kRaf]);
  const double v2 = median_steps(steps[ex::Objective::kMetricGanRafV2]);
  std::size_t v1_fail = 0;
  for (const auto& s : steps[ex::Objective::kMetricGanRafV1]) v1_fail += !s.has_value();
  const std::size_t seeds = steps[ex::Objective::kMetricGanRafV1].size();
  const bool ok = raf < v2 && v2 < budget && 2 * v1_fail >= seeds;
  return {ok, fmt("median steps RAF %g %s, v2 %g %s, budget %g; v1 never bimodal on %zu/%zu seeds",
                  raf, list_steps(steps[ex::Objective::kRaf]).c_str(), v2,
                  list_steps(steps[ex::Objective::kMetricGanRafV2]).c_str(), budget, v1_fail, seeds)};
}

// ---------------------------------------------------------------------------
// 5. Segment-size study.

Verdict segment_size_direction() {
  ex::SegmentStudyConfig c;
  c.threads = worker_count();
  const auto r = ex::run_segment_size_study(c);
  bool ok = true;
  std::string detail;
  const auto at = [&](std::size_t size) {
    return static_cast<std::size_t>(std::find(r.segment_sizes.begin(), r.segment_sizes.end(), size) -
                                    r.segment_sizes.begin());
  };
  for (std::size_t k = 0; k < r.component_ids.size(); ++k) {
    const bool shorter_worse = r.errors[at(24576)][k] < r.errors[at(8192)][k];
    ok = ok && r.spearman[k] <= -0.8 && shorter_worse;
    detail += fmt("%s%s spearman %.3f", k ? ", " : "", r.component_ids[k].c_str(), r.spearman[k]);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 6. Wave toy end to end.

const ex::WaveToyReport& wave_default() {
  static const ex::WaveToyReport r = ex::run_wave_toy(ex::WaveToyConfig{});
  return r;
}

Verdict wave_toy_end_to_end() {
  const auto& r = wave_default();
  const std::size_t m = r.component_ids.size() - 1;
  const double drop = 1.0 - r.final_quality[m] / r.initial_quality[m];
  const bool ok = !r.diverged && r.component_ids.size() == 3 && drop >= 0.5 &&
                  r.gap_quality_correlation >= 0.5;
  return {ok, fmt("seed 0, K=%zu: alpha_M Q_M %.4g -> %.4g (%.0f%% drop), gap/Q correlation %.3f%s",
                  r.component_ids.size(), r.initial_quality[m], r.final_quality[m], 100 * drop,
                  r.gap_quality_correlation, r.diverged ? ", diverged" : "")};
}

// ---------------------------------------------------------------------------
// 7. Alpha calibration.

Verdict alpha_calibration_check() {
  const q::BaselineExtractor w = q::make_extractor_w(), h = q::make_extractor_h();
  const std::vector<const q::EmbeddingExtractor*> exs{&w, &h};
  const auto res = raf::dsp::default_resolutions();
  std::vector<q::WaveformPair> batch;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise;
  for (int i = 0; i < 6; ++i) {
    const double f0 = 120.0 + 35.0 * i;
    std::vector<double> y(12000), g(12000);
    for (std::size_t n = 0; n < y.size(); ++n) {
      const double t = static_cast<double>(n) / 24000.0;
      for (int k = 1; k <= 5; ++k) y[n] += 0.2 / k * std::sin(2 * std::numbers::pi * k * f0 * t);
      g[n] = std::clamp(y[n] + 0.02 * (i + 1) * noise(rng), -0.25, 0.25);
    }
    batch.emplace_back(raf::dsp::Waveform(y, 24000.0), raf::dsp::Waveform(g, 24000.0));
  }
  const auto alphas = q::alpha_calibration(batch, exs, res);
  std::vector<double> mean(alphas.size(), 0.0);
  for (const auto& [y, g] : batch) {
    const auto v = q::quality_gap_vector(y, g, exs, alphas, res);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v.components[k] / batch.size();
  }
  double worst = 0.0;
  for (double m : mean) worst = std::max(worst, std::fabs(m - 1.0));
  return {worst <= 1e-12, fmt("alphas [%.4g, %.4g, %.4g]; rescaled means within %.1e of 1",
                              alphas[0], alphas[1], alphas[2], worst)};
}

// ---------------------------------------------------------------------------
// 8. Rerun from manifest, different thread counts, byte-identical CSVs.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict rerun_determinism() {
  using raf::lab::Json;
  const fs::path root = fs::temp_directory_path() / "raf_acceptance_rerun";
  fs::remove_all(root);
  struct Job {
    std::string command;
    Json doc;
    std::vector<std::uint64_t> seeds;
  };
  const std::vector<Job> jobs{
      {"compare",
       Json::parse(R"({"objectives": ["raf", "metricgan_raf_v2"], "long_settings": [false],
                       "gp_settings": [true], "seeds": [0, 1], "toy": {"steps": 600}})"),
       {0, 1}},
      {"toy1d", Json::parse(R"({"steps": 600})"), {3}},
      {"segsize", Json::parse(R"({"corpus_pairs": 4, "segments_per_size": 4})"), {0}},
      {"wavetoy", Json::parse(R"({"steps": 150})"), {0}},
  };
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  std::ostringstream log;
  for (const Job& j : jobs) {
    raf::lab::RunManifest m;
    m.command = j.command;
    Json doc = j.doc;
    if (j.command != "compare") doc["seed"] = j.seeds.front();
    m.config = raf::lab::resolve_config(j.command, doc);
    m.seeds = j.seeds;
    m.output_dir = root / (j.command + "_a");
    raf::lab::Formats formats;
    formats.svg = false;
    raf::lab::dispatch(m, {formats, 1}, log);

    raf::lab::RunManifest again =
        raf::lab::manifest_from_json(raf::lab::parse_json_file(m.output_dir / "manifest.json"));
    again.output_dir = root / (j.command + "_b");
    raf::lab::dispatch(again, {formats, std::max(3u, worker_count())}, log);

    for (const auto& e : fs::directory_iterator(m.output_dir)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(again.output_dir / e.path().filename()))
        mismatched.push_back(e.path().filename().string());
    }
  }
  fs::remove_all(root);
  std::string detail = fmt("%zu CSV files from toy1d, compare, segsize and wavetoy reruns", files);
  for (const auto& f : mismatched) detail += "; differs: " + f;
  return {files > 0 && mismatched.empty(), detail};
}

// ---------------------------------------------------------------------------
// 9. Ablation hooks.

Verdict ablations() {
  ex::ToyConfig c = toy_runs().base;
  c.transform = ob::GapTransform::kIdentity;
  const ex::TrainTrace ident = ex::run_toy1d(c);
  double ident_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ident.rows.size(); ++i) ident_min = std::min(ident_min, ident.rows[i].gap_min);
  double softplus_min = std::numeric_limits<double>::infinity();
  for (const auto& t : toy_runs().traces.at(ex::Objective::kRaf))
    for (std::size_t i = 1; i < t.rows.size(); ++i) softplus_min = std::min(softplus_min, t.rows[i].gap_min);

  ex::WaveToyConfig w;
  w.calibrate_alphas = false;
  w.alphas = {1.0, 1.0, 1.0};
  w.steps = 300;
  const auto flat = ex::run_wave_toy(w);
  const auto argmax = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  };
  const std::size_t dom = argmax(flat.final_quality);
  const std::size_t m = flat.component_ids.size() - 1;
  const bool ok = !ident.diverged && ident_min < 0.0 && softplus_min >= 0.0 && dom == m;
  return {ok, fmt("identity f: min gap %.3g (softplus runs: %.3g); alpha=[1,1,1]: final means "
                  "[%.3g, %.3g, %.3g], dominant %s",
                  ident_min, softplus_min, flat.final_quality[0], flat.final_quality[1],
                  flat.final_quality[2], flat.component_ids[dom].c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") {
      strict = true;
    } else {
      try {
        only.insert(std::stoi(a));
      } catch (const std::exception&) {
        std::fprintf(stderr, "usage: %s [--strict] [criterion ...]\n", argv[0]);
        return 2;
      }
    }
  }

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"loss identities", loss_identities},
      {"zero-centered GP on a linear discriminator", zero_gp_check},
      {"two-cluster toy: RAF reaches bimodality first", toy_bimodality},
      {"segment-size error decreases with size", segment_size_direction},
      {"wave toy end to end", wave_toy_end_to_end},
      {"alpha calibration", alpha_calibration_check},
      {"rerun determinism across thread counts", rerun_determinism},
      {"ablation hooks", ablations},
  };

  int status = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool red_ok = !v.pass && kKnownRed.contains(id) && !strict;
    std::printf("criterion %d: %s  %s: %s (%.1fs)%s\n", id, v.pass ? "PASS" : "FAIL",
                criteria[i].first, v.detail.c_str(), secs, red_ok ? " [known red]" : "");
    std::fflush(stdout);
    if (!v.pass && !red_ok) status = 1;
  }
  return status;
}
