#include <cmath>
#include <limits>

#include "common.hpp"
#include "raf/errors.hpp"
#include "raf/experiments.hpp"

namespace raf::experiments {

void CompareConfig::validate() const {
  if (objectives.empty()) throw ConfigError("objectives is empty");
  if (long_settings.empty() || gp_settings.empty())
    throw ConfigError("long_settings and gp_settings must be non-empty");
  if (seeds.empty()) throw ConfigError("seeds is empty");
  if (tasks.empty()) throw ConfigError("tasks is empty");
  if (short_segment == 0 || long_segment == 0)
    throw ConfigError("segment sizes must be positive");
  if (toy.batch < 2) throw ConfigError("toy batch must be at least 2 to halve it");
  toy.validate();
  wave.validate();
}

namespace {

struct Cell {
  CompareTask task;
  Objective objective;
  bool long_segments;
  bool gp;
};

struct RunResult {
  bool diverged = false;
  double final_quality = std::numeric_limits<double>::quiet_NaN();
  std::optional<long> bimodal_step;
};

RunResult run_cell(const CompareConfig& cfg, const Cell& cell, std::uint64_t seed) {
  RunResult out;
  if (cell.task == CompareTask::kToy1d) {
    ToyConfig c = cfg.toy;
    c.seed = seed;
    c.objective = cell.objective;
    c.use_gp = cell.gp;
    c.batch = cell.long_segments ? cfg.toy.batch * 2 : cfg.toy.batch / 2;
    const TrainTrace trace = run_toy1d(c);
    out.diverged = trace.diverged;
    if (!trace.diverged) out.final_quality = toy_final_quality(trace, c);
    out.bimodal_step =
        steps_to_bimodality(trace, c.coverage_threshold, c.sustain_logs);
    return out;
  }
  WaveToyConfig c = cfg.wave;
  c.seed = seed;
  c.objective = cell.objective;
  c.use_gp = cell.gp;
  c.segment_size = cell.long_segments ? cfg.long_segment : cfg.short_segment;
  const WaveToyReport r = run_wave_toy(c);
  out.diverged = r.diverged;
  if (!r.diverged) {
    out.final_quality = 0.0;
    for (double q : r.final_quality) out.final_quality += q;
  }
  return out;
}

}  // namespace

std::vector<CompareRow> run_objective_comparison(const CompareConfig& cfg) {
  cfg.validate();
  std::vector<Cell> cells;
  for (CompareTask task : cfg.tasks)
    for (Objective o : cfg.objectives)
      for (bool l : cfg.long_settings)
        for (bool gp : cfg.gp_settings) cells.push_back({task, o, l, gp});

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<RunResult> results(cells.size() * n_seeds);
  parallel_for(results.size(), cfg.threads, [&](std::size_t i) {
    results[i] = run_cell(cfg, cells[i / n_seeds], cfg.seeds[i % n_seeds]);
  });

  std::vector<CompareRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CompareRow row;
    row.task = cells[c].task;
    row.objective = cells[c].objective;
    row.long_segments = cells[c].long_segments;
    row.gp = cells[c].gp;
    row.runs = n_seeds;
    std::vector<double> finals, steps;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const RunResult& r = results[c * n_seeds + s];
      if (r.diverged) ++row.diverged;
      else finals.push_back(r.final_quality);
      if (r.bimodal_step) {
        ++row.bimodal_runs;
        steps.push_back(static_cast<double>(*r.bimodal_step));
      } else {
        steps.push_back(std::numeric_limits<double>::infinity());
      }
    }
    row.median_final_quality =
        finals.empty() ? std::numeric_limits<double>::quiet_NaN() : detail::median(finals);
    if (row.task == CompareTask::kToy1d) {
      const double m = detail::median(steps);
      if (std::isfinite(m)) row.median_steps_to_bimodality = m;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace raf::experiments
