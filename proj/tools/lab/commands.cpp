#include "commands.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "raf/errors.hpp"
#include "raf/quality_gap.hpp"

namespace raf::lab {
namespace ex = raf::experiments;

namespace {

class Emitter {
 public:
  Emitter(const RunManifest& m, const Formats& f)
      : dir_(m.output_dir), hash_(m.hash()), formats_(f) {}

  const std::string& hash() const { return hash_; }

  void csv(const std::string& name, const Table& t) const {
    if (formats_.csv) write_text(dir_, name, render_csv(t, hash_));
  }
  void json(const std::string& name, Json j) const {
    if (!formats_.json) return;
    Json out = Json::object();
    out["manifest_hash"] = hash_;
    for (auto& [k, v] : j.items()) out[k] = v;
    write_text(dir_, name, out.dump(2) + "\n");
  }
  void svg(const std::string& name, const PlotSpec& spec,
           const std::vector<Series>& series) const {
    if (formats_.svg) write_text(dir_, name, render_svg(spec, series, hash_));
  }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  Formats formats_;
};

std::string seed_stem(const std::string& command, std::uint64_t seed) {
  return command + "_seed" + std::to_string(seed);
}

std::string cell(double v) { return format_double(v); }
template <class T>
  requires std::is_integral_v<T>
std::string cell(T v) { return std::to_string(v); }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---------------------------------------------------------------------------

int run_toy(const RunManifest& m, const RunOptions& opt, const Emitter& out,
            std::ostream& log) {
  ex::ToyConfig base;
  from_json(m.config, base);
  std::vector<ex::TrainTrace> traces(m.seeds.size());
  std::vector<ex::ToyConfig> cfgs(m.seeds.size(), base);
  ex::parallel_for(m.seeds.size(), opt.threads, [&](std::size_t i) {
    cfgs[i].seed = m.seeds[i];
    traces[i] = ex::run_toy1d(cfgs[i]);
  });

  int status = kExitOk;
  Json runs = Json::array();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const ex::TrainTrace& tr = traces[i];
    const ex::ToyConfig& cfg = cfgs[i];
    const std::string stem = seed_stem("toy1d", cfg.seed);

    Table trace{{"step", "disc_loss", "gen_loss", "gap_mean", "gap_min", "quality_mean"}, {}};
    for (std::size_t k = 0; k < cfg.modes.size(); ++k)
      trace.header.push_back("coverage_" + std::to_string(k));
    Table samples{{"step", "index", "sample"}, {}};
    Series scatter{"generated", {}, {}};
    for (const ex::ToyTraceRow& r : tr.rows) {
      std::vector<std::string> row{cell(r.step), cell(r.disc_loss), cell(r.gen_loss),
                                   cell(r.gap_mean), cell(r.gap_min), cell(r.quality_mean)};
      for (double c : r.coverage) row.push_back(cell(c));
      row.resize(trace.header.size(), "nan");
      trace.rows.push_back(std::move(row));
      for (std::size_t j = 0; j < r.samples.size(); ++j) {
        samples.rows.push_back({cell(r.step), cell(j), cell(r.samples[j])});
        if (j < 64) {
          scatter.x.push_back(static_cast<double>(r.step));
          scatter.y.push_back(r.samples[j]);
        }
      }
    }
    out.csv(stem + ".csv", trace);
    out.csv(stem + "_samples.csv", samples);
    out.svg(stem + ".svg",
            {"Generated samples, seed " + std::to_string(cfg.seed), "step", "sample",
             false, false},
            {scatter});

    const auto bimodal =
        ex::steps_to_bimodality(tr, cfg.coverage_threshold, cfg.sustain_logs);
    Json run = Json::object();
    run["seed"] = cfg.seed;
    run["alpha"] = tr.alpha;
    run["logged_rows"] = tr.rows.size();
    run["steps_to_bimodality"] = bimodal ? Json(*bimodal) : Json(nullptr);
    run["final_quality"] = tr.diverged || tr.rows.empty()
                               ? Json(nullptr)
                               : finite_or_null(ex::toy_final_quality(tr, cfg));
    run["diverged"] = tr.diverged;
    run["diagnostic"] = tr.diagnostic;
    runs.push_back(run);
    if (tr.diverged) {
      log << "toy1d seed " << cfg.seed << " diverged: " << tr.diagnostic << "\n";
      status = kExitDiverged;
    }
  }
  out.json("toy1d_summary.json", Json{{"command", "toy1d"}, {"runs", runs}});
  return status;
}

int run_segsize(const RunManifest& m, const RunOptions& opt, const Emitter& out,
                std::ostream&) {
  ex::SegmentStudyConfig base;
  from_json(m.config, base);
  base.threads = opt.threads;
  Json runs = Json::array();
  for (std::uint64_t seed : m.seeds) {
    ex::SegmentStudyConfig cfg = base;
    cfg.seed = seed;
    const ex::SegmentStudyResult res = ex::run_segment_size_study(cfg);
    const std::string stem = seed_stem("segsize", seed);

    Table t{{"segment_size"}, {}};
    for (const std::string& id : res.component_ids) t.header.push_back("error_" + id);
    std::vector<Series> series;
    for (const std::string& id : res.component_ids) series.push_back({id, {}, {}});
    for (std::size_t i = 0; i < res.segment_sizes.size(); ++i) {
      std::vector<std::string> row{cell(res.segment_sizes[i])};
      for (std::size_t k = 0; k < res.errors[i].size(); ++k) {
        row.push_back(cell(res.errors[i][k]));
        series[k].x.push_back(static_cast<double>(res.segment_sizes[i]));
        series[k].y.push_back(res.errors[i][k]);
      }
      t.rows.push_back(std::move(row));
    }
    out.csv(stem + ".csv", t);
    out.svg(stem + ".svg",
            {"Quality-gap estimation error", "segment size (samples)", "mean |error|",
             true, true},
            series);
    Json spearman = Json::object();
    for (std::size_t k = 0; k < res.component_ids.size(); ++k)
      spearman[res.component_ids[k]] = finite_or_null(res.spearman[k]);
    runs.push_back(Json{{"seed", seed}, {"spearman", spearman}});
  }
  out.json("segsize_summary.json", Json{{"command", "segsize"}, {"runs", runs}});
  return kExitOk;
}

int run_wavetoy(const RunManifest& m, const RunOptions& opt, const Emitter& out,
                std::ostream& log) {
  ex::WaveToyConfig base;
  from_json(m.config, base);
  std::vector<ex::WaveToyReport> reports(m.seeds.size());
  ex::parallel_for(m.seeds.size(), opt.threads, [&](std::size_t i) {
    ex::WaveToyConfig cfg = base;
    cfg.seed = m.seeds[i];
    reports[i] = ex::run_wave_toy(cfg);
  });

  int status = kExitOk;
  Json runs = Json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const ex::WaveToyReport& r = reports[i];
    const std::uint64_t seed = m.seeds[i];
    const std::string stem = seed_stem("wavetoy", seed);
    Table t{{"step", "disc_loss", "gen_loss", "mel_loss", "gap_mean", "gap_min"}, {}};
    for (const std::string& id : r.component_ids) t.header.push_back("quality_" + id);
    std::vector<Series> series;
    for (const std::string& id : r.component_ids) series.push_back({id, {}, {}});
    for (const ex::WaveTraceRow& row : r.trace) {
      std::vector<std::string> cells{cell(row.step), cell(row.disc_loss), cell(row.gen_loss),
                                     cell(row.mel_loss), cell(row.gap_mean), cell(row.gap_min)};
      for (std::size_t k = 0; k < row.quality_mean.size(); ++k) {
        cells.push_back(cell(row.quality_mean[k]));
        series[k].x.push_back(static_cast<double>(row.step));
        series[k].y.push_back(row.quality_mean[k]);
      }
      t.rows.push_back(std::move(cells));
    }
    out.csv(stem + ".csv", t);
    out.svg(stem + ".svg", {"Training quality gap, seed " + std::to_string(seed), "step",
                            "mean scaled Q", false, true},
            series);

    Json run = Json::object();
    run["seed"] = seed;
    run["component_ids"] = r.component_ids;
    run["alphas"] = r.alphas;
    run["initial_quality"] = r.initial_quality;
    run["final_quality"] = r.final_quality;
    run["gap_quality_correlation"] = finite_or_null(r.gap_quality_correlation);
    Json comp = Json::array();
    for (double c : r.component_correlation) comp.push_back(finite_or_null(c));
    run["component_correlation"] = comp;
    run["heldout_disc_loss"] = finite_or_null(r.heldout_disc_loss);
    run["diverged"] = r.diverged;
    run["diagnostic"] = r.diagnostic;
    runs.push_back(run);
    if (r.diverged) {
      log << "wavetoy seed " << seed << " diverged: " << r.diagnostic << "\n";
      status = kExitDiverged;
    }
  }
  out.json("wavetoy_summary.json", Json{{"command", "wavetoy"}, {"runs", runs}});
  return status;
}

int run_compare(const RunManifest& m, const RunOptions& opt, const Emitter& out,
                std::ostream& log) {
  ex::CompareConfig cfg;
  from_json(m.config, cfg);
  cfg.seeds = m.seeds;
  cfg.threads = opt.threads;
  const std::vector<ex::CompareRow> rows = ex::run_objective_comparison(cfg);

  Table t{{"task", "objective", "long", "gp", "runs", "diverged", "median_final_quality",
           "median_steps_to_bimodality", "bimodal_runs"},
          {}};
  Json cells = Json::array();
  int status = kExitOk;
  for (const ex::CompareRow& r : rows) {
    const std::string task = r.task == ex::CompareTask::kToy1d ? "toy1d" : "wavetoy";
    const std::string objective(ex::objective_name(r.objective));
    t.rows.push_back({task, objective, r.long_segments ? "1" : "0", r.gp ? "1" : "0",
                      cell(r.runs), cell(r.diverged), cell(r.median_final_quality),
                      r.median_steps_to_bimodality ? cell(*r.median_steps_to_bimodality) : "",
                      cell(r.bimodal_runs)});
    cells.push_back(Json{
        {"task", task},
        {"objective", objective},
        {"long", r.long_segments},
        {"gp", r.gp},
        {"runs", r.runs},
        {"diverged", r.diverged},
        {"median_final_quality", finite_or_null(r.median_final_quality)},
        {"median_steps_to_bimodality", r.median_steps_to_bimodality
                                           ? Json(*r.median_steps_to_bimodality)
                                           : Json(nullptr)},
        {"bimodal_runs", r.bimodal_runs}});
    if (r.diverged > 0) {
      log << task << " " << objective << " long=" << r.long_segments << " gp=" << r.gp
          << ": " << r.diverged << " of " << r.runs << " runs diverged\n";
      status = kExitDiverged;
    }
  }
  out.csv("compare.csv", t);
  out.json("compare_summary.json", Json{{"command", "compare"}, {"cells", cells}});
  return status;
}

// ---------------------------------------------------------------------------

struct Corpus {
  std::vector<std::string> names;
  std::vector<quality::WaveformPair> pairs;
};

Corpus load_corpus(const AuditConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  for (const std::string& d : {cfg.real_dir, cfg.fake_dir})
    if (!fs::is_directory(d)) throw IoError("not a directory: " + d);
  Corpus c;
  for (const fs::directory_entry& e : fs::directory_iterator(cfg.real_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".wav") c.names.push_back(e.path().filename().string());
  }
  std::sort(c.names.begin(), c.names.end());
  if (c.names.empty()) throw IoError("no .wav files in " + cfg.real_dir);
  for (const std::string& n : c.names) {
    const fs::path fake = fs::path(cfg.fake_dir) / n;
    if (!fs::exists(fake)) throw IoError("missing counterpart " + fake.string());
    c.pairs.emplace_back(dsp::read_wav(fs::path(cfg.real_dir) / n), dsp::read_wav(fake));
  }
  return c;
}

std::vector<dsp::StftConfig> audit_resolutions(const AuditConfig& cfg) {
  return cfg.resolutions.empty() ? dsp::default_resolutions() : cfg.resolutions;
}

int run_audit(const RunManifest& m, const RunOptions& opt, const Emitter& out,
              std::ostream&) {
  AuditConfig cfg;
  from_json(m.config, cfg);
  const Corpus corpus = load_corpus(cfg);
  const std::vector<dsp::StftConfig> res = audit_resolutions(cfg);
  const quality::BaselineExtractor ex_w = quality::make_extractor_w();
  const quality::BaselineExtractor ex_h = quality::make_extractor_h();
  const quality::EmbeddingExtractor* extractors[] = {&ex_w, &ex_h};
  std::vector<quality::QualityGapVector> q(corpus.pairs.size());
  ex::parallel_for(q.size(), opt.threads, [&](std::size_t i) {
    const auto& [y, g] = corpus.pairs[i];
    if (y.size() != g.size() || y.sample_rate != g.sample_rate)
      throw ContractViolation(corpus.names[i] + ": real and generated differ in length or rate");
    q[i] = quality::quality_gap_vector(y, g, extractors, cfg.alphas, res);
  });

  Table t{{"file"}, {}};
  const std::vector<std::string> ids = q.front().component_ids;
  for (const std::string& id : ids) t.header.push_back("q_" + id);
  for (const std::string& id : ids) t.header.push_back("unscaled_" + id);
  std::vector<double> mean(ids.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<std::string> row{corpus.names[i]};
    for (std::size_t k = 0; k < ids.size(); ++k) {
      row.push_back(cell(q[i].components[k]));
      mean[k] += q[i].components[k] / static_cast<double>(q.size());
    }
    for (double u : q[i].unscaled) row.push_back(cell(u));
    t.rows.push_back(std::move(row));
  }
  out.csv("audit.csv", t);
  Json means = Json::object();
  for (std::size_t k = 0; k < ids.size(); ++k) means[ids[k]] = mean[k];
  out.json("audit_summary.json",
           Json{{"command", "audit"}, {"files", q.size()}, {"mean_quality", means}});
  return kExitOk;
}

int run_calibrate(const RunManifest& m, const RunOptions&, const Emitter& out,
                  std::ostream&) {
  AuditConfig cfg;
  from_json(m.config, cfg);
  const Corpus corpus = load_corpus(cfg);
  const std::vector<dsp::StftConfig> res = audit_resolutions(cfg);
  const quality::BaselineExtractor ex_w = quality::make_extractor_w();
  const quality::BaselineExtractor ex_h = quality::make_extractor_h();
  const quality::EmbeddingExtractor* extractors[] = {&ex_w, &ex_h};
  const std::vector<double> alphas = quality::alpha_calibration(corpus.pairs, extractors, res);
  const std::vector<std::string> ids{ex_w.id(), ex_h.id(), quality::kMstftComponentId};

  Table t{{"component", "alpha"}, {}};
  Json j = Json::object();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    t.rows.push_back({ids[k], cell(alphas[k])});
    j[ids[k]] = alphas[k];
  }
  out.csv("calibrate.csv", t);
  out.json("calibrate_summary.json", Json{{"command", "calibrate"},
                                          {"pairs", corpus.pairs.size()},
                                          {"alphas", alphas},
                                          {"by_component", j}});
  return kExitOk;
}

}  // namespace

int dispatch(const RunManifest& manifest, const RunOptions& options, std::ostream& log) {
  using Handler = int (*)(const RunManifest&, const RunOptions&, const Emitter&, std::ostream&);
  static const std::map<std::string, Handler> handlers{
      {"toy1d", run_toy},     {"segsize", run_segsize}, {"wavetoy", run_wavetoy},
      {"compare", run_compare}, {"audit", run_audit},   {"calibrate", run_calibrate}};
  const auto it = handlers.find(manifest.command);
  if (it == handlers.end()) throw ConfigError("unknown command: " + manifest.command);
  write_text(manifest.output_dir, "manifest.json", manifest.to_json().dump(2) + "\n");
  const Emitter out(manifest, options.formats);
  return it->second(manifest, options, out, log);
}

}  // namespace raf::lab
