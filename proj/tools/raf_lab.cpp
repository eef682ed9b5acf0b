#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "lab/commands.hpp"
#include "raf/errors.hpp"

namespace {

using raf::lab::Json;

struct CommonFlags {
  std::string config;
  std::string seed;
  std::string seeds;
  std::string out = "raf_lab_out";
  std::optional<unsigned> threads;
  std::string format = "csv,json";
  std::string real_dir;
  std::string fake_dir;
};

void add_common(CLI::App* sub, CommonFlags& f, bool seeded) {
  sub->add_option("--config", f.config, "JSON config merged over the defaults");
  if (seeded) {
    auto* one = sub->add_option("--seed", f.seed, "Single seed");
    auto* many = sub->add_option("--seeds", f.seeds, "Inclusive seed range A..B");
    one->excludes(many);
  }
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--threads", f.threads, "Worker threads (default: RAF_LAB_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--format", f.format, "Comma-separated subset of csv,json,svg");
}

unsigned resolve_threads(const std::optional<unsigned>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RAF_LAB_THREADS")) {
    unsigned v = 0;
    const std::string_view s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v == 0)
      throw raf::ConfigError(std::string("invalid RAF_LAB_THREADS: ") + env);
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

raf::lab::RunManifest build_manifest(const std::string& command, const CommonFlags& f) {
  Json doc = f.config.empty() ? Json(nullptr) : raf::lab::parse_json_file(f.config);
  if (command == "audit" || command == "calibrate") {
    if (doc.is_null()) doc = Json::object();
    if (!doc.is_object()) throw raf::ConfigError("type mismatch at <root>: expected object");
    if (!f.real_dir.empty()) doc["real_dir"] = f.real_dir;
    if (!f.fake_dir.empty()) doc["fake_dir"] = f.fake_dir;
  }
  raf::lab::RunManifest m;
  m.command = command;
  m.config = raf::lab::resolve_config(command, doc);
  m.output_dir = f.out;

  std::vector<std::uint64_t> seeds;
  if (!f.seed.empty()) seeds = raf::lab::parse_seed_range(f.seed);
  if (!f.seeds.empty()) seeds = raf::lab::parse_seed_range(f.seeds);
  if (command == "compare") {
    if (seeds.empty()) seeds = m.config["seeds"].get<std::vector<std::uint64_t>>();
    m.config["seeds"] = seeds;
  } else if (m.config.contains("seed")) {
    if (seeds.empty()) seeds.push_back(m.config["seed"].get<std::uint64_t>());
    m.config["seed"] = seeds.front();
  }
  m.seeds = seeds;
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relativistic adversarial feedback experiments"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string command;
  for (const std::string& name : raf::lab::command_names()) {
    const bool corpus = name == "audit" || name == "calibrate";
    CLI::App* sub = app.add_subcommand(name, [&] {
      if (name == "toy1d") return "Two-cluster 1D toy";
      if (name == "segsize") return "Segment-size estimation-error study";
      if (name == "wavetoy") return "Small end-to-end waveform training run";
      if (name == "compare") return "Objective x Long x GP comparison grid";
      if (name == "audit") return "Quality gap of paired WAV directories";
      return "Alpha calibration on paired WAV directories";
    }());
    add_common(sub, flags, !corpus);
    if (corpus) {
      sub->add_option("--real", flags.real_dir, "Directory of reference WAV files");
      sub->add_option("--fake", flags.fake_dir, "Directory of generated WAV files");
    }
    sub->callback([&command, name] { command = name; });
  }
  std::string manifest_path;
  CLI::App* rerun = app.add_subcommand("rerun", "Re-run a previously written manifest.json");
  rerun->add_option("manifest", manifest_path, "Path to manifest.json")->required();
  rerun->add_option("--out", flags.out, "Output directory");
  rerun->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
  rerun->add_option("--format", flags.format, "Comma-separated subset of csv,json,svg");
  rerun->callback([&command] { command = "rerun"; });

  CLI11_PARSE(app, argc, argv);

  try {
    raf::lab::RunOptions options;
    options.formats = raf::lab::parse_formats(flags.format);
    options.threads = resolve_threads(flags.threads);
    raf::lab::RunManifest manifest;
    if (command == "rerun") {
      manifest = raf::lab::manifest_from_json(raf::lab::parse_json_file(manifest_path));
      manifest.output_dir = flags.out;
    } else {
      manifest = build_manifest(command, flags);
    }
    const int status = raf::lab::dispatch(manifest, options, std::cerr);
    std::cerr << manifest.command << ": wrote " << manifest.output_dir.string()
              << " (manifest " << manifest.hash() << ")\n";
    return status;
  } catch (const raf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return raf::lab::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return raf::lab::kExitFailure;
  }
}
