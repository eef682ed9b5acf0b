#ifdef RAF_HAVE_CLI

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lab/commands.hpp"
#include "lab/config.hpp"
#include "lab/report.hpp"
#include "raf/dsp.hpp"
#include "raf/errors.hpp"

namespace {

namespace fs = std::filesystem;
namespace lab = raf::lab;
using lab::Json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("raf_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const std::string& command, const Json& doc) {
  try {
    lab::resolve_config(command, doc);
  } catch (const raf::ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const Json toy = lab::resolve_config("toy1d", Json::object());
  EXPECT_EQ(toy["gamma"], 0.1);
  EXPECT_EQ(toy["gp_interval"], 7);
  EXPECT_EQ(toy["objective"], "raf");
  const Json wave = lab::resolve_config("wavetoy", Json());
  EXPECT_EQ(wave["gamma"], 0.1);
  EXPECT_EQ(wave["lambda_fm"], 1.0);
  EXPECT_EQ(wave["lambda_mel"], 26.0);
  EXPECT_EQ(wave["gp_interval"], 7);
  EXPECT_EQ(wave["alphas"], Json::array({10000.0, 10000.0, 1.0}));
  EXPECT_EQ(wave["adam"]["beta1"], 0.8);
  EXPECT_EQ(wave["adam"]["beta2"], 0.99);
  const Json cmp = lab::resolve_config("compare", Json::object());
  EXPECT_EQ(cmp["long_segment"], 24576);
  EXPECT_EQ(lab::resolve_config("segsize", Json::object())["alphas"],
            Json::array({10000.0, 10000.0, 1.0}));
}

TEST(Config, OverrideKeepsOtherDefaults) {
  const Json base = lab::resolve_config("toy1d", Json::object());
  const Json over = lab::resolve_config("toy1d", Json{{"gamma", 0.2}});
  EXPECT_EQ(over["gamma"], 0.2);
  Json expect = base;
  expect["gamma"] = 0.2;
  EXPECT_EQ(over, expect);
  const Json nested = lab::resolve_config("wavetoy", Json::parse(R"({"adam": {"lr": 0.01}})"));
  EXPECT_EQ(nested["adam"]["lr"], 0.01);
  EXPECT_EQ(nested["adam"]["beta1"], 0.8);
}

TEST(Config, StrictKeysAndTypes) {
  EXPECT_EQ(config_error("toy1d", Json{{"gama", 0.2}}), "unknown key: gama");
  EXPECT_EQ(config_error("wavetoy", Json::parse(R"({"adam": {"lr2": 1}})")),
            "unknown key: adam.lr2");
  EXPECT_EQ(config_error("wavetoy", Json::parse(R"({"adam": {"lr": "fast"}})")),
            "type mismatch at adam.lr: expected number");
  EXPECT_NE(config_error("toy1d", Json{{"objective", "wgan"}}), "");
  EXPECT_NE(config_error("toy1d", Json{{"steps", -1}}), "");
  EXPECT_NE(config_error("toy1d", Json::array()), "");
  EXPECT_THROW(lab::resolve_config("train", Json::object()), raf::ConfigError);
}

TEST(Config, RoundTripThroughStructs) {
  for (const std::string& cmd : {"toy1d", "segsize", "wavetoy", "compare"}) {
    const Json j = lab::resolve_config(cmd, Json::object());
    EXPECT_EQ(lab::resolve_config(cmd, j), j) << cmd;
  }
}

TEST(SeedRange, Parses) {
  EXPECT_EQ(lab::parse_seed_range("3..5"), (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(lab::parse_seed_range("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_THROW(lab::parse_seed_range("5..3"), raf::ConfigError);
  EXPECT_THROW(lab::parse_seed_range("a..b"), raf::ConfigError);
}

lab::RunManifest toy_manifest(const fs::path& out, long steps) {
  lab::RunManifest m;
  m.command = "toy1d";
  m.config = lab::resolve_config(
      "toy1d", Json{{"steps", steps}, {"batch", 32}, {"eval_samples", 32}, {"log_every", 10}});
  m.seeds = {0};
  m.output_dir = out;
  return m;
}

TEST(Manifest, HashIgnoresOutputDirectory) {
  const lab::RunManifest a = toy_manifest("/tmp/a", 5), b = toy_manifest("/tmp/b", 5);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_NE(a.hash(), toy_manifest("/tmp/a", 6).hash());
  const lab::RunManifest back = lab::manifest_from_json(a.to_json());
  EXPECT_EQ(back.hash(), a.hash());
  EXPECT_EQ(back.output_dir, a.output_dir);
  EXPECT_EQ(lab::fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(lab::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Report, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(lab::format_double(v)), v);
  }
  EXPECT_EQ(lab::format_double(0.1), "0.1");
}

TEST(Report, CsvRoundTripAndHeaderOnly) {
  lab::Table t{{"step", "value"}, {}};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  std::vector<double> values;
  for (int i = 0; i < 20; ++i) {
    values.push_back(d(rng));
    t.rows.push_back({std::to_string(i), lab::format_double(values.back())});
  }
  const std::string text = lab::render_csv(t, "0123456789abcdef");
  EXPECT_EQ(text.rfind("# manifest 0123456789abcdef\n", 0), 0u);
  const lab::Table back = lab::parse_csv(text);
  EXPECT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(std::stod(back.rows[i][1]), values[i]);

  const lab::Table empty{{"step", "value"}, {}};
  const std::string header_only = lab::render_csv(empty, "0123456789abcdef");
  EXPECT_EQ(header_only, "# manifest 0123456789abcdef\nstep,value\n");
  EXPECT_TRUE(lab::parse_csv(header_only).rows.empty());
  EXPECT_THROW(lab::parse_csv("a,b\n1\n"), raf::ConfigError);
}

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (std::size_t p = text.find(what); p != std::string::npos; p = text.find(what, p + 1)) ++n;
  return n;
}

TEST(Report, SvgHasOneMarkerPerPoint) {
  std::vector<lab::Series> series;
  for (const std::string& name : {"a", "b", "c"}) {
    lab::Series s{name, {}, {}};
    for (double x : {2048, 4096, 8192, 16384, 24576, 32768}) {
      s.x.push_back(x);
      s.y.push_back(1.0 / x);
    }
    series.push_back(s);
  }
  const std::string svg =
      lab::render_svg({"errors", "segment", "error", true, true}, series, "feedfacecafebeef");
  EXPECT_EQ(count(svg, "<circle"), 18u);
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_NE(svg.find("feedfacecafebeef"), std::string::npos);
}

TEST(Report, Formats) {
  const auto f = lab::parse_formats("svg,csv");
  EXPECT_TRUE(f.csv);
  EXPECT_FALSE(f.json);
  EXPECT_TRUE(f.svg);
  EXPECT_THROW(lab::parse_formats("csv,pdf"), raf::ConfigError);
}

TEST(Dispatch, ToyZeroStepsWritesInitialTrace) {
  const fs::path dir = scratch("toy0");
  const lab::RunManifest m = toy_manifest(dir, 0);
  std::ostringstream log;
  EXPECT_EQ(lab::dispatch(m, {}, log), lab::kExitOk);
  const lab::Table t = lab::parse_csv(read_file(dir / "toy1d_seed0.csv"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "0");
  const Json summary = Json::parse(read_file(dir / "toy1d_summary.json"));
  EXPECT_EQ(summary["manifest_hash"], m.hash());
  EXPECT_EQ(lab::manifest_from_json(Json::parse(read_file(dir / "manifest.json"))).hash(),
            m.hash());
  fs::remove_all(dir);
}

TEST(Dispatch, OutputsIndependentOfThreadsAndRun) {
  lab::RunManifest m;
  m.command = "compare";
  m.config = lab::resolve_config(
      "compare", Json::parse(R"({"objectives": ["raf", "lsgan"], "long_settings": [false],
                                 "gp_settings": [true], "seeds": [0, 1],
                                 "toy": {"steps": 40, "batch": 16, "eval_samples": 32}})"));
  m.seeds = {0, 1};
  std::ostringstream log;
  m.output_dir = scratch("cmp1");
  ASSERT_EQ(lab::dispatch(m, {lab::Formats{}, 1}, log), lab::kExitOk);
  const lab::RunManifest m2 = [&] {
    lab::RunManifest c = m;
    c.output_dir = scratch("cmp2");
    return c;
  }();
  ASSERT_EQ(lab::dispatch(m2, {lab::Formats{}, 3}, log), lab::kExitOk);
  for (const std::string& f : {"compare.csv", "compare_summary.json"})
    EXPECT_EQ(read_file(m.output_dir / f), read_file(m2.output_dir / f)) << f;
  EXPECT_EQ(lab::parse_csv(read_file(m.output_dir / "compare.csv")).rows.size(), 2u);
  fs::remove_all(m.output_dir);
  fs::remove_all(m2.output_dir);
}

TEST(Dispatch, AuditOfIdenticalDirectoriesIsZero) {
  const fs::path real = scratch("audit_real"), out = scratch("audit_out");
  fs::create_directories(real);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 0.1);
  for (const std::string& name : {"a.wav", "b.wav"}) {
    std::vector<double> x(8000);
    for (double& v : x) v = d(rng);
    raf::dsp::write_wav(real / name, raf::dsp::Waveform(x, 16000.0),
                        raf::dsp::WavFormat::kFloat32);
  }
  lab::RunManifest m;
  m.command = "audit";
  m.config = lab::resolve_config("audit", Json{{"real_dir", real.string()},
                                               {"fake_dir", real.string()}});
  m.output_dir = out;
  std::ostringstream log;
  ASSERT_EQ(lab::dispatch(m, {}, log), lab::kExitOk);
  const lab::Table t = lab::parse_csv(read_file(out / "audit.csv"));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.header.size(), 7u);
  for (const auto& row : t.rows)
    for (std::size_t c = 1; c < row.size(); ++c) EXPECT_EQ(std::stod(row[c]), 0.0);
  fs::remove_all(real);
  fs::remove_all(out);
}

int run(const std::string& args) {
  const int status = std::system((std::string(RAF_LAB_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, ExitCodesAndRerun) {
  const fs::path dir = scratch("bin");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.json") << R"({"gama": 0.2})";
    std::ofstream(dir / "ok.json") << R"({"steps": 0, "batch": 16, "eval_samples": 16})";
  }
  EXPECT_EQ(run("toy1d --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string()),
            lab::kExitConfig);
  EXPECT_EQ(run("toy1d --config " + (dir / "ok.json").string() + " --seed 2 --out " +
                (dir / "a").string()),
            lab::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "a" / "toy1d_seed2.csv"));
  EXPECT_EQ(run("rerun " + (dir / "a" / "manifest.json").string() + " --threads 2 --out " +
                (dir / "b").string()),
            lab::kExitOk);
  EXPECT_EQ(read_file(dir / "a" / "toy1d_seed2.csv"), read_file(dir / "b" / "toy1d_seed2.csv"));
  fs::remove_all(dir);
}

}  // namespace

#endif
