#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <type_traits>

#include "raf/errors.hpp"

namespace raf::lab {
namespace ex = raf::experiments;

void AuditConfig::validate() const {
  if (real_dir.empty() || fake_dir.empty())
    throw ConfigError("real_dir and fake_dir are required");
  if (alphas.size() != 3) throw ConfigError("alphas must have 3 entries");
  for (const dsp::StftConfig& r : resolutions) r.validate();
}

namespace {

std::string_view transform_name(objectives::GapTransform t) {
  return t == objectives::GapTransform::kSoftplus ? "softplus" : "identity";
}

std::string_view bias_name(models::BiasInit b) {
  return b == models::BiasInit::kZero ? "zero" : "fan_in_uniform";
}

std::string_view task_name(ex::CompareTask t) {
  return t == ex::CompareTask::kToy1d ? "toy1d" : "wavetoy";
}

// Field lists shared by the writer and the reader.
template <class C, class V>
void adam_fields(C& c, V& v) {
  v("lr", c.lr);
  v("beta1", c.beta1);
  v("beta2", c.beta2);
  v("weight_decay", c.weight_decay);
  v("eps", c.eps);
}

template <class C, class V>
void stft_fields(C& c, V& v) {
  v("fft_size", c.fft_size);
  v("hop_size", c.hop_size);
}

template <class C, class V>
void toy_fields(C& c, V& v) {
  v("modes", c.modes);
  v("mode_std", c.mode_std);
  v("latent_std", c.latent_std);
  v("objective", c.objective);
  v("steps", c.steps);
  v("batch", c.batch);
  v("seed", c.seed);
  v("hidden", c.hidden);
  v("use_gp", c.use_gp);
  v("gp_interval", c.gp_interval);
  v("gamma", c.gamma);
  v("transform", c.transform);
  v("alpha", c.alpha);
  v("calibrate_alpha", c.calibrate_alpha);
  v("adam", c.adam);
  v("bias_init", c.bias_init);
  v("lr_decay", c.lr_decay);
  v("decay_every", c.decay_every);
  v("log_every", c.log_every);
  v("eval_samples", c.eval_samples);
  v("coverage_radius", c.coverage_radius);
  v("coverage_threshold", c.coverage_threshold);
  v("sustain_logs", c.sustain_logs);
}

template <class C, class V>
void segsize_fields(C& c, V& v) {
  v("segment_sizes", c.segment_sizes);
  v("full_length", c.full_length);
  v("corpus_pairs", c.corpus_pairs);
  v("segments_per_size", c.segments_per_size);
  v("sample_rate", c.sample_rate);
  v("seed", c.seed);
  v("alphas", c.alphas);
  v("resolutions", c.resolutions);
  v("identical_pairs", c.identical_pairs);
}

template <class C, class V>
void wave_fields(C& c, V& v) {
  v("seed", c.seed);
  v("steps", c.steps);
  v("batch", c.batch);
  v("chunk", c.chunk);
  v("segment_size", c.segment_size);
  v("envelope_bands", c.envelope_bands);
  v("disc_mels", c.disc_mels);
  v("hidden", c.hidden);
  v("sample_rate", c.sample_rate);
  v("train_examples", c.train_examples);
  v("heldout_examples", c.heldout_examples);
  v("objective", c.objective);
  v("transform", c.transform);
  v("use_gp", c.use_gp);
  v("gp_interval", c.gp_interval);
  v("gamma", c.gamma);
  v("lambda_fm", c.lambda_fm);
  v("lambda_mel", c.lambda_mel);
  v("adam", c.adam);
  v("lr_decay", c.lr_decay);
  v("decay_every", c.decay_every);
  v("alphas", c.alphas);
  v("calibrate_alphas", c.calibrate_alphas);
  v("log_every", c.log_every);
}

template <class C, class V>
void compare_fields(C& c, V& v) {
  v("objectives", c.objectives);
  v("long_settings", c.long_settings);
  v("gp_settings", c.gp_settings);
  v("seeds", c.seeds);
  v("tasks", c.tasks);
  v("toy", c.toy);
  v("wave", c.wave);
  v("short_segment", c.short_segment);
  v("long_segment", c.long_segment);
}

template <class C, class V>
void audit_fields(C& c, V& v) {
  v("real_dir", c.real_dir);
  v("fake_dir", c.fake_dir);
  v("alphas", c.alphas);
  v("resolutions", c.resolutions);
}

// ---------------------------------------------------------------------------
// Writing

Json encode(double v) { return v; }
Json encode(bool v) { return v; }
Json encode(const std::string& v) { return v; }
Json encode(ex::Objective v) { return std::string(ex::objective_name(v)); }
Json encode(objectives::GapTransform v) { return std::string(transform_name(v)); }
Json encode(models::BiasInit v) { return std::string(bias_name(v)); }
Json encode(ex::CompareTask v) { return std::string(task_name(v)); }
template <class T>
  requires std::is_integral_v<T> && (!std::is_same_v<T, bool>)
Json encode(T v) { return v; }
Json encode(const models::AdamWConfig& v);
Json encode(const dsp::StftConfig& v);
Json encode(const ex::ToyConfig& v) { return to_json(v); }
Json encode(const ex::WaveToyConfig& v) { return to_json(v); }
template <class T>
Json encode(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(encode(static_cast<T>(x)));
  return a;
}

struct Writer {
  Json j = Json::object();
  template <class T>
  void operator()(const char* key, const T& v) { j[key] = encode(v); }
};

Json encode(const models::AdamWConfig& v) {
  Writer w;
  adam_fields(v, w);
  return w.j;
}

Json encode(const dsp::StftConfig& v) {
  Writer w;
  stft_fields(v, w);
  return w.j;
}

// ---------------------------------------------------------------------------
// Reading

[[noreturn]] void mismatch(const std::string& path, const char* expected) {
  throw ConfigError("type mismatch at " + path + ": expected " + expected);
}

void decode(const Json& j, const std::string& path, double& v) {
  if (!j.is_number()) mismatch(path, "number");
  v = j.get<double>();
}

void decode(const Json& j, const std::string& path, bool& v) {
  if (!j.is_boolean()) mismatch(path, "boolean");
  v = j.get<bool>();
}

void decode(const Json& j, const std::string& path, std::string& v) {
  if (!j.is_string()) mismatch(path, "string");
  v = j.get<std::string>();
}

template <class T>
  requires std::is_integral_v<T> && (!std::is_same_v<T, bool>)
void decode(const Json& j, const std::string& path, T& v) {
  if (!j.is_number_integer()) mismatch(path, "integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)
      mismatch(path, "non-negative integer");
    v = static_cast<T>(j.get<std::uint64_t>());
  } else {
    v = static_cast<T>(j.get<std::int64_t>());
  }
}

template <class E, class NameFn>
void decode_enum(const Json& j, const std::string& path, E& v,
                 std::initializer_list<E> values, NameFn name) {
  if (!j.is_string()) mismatch(path, "string");
  const std::string s = j.get<std::string>();
  for (E e : values)
    if (name(e) == s) {
      v = e;
      return;
    }
  throw ConfigError("invalid value at " + path + ": " + s);
}

void decode(const Json& j, const std::string& path, ex::Objective& v) {
  const std::vector<ex::Objective> all = ex::all_objectives();
  if (!j.is_string()) mismatch(path, "string");
  for (ex::Objective o : all)
    if (ex::objective_name(o) == j.get<std::string>()) {
      v = o;
      return;
    }
  throw ConfigError("invalid value at " + path + ": " + j.get<std::string>());
}

void decode(const Json& j, const std::string& path, objectives::GapTransform& v) {
  decode_enum(j, path, v,
              {objectives::GapTransform::kSoftplus, objectives::GapTransform::kIdentity},
              transform_name);
}

void decode(const Json& j, const std::string& path, models::BiasInit& v) {
  decode_enum(j, path, v, {models::BiasInit::kZero, models::BiasInit::kFanInUniform},
              bias_name);
}

void decode(const Json& j, const std::string& path, ex::CompareTask& v) {
  decode_enum(j, path, v, {ex::CompareTask::kToy1d, ex::CompareTask::kWaveToy},
              task_name);
}

void decode(const Json& j, const std::string& path, models::AdamWConfig& v);
void decode(const Json& j, const std::string& path, dsp::StftConfig& v);
void decode(const Json& j, const std::string& path, ex::ToyConfig& v);
void decode(const Json& j, const std::string& path, ex::WaveToyConfig& v);
template <class T>
void decode(const Json& j, const std::string& path, std::vector<T>& v);

struct Reader {
  const Json& j;
  std::string prefix;
  std::set<std::string> seen;

  template <class T>
  void operator()(const char* key, T& v) {
    seen.insert(key);
    const auto it = j.find(key);
    if (it != j.end()) decode(*it, prefix + key, v);
  }

  void finish() const {
    for (const auto& [key, value] : j.items())
      if (!seen.contains(key)) throw ConfigError("unknown key: " + prefix + key);
  }
};

template <class C, class Fields>
void read_object(const Json& j, const std::string& path, C& c, Fields fields) {
  if (!j.is_object()) mismatch(path.empty() ? "<root>" : path, "object");
  Reader r{j, path.empty() ? "" : path + ".", {}};
  fields(c, r);
  r.finish();
}

void decode(const Json& j, const std::string& path, models::AdamWConfig& v) {
  read_object(j, path, v, [](auto& c, auto& r) { adam_fields(c, r); });
}

void decode(const Json& j, const std::string& path, dsp::StftConfig& v) {
  read_object(j, path, v, [](auto& c, auto& r) { stft_fields(c, r); });
}

void decode(const Json& j, const std::string& path, ex::ToyConfig& v) {
  read_object(j, path, v, [](auto& c, auto& r) { toy_fields(c, r); });
}

void decode(const Json& j, const std::string& path, ex::WaveToyConfig& v) {
  read_object(j, path, v, [](auto& c, auto& r) { wave_fields(c, r); });
}

template <class T>
void decode(const Json& j, const std::string& path, std::vector<T>& v) {
  if (!j.is_array()) mismatch(path, "array");
  std::vector<T> out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    T item{};
    decode(j[i], path + "[" + std::to_string(i) + "]", item);
    out[i] = item;
  }
  v = std::move(out);
}

template <class C, class Fields>
Json write_object(const C& c, Fields fields) {
  Writer w;
  fields(c, w);
  return w.j;
}

}  // namespace

Json to_json(const ex::ToyConfig& c) {
  return write_object(c, [](auto& x, auto& w) { toy_fields(x, w); });
}
Json to_json(const ex::SegmentStudyConfig& c) {
  return write_object(c, [](auto& x, auto& w) { segsize_fields(x, w); });
}
Json to_json(const ex::WaveToyConfig& c) {
  return write_object(c, [](auto& x, auto& w) { wave_fields(x, w); });
}
Json to_json(const ex::CompareConfig& c) {
  return write_object(c, [](auto& x, auto& w) { compare_fields(x, w); });
}
Json to_json(const AuditConfig& c) {
  return write_object(c, [](auto& x, auto& w) { audit_fields(x, w); });
}

void from_json(const Json& j, ex::ToyConfig& c) {
  read_object(j, "", c, [](auto& x, auto& r) { toy_fields(x, r); });
}
void from_json(const Json& j, ex::SegmentStudyConfig& c) {
  read_object(j, "", c, [](auto& x, auto& r) { segsize_fields(x, r); });
}
void from_json(const Json& j, ex::WaveToyConfig& c) {
  read_object(j, "", c, [](auto& x, auto& r) { wave_fields(x, r); });
}
void from_json(const Json& j, ex::CompareConfig& c) {
  read_object(j, "", c, [](auto& x, auto& r) { compare_fields(x, r); });
}
void from_json(const Json& j, AuditConfig& c) {
  read_object(j, "", c, [](auto& x, auto& r) { audit_fields(x, r); });
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"toy1d", "segsize", "wavetoy",
                                              "compare", "audit", "calibrate"};
  return names;
}

namespace {

template <class C>
Json resolve_as(const Json& doc) {
  C c;
  if (!doc.is_null()) from_json(doc, c);
  c.validate();
  return to_json(c);
}

}  // namespace

Json resolve_config(const std::string& command, const Json& doc) {
  if (command == "toy1d") return resolve_as<ex::ToyConfig>(doc);
  if (command == "segsize") return resolve_as<ex::SegmentStudyConfig>(doc);
  if (command == "wavetoy") return resolve_as<ex::WaveToyConfig>(doc);
  if (command == "compare") return resolve_as<ex::CompareConfig>(doc);
  if (command == "audit" || command == "calibrate") {
    // Directories are often supplied on the command line, so they are
    // checked at dispatch time.
    AuditConfig c;
    if (!doc.is_null()) from_json(doc, c);
    return to_json(c);
  }
  throw ConfigError("unknown command: " + command);
}

Json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Json RunManifest::identity() const {
  Json j = Json::object();
  j["command"] = command;
  j["config"] = config;
  j["seeds"] = seeds;
  j["version"] = version;
  return j;
}

Json RunManifest::to_json() const {
  Json j = identity();
  j["output_dir"] = output_dir.string();
  j["manifest_hash"] = hash();
  return j;
}

std::string RunManifest::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(identity().dump())));
  return buf;
}

RunManifest manifest_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("manifest must be an object");
  for (const char* key : {"command", "config", "seeds", "version"})
    if (!j.contains(key)) throw ConfigError(std::string("manifest is missing ") + key);
  RunManifest m;
  decode(j["command"], "command", m.command);
  decode(j["seeds"], "seeds", m.seeds);
  decode(j["version"], "version", m.version);
  m.config = resolve_config(m.command, j["config"]);
  if (j.contains("output_dir")) {
    std::string dir;
    decode(j["output_dir"], "output_dir", dir);
    m.output_dir = dir;
  }
  return m;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto parse = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
      throw ConfigError("invalid seed: " + text);
    return v;
  };
  const std::size_t dots = text.find("..");
  if (dots == std::string::npos) return {parse(text)};
  const std::uint64_t a = parse(std::string_view(text).substr(0, dots));
  const std::uint64_t b = parse(std::string_view(text).substr(dots + 2));
  if (b < a) throw ConfigError("empty seed range: " + text);
  if (b - a >= 100000) throw ConfigError("seed range too large: " + text);
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
  return out;
}

}  // namespace raf::lab
