#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "raf/dsp.hpp"
#include "raf/errors.hpp"
#include "raf/experiments.hpp"
#include "raf/quality_gap.hpp"

namespace py = pybind11;
namespace dsp = raf::dsp;
namespace ex = raf::experiments;
namespace q = raf::quality;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const raf::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

std::vector<dsp::StftConfig> resolutions_from(
    const std::vector<std::pair<std::size_t, std::size_t>>& res) {
  if (res.empty()) return dsp::default_resolutions();
  std::vector<dsp::StftConfig> out;
  for (auto [n, h] : res) out.push_back({n, h});
  return out;
}

py::dict toy_trace_dict(const ex::TrainTrace& t, const ex::ToyConfig& cfg) {
  py::list rows;
  for (const auto& r : t.rows) {
    py::dict d;
    d["step"] = r.step;
    d["disc_loss"] = r.disc_loss;
    d["gen_loss"] = r.gen_loss;
    d["coverage"] = r.coverage;
    d["gap_mean"] = r.gap_mean;
    d["gap_min"] = r.gap_min;
    d["quality_mean"] = r.quality_mean;
    d["samples"] = py::array_t<double>(r.samples.size(), r.samples.data());
    rows.append(d);
  }
  py::dict out;
  out["alpha"] = t.alpha;
  out["rows"] = rows;
  out["diverged"] = t.diverged;
  out["diagnostic"] = t.diagnostic;
  auto steps = ex::steps_to_bimodality(t, cfg.coverage_threshold, cfg.sustain_logs);
  out["steps_to_bimodality"] = steps ? py::object(py::int_(*steps)) : py::object(py::none());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quality-gap GAN objectives, DSP helpers and toy experiments";

  auto base = py::register_exception<raf::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<raf::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<raf::ContractViolation>(m, "ContractViolation", base.ptr());

  m.def("hann_window", &dsp::hann_window, py::arg("n"));

  m.def(
      "stft_magnitude",
      [](const Array& x, std::size_t fft_size, std::size_t hop_size) {
        const std::vector<double> v = to_vector(x);
        return to_array(dsp::stft_magnitude(v, dsp::StftConfig{fft_size, hop_size}));
      },
      py::arg("signal"), py::arg("fft_size") = 1024, py::arg("hop_size") = 256,
      "Magnitude spectrogram, shape (frames, fft_size / 2 + 1).");

  m.def(
      "mstft_distance",
      [](const Array& y, const Array& g, double sample_rate,
         const std::vector<std::pair<std::size_t, std::size_t>>& resolutions) {
        const auto res = resolutions_from(resolutions);
        return dsp::mstft_distance(dsp::Waveform(to_vector(y), sample_rate),
                                   dsp::Waveform(to_vector(g), sample_rate), res);
      },
      py::arg("reference"), py::arg("estimate"), py::arg("sample_rate") = 24000.0,
      py::arg("resolutions") = std::vector<std::pair<std::size_t, std::size_t>>{});

  m.def(
      "resample",
      [](const Array& x, double rate, double target_rate) {
        return dsp::sinc_resample(dsp::Waveform(to_vector(x), rate), target_rate).samples;
      },
      py::arg("signal"), py::arg("rate"), py::arg("target_rate"));

  m.def(
      "quality_gap_vector",
      [](const Array& y, const Array& g, double sample_rate, std::vector<double> alphas) {
        const q::BaselineExtractor w = q::make_extractor_w(), h = q::make_extractor_h();
        const q::EmbeddingExtractor* exs[] = {&w, &h};
        const auto res = dsp::default_resolutions();
        const auto v = q::quality_gap_vector(dsp::Waveform(to_vector(y), sample_rate),
                                             dsp::Waveform(to_vector(g), sample_rate), exs,
                                             alphas, res);
        py::dict out;
        out["ids"] = v.component_ids;
        out["components"] = v.components;
        out["unscaled"] = v.unscaled;
        return out;
      },
      py::arg("reference"), py::arg("estimate"), py::arg("sample_rate") = 24000.0,
      py::arg("alphas") = std::vector<double>{1.0, 1.0, 1.0});

  m.def("toy_quality_gap", &q::toy_quality_gap, py::arg("a"), py::arg("b"));

  m.def("objectives", [] {
    std::vector<std::string> out;
    for (ex::Objective o : ex::all_objectives()) out.emplace_back(ex::objective_name(o));
    return out;
  });

  m.def(
      "run_toy1d",
      [](const std::string& objective, std::uint64_t seed, long steps, bool use_gp,
         const std::string& transform) {
        ex::ToyConfig c;
        c.objective = ex::parse_objective(objective);
        c.seed = seed;
        c.steps = steps;
        c.use_gp = use_gp;
        if (transform == "identity")
          c.transform = raf::objectives::GapTransform::kIdentity;
        else if (transform != "softplus")
          throw raf::ConfigError("unknown transform: " + transform);
        ex::TrainTrace t;
        {
          py::gil_scoped_release release;
          t = ex::run_toy1d(c);
        }
        return toy_trace_dict(t, c);
      },
      py::arg("objective") = "raf", py::arg("seed") = 0, py::arg("steps") = 3000,
      py::arg("use_gp") = true, py::arg("transform") = "softplus");

  m.def(
      "run_segment_size_study",
      [](std::uint64_t seed, std::size_t corpus_pairs, std::size_t segments_per_size,
         unsigned threads) {
        ex::SegmentStudyConfig c;
        c.seed = seed;
        c.corpus_pairs = corpus_pairs;
        c.segments_per_size = segments_per_size;
        c.threads = threads;
        ex::SegmentStudyResult r;
        {
          py::gil_scoped_release release;
          r = ex::run_segment_size_study(c);
        }
        py::dict out;
        out["segment_sizes"] = r.segment_sizes;
        out["component_ids"] = r.component_ids;
        out["errors"] = r.errors;
        out["spearman"] = r.spearman;
        return out;
      },
      py::arg("seed") = 0, py::arg("corpus_pairs") = 12, py::arg("segments_per_size") = 8,
      py::arg("threads") = 1);

  m.def(
      "run_wave_toy",
      [](std::uint64_t seed, long steps, std::size_t segment_size, std::size_t train_examples,
         std::size_t heldout_examples) {
        ex::WaveToyConfig c;
        c.seed = seed;
        c.steps = steps;
        c.segment_size = segment_size;
        c.train_examples = train_examples;
        c.heldout_examples = heldout_examples;
        ex::WaveToyReport r;
        {
          py::gil_scoped_release release;
          r = ex::run_wave_toy(c);
        }
        py::dict out;
        out["component_ids"] = r.component_ids;
        out["alphas"] = r.alphas;
        out["initial_quality"] = r.initial_quality;
        out["final_quality"] = r.final_quality;
        out["gap_quality_correlation"] = r.gap_quality_correlation;
        out["diverged"] = r.diverged;
        return out;
      },
      py::arg("seed") = 0, py::arg("steps") = 1500, py::arg("segment_size") = 8192,
      py::arg("train_examples") = 48, py::arg("heldout_examples") = 64);
}
