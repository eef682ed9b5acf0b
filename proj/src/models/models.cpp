#include "raf/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <utility>

#include <nlohmann/json.hpp>

#include "raf/errors.hpp"

namespace raf::models {

Mlp::Mlp(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  RAF_REQUIRE(dims_.size() >= 2, "an MLP needs at least two layer widths");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    RAF_REQUIRE(dims_[l] > 0 && dims_[l + 1] > 0, "zero-width MLP layer");
    weights_.emplace_back(Shape{dims_[l], dims_[l + 1]});
    biases_.emplace_back(Shape{1, dims_[l + 1]});
  }
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->size();
  return n;
}

std::vector<ad::Var> BoundMlp::leaves() const {
  std::vector<ad::Var> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

BoundMlp bind(ad::Graph& graph, const Mlp& mlp) {
  BoundMlp b;
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    b.weights.push_back(graph.leaf(mlp.weight(l)));
    b.biases.push_back(graph.leaf(mlp.bias(l)));
  }
  return b;
}

MlpOutput mlp_forward(const BoundMlp& params, ad::Var x) {
  RAF_REQUIRE(!params.weights.empty(), "forward through an empty MLP");
  RAF_REQUIRE(x.shape().size() == 2 &&
                  x.shape()[1] == params.weights.front().shape()[0],
              "MLP input width mismatch: got " + shape_str(x.shape()) +
                  ", expected width " +
                  std::to_string(params.weights.front().shape()[0]));
  MlpOutput out;
  ad::Var h = x;
  const std::size_t n = params.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    h = ad::add(ad::matmul(h, params.weights[l]), params.biases[l]);
    if (l + 1 < n) {
      h = ad::leaky_relu(h);
      out.features.push_back(h);
    }
  }
  out.out = h;
  return out;
}

double kaiming_bound(std::size_t fan_in) {
  const double gain = std::sqrt(2.0 / (1.0 + ad::kLeakySlope * ad::kLeakySlope));
  return gain * std::sqrt(3.0 / static_cast<double>(fan_in));
}

void init_params(Mlp& mlp, std::uint64_t seed, BiasInit bias) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    const std::size_t fan_in = mlp.layer_dims()[l];
    const double bound = kaiming_bound(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : mlp.weight(l).data()) w = dist(rng);
    if (bias == BiasInit::kZero) {
      for (double& b : mlp.bias(l).data()) b = 0.0;
      continue;
    }
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> b_dist(-b_bound, b_bound);
    for (double& b : mlp.bias(l).data()) b = b_dist(rng);
  }
}

OptimizerState make_optimizer(const AdamWConfig& config,
                              std::span<Tensor* const> params) {
  OptimizerState s;
  s.config = config;
  for (const Tensor* p : params) {
    s.first_moment.emplace_back(p->shape());
    s.second_moment.emplace_back(p->shape());
  }
  return s;
}

void adamw_step(OptimizerState& state, std::span<Tensor* const> params,
                std::span<const Tensor> grads) {
  RAF_REQUIRE(params.size() == grads.size() &&
                  params.size() == state.first_moment.size(),
              "optimizer parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    RAF_REQUIRE(params[i]->shape() == grads[i].shape(),
                "gradient shape " + shape_str(grads[i].shape()) +
                    " does not match parameter " +
                    shape_str(params[i]->shape()));
    if (!grads[i].all_finite()) {
      throw NumericFault("non-finite gradient for parameter " +
                         std::to_string(i));
    }
  }
  const AdamWConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] *= 1.0 - c.lr * c.weight_decay;
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

double exp_lr_decay(double lr0, double epoch, double decay) {
  RAF_REQUIRE(decay > 0.0 && decay <= 1.0, "decay must lie in (0, 1]");
  return lr0 * std::pow(decay, epoch);
}

namespace {

void write_le_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_le_double(const unsigned char* buf) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

std::filesystem::path with_ext(const std::filesystem::path& stem,
                               const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem,
                     std::span<const NamedTensor> tensors) {
  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw IoError("cannot write " + with_ext(stem, ".bin").string());
  nlohmann::ordered_json manifest;
  manifest["format"] = "float64-le";
  manifest["tensors"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const NamedTensor& nt : tensors) {
    for (double v : nt.tensor.data()) write_le_double(bin, v);
    manifest["tensors"].push_back({{"name", nt.name},
                                   {"shape", nt.tensor.shape()},
                                   {"offset", offset}});
    offset += nt.tensor.size();
  }
  manifest["count"] = offset;
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw IoError("cannot write " + with_ext(stem, ".json").string());
  js << manifest.dump(2) << '\n';
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw IoError("cannot read " + with_ext(stem, ".json").string());
  const nlohmann::json manifest = nlohmann::json::parse(js);
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw IoError("cannot read " + with_ext(stem, ".bin").string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(bin)),
                                 std::istreambuf_iterator<char>());
  const std::size_t count = manifest.at("count").get<std::size_t>();
  if (raw.size() != count * 8) {
    throw IoError("checkpoint payload has " + std::to_string(raw.size()) +
                  " bytes, expected " + std::to_string(count * 8));
  }
  std::vector<NamedTensor> out;
  for (const auto& entry : manifest.at("tensors")) {
    Shape shape = entry.at("shape").get<Shape>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t n = shape_size(shape);
    if ((offset + n) > count) throw IoError("checkpoint entry out of range");
    std::vector<double> data(n);
    for (std::size_t k = 0; k < n; ++k)
      data[k] = read_le_double(&raw[(offset + k) * 8]);
    out.push_back({entry.at("name").get<std::string>(),
                   Tensor(std::move(shape), std::move(data))});
  }
  return out;
}

std::vector<NamedTensor> named_parameters(const Mlp& mlp,
                                          const std::string& prefix) {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    out.push_back({prefix + ".w" + std::to_string(l), mlp.weight(l)});
    out.push_back({prefix + ".b" + std::to_string(l), mlp.bias(l)});
  }
  return out;
}

void assign_parameters(Mlp& mlp, const std::string& prefix,
                       std::span<const NamedTensor> tensors) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const NamedTensor& nt : tensors)
      if (nt.name == name) return nt.tensor;
    throw IoError("checkpoint lacks tensor " + name);
  };
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    const Tensor& w = find(prefix + ".w" + std::to_string(l));
    const Tensor& b = find(prefix + ".b" + std::to_string(l));
    RAF_REQUIRE(w.shape() == mlp.weight(l).shape() &&
                    b.shape() == mlp.bias(l).shape(),
                "checkpoint shape mismatch for layer " + std::to_string(l));
    mlp.weight(l) = w;
    mlp.bias(l) = b;
  }
}

}  // namespace raf::models
