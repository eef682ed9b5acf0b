#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "raf/autodiff.hpp"
#include "raf/tensor.hpp"

namespace raf::models {

/// Trainable parameters of a fully connected network. Layer l maps
/// dims[l] -> dims[l+1]; weights are (in x out), biases (1 x out).
/// Hidden layers use leaky-relu(0.1); the output layer is linear.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> layer_dims);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  std::size_t input_width() const { return dims_.front(); }
  std::size_t output_width() const { return dims_.back(); }

  Tensor& weight(std::size_t l) { return weights_.at(l); }
  const Tensor& weight(std::size_t l) const { return weights_.at(l); }
  Tensor& bias(std::size_t l) { return biases_.at(l); }
  const Tensor& bias(std::size_t l) const { return biases_.at(l); }

  /// Flat parameter list: w0, b0, w1, b1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

/// An Mlp whose parameters are leaves of a particular graph.
struct BoundMlp {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;

  /// Parameter leaves in Mlp::parameters() order.
  std::vector<ad::Var> leaves() const;
};

struct MlpOutput {
  ad::Var out;
  /// Post-activation hidden outputs, one per hidden layer.
  std::vector<ad::Var> features;
};

BoundMlp bind(ad::Graph& graph, const Mlp& mlp);

/// Forward pass over a batch x (B x in).
MlpOutput mlp_forward(const BoundMlp& params, ad::Var x);

enum class BiasInit {
  kZero,
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  kFanInUniform,
};

/// Kaiming-uniform fan-in initialization for leaky-relu(0.1). Biases are
/// zero unless requested otherwise.
void init_params(Mlp& mlp, std::uint64_t seed, BiasInit bias = BiasInit::kZero);

/// Bound used by init_params for a layer with the given fan-in.
double kaiming_bound(std::size_t fan_in);

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double weight_decay = 0.01;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;
};

OptimizerState make_optimizer(const AdamWConfig& config,
                              std::span<Tensor* const> params);

/// One AdamW update with decoupled weight decay and bias correction.
/// Throws NumericFault on non-finite gradients.
void adamw_step(OptimizerState& state, std::span<Tensor* const> params,
                std::span<const Tensor> grads);

/// lr0 * decay^epoch.
double exp_lr_decay(double lr0, double epoch, double decay);

// Checkpoints: `<stem>.bin` holds every tensor as little-endian float64,
// concatenated; `<stem>.json` lists name, shape and element offset of each.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void save_checkpoint(const std::filesystem::path& stem,
                     std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& stem);

std::vector<NamedTensor> named_parameters(const Mlp& mlp,
                                          const std::string& prefix);
/// Copies tensors named `<prefix>.w<l>` / `<prefix>.b<l>` into `mlp`.
void assign_parameters(Mlp& mlp, const std::string& prefix,
                       std::span<const NamedTensor> tensors);

}  // namespace raf::models
