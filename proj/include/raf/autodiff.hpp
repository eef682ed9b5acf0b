#pragma once

// Reverse-mode differentiation over small dense tensors.
//
// Every operation evaluates eagerly and records a node in a Graph. Backward
// passes are themselves expressed as graph operations, so the gradient nodes
// returned by grad() can be differentiated again. That is what the
// zero-centered gradient penalties need: the parameter gradient of
// ||dD/dx||^2.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "raf/tensor.hpp"

namespace raf::ad {

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kMatMul,
  kTranspose,
  kReshape,
  kSumTo,
  kExpand,
  kSquare,
  kAbs,
  kLog,
  kExp,
  kTanh,
  kLeakyRelu,
  kSoftplus,
  kSigmoid,
  kSqrt,
  kClampMin,
  kConcat,
  kSlice,
  kPad,
  kL2Norm,
  kLinearMap,
};

std::string_view op_name(OpKind op);

/// A fixed linear operator with a known adjoint. Used for transforms such as
/// the STFT whose dense matrix would be too large to materialize. Because the
/// operator is linear, its backward is the adjoint and the adjoint's backward
/// is the operator itself, so second-order passes come for free.
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Shape input_shape() const = 0;
  virtual Shape output_shape() const = 0;
  virtual void apply(std::span<const double> in, std::span<double> out) const = 0;
  virtual void apply_adjoint(std::span<const double> in,
                             std::span<double> out) const = 0;
};

inline constexpr double kLeakySlope = 0.1;

class Graph;

/// Lightweight handle to a node of a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph* graph() const noexcept { return graph_; }
  NodeId id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const;
  double item() const { return value().item(); }
  bool requires_grad() const;

 private:
  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

struct NodeAttr {
  double scalar = 0.0;
  std::size_t axis = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::shared_ptr<const LinearMap> map;
  bool adjoint = false;
};

struct Node {
  OpKind op = OpKind::kConstant;
  std::vector<NodeId> inputs;
  Tensor value;
  bool requires_grad = false;
  NodeAttr attr;
};

/// Append-only computation record. Single writer while building; a finished
/// graph may be read concurrently.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Differentiable input (parameter or data).
  Var leaf(Tensor value);
  Var constant(Tensor value);
  Var scalar(double value) { return constant(Tensor::scalar(value)); }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  /// Drops every node with id >= size. Handles to dropped nodes dangle.
  void truncate(std::size_t size);

  /// Records an evaluated node. Throws NumericFault on non-finite values.
  Var push(OpKind op, std::vector<NodeId> inputs, Tensor value,
           NodeAttr attr = {});

 private:
  std::vector<Node> nodes_;
};

// Elementwise arithmetic with broadcasting: shapes are right-aligned and
// each dimension must match or be 1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, Shape shape);
/// Reduces broadcast dimensions so the result has `shape`.
Var sum_to(Var a, Shape shape);
Var expand(Var a, Shape shape);
Var sum(Var a);
Var mean(Var a);
/// Sum along one axis, keeping it with extent 1.
Var sum_axis(Var a, std::size_t axis);
Var mean_axis(Var a, std::size_t axis);

Var square(Var a);
Var abs(Var a);
Var log(Var a);
Var exp(Var a);
Var tanh(Var a);
Var leaky_relu(Var a);
Var softplus(Var a);
Var sigmoid(Var a);
Var sqrt(Var a);
Var clamp_min(Var a, double floor);
Var relu(Var a);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
/// Embeds `a` at offset `begin` along `axis` into a zero tensor of extent
/// `total`.
Var pad(Var a, std::size_t axis, std::size_t begin, std::size_t total);
Var l2_norm(Var a);
Var linear_map(std::shared_ptr<const LinearMap> map, Var a,
               bool adjoint = false);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }

/// Differentiable gradients of scalar `output` with respect to each of `wrt`.
/// New nodes are appended to the graph, so the results can be differentiated
/// again. Inputs that do not influence `output` get a zero constant.
std::vector<Var> grad(Var output, std::span<const Var> wrt);

/// Numeric gradients of scalar `output` with respect to each of `wrt`. The
/// graph is left exactly as it was.
std::vector<Tensor> backward(Var output, std::span<const Var> wrt);

/// ||d output / d input||^2 as a differentiable node. `input` must be a leaf.
Var input_grad_sq_norm(Var output, Var input);

}  // namespace raf::ad
