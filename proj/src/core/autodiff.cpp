#include "raf/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "raf/errors.hpp"

namespace raf::ad {
namespace {

using Dims = std::array<std::size_t, 3>;

Dims pad3(const Shape& s) {
  Dims d{1, 1, 1};
  const std::size_t off = 3 - s.size();
  for (std::size_t i = 0; i < s.size(); ++i) d[off + i] = s[i];
  return d;
}

Dims strides3(const Dims& d) { return {d[1] * d[2], d[2], 1}; }

// Strides of `in` when read at the coordinates of `out`; broadcast axes get 0.
Dims broadcast_strides(const Dims& in, const Dims& out) {
  Dims st = strides3(in);
  for (int i = 0; i < 3; ++i) {
    if (in[i] == 1 && out[i] != 1) st[i] = 0;
  }
  return st;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ContractViolation("shapes " + shape_str(a) + " and " +
                              shape_str(b) + " are not broadcastable");
    }
    out[i] = std::max(da, db);
  }
  return out;
}

template <class F>
Tensor binary_map(const Tensor& a, const Tensor& b, F f) {
  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  const Shape shape = broadcast_shape(a.shape(), b.shape());
  Tensor out(shape);
  const Dims od = pad3(shape);
  const Dims sa = broadcast_strides(pad3(a.shape()), od);
  const Dims sb = broadcast_strides(pad3(b.shape()), od);
  std::size_t k = 0;
  for (std::size_t i = 0; i < od[0]; ++i)
    for (std::size_t j = 0; j < od[1]; ++j)
      for (std::size_t l = 0; l < od[2]; ++l, ++k)
        out[k] = f(a[i * sa[0] + j * sa[1] + l * sa[2]],
                   b[i * sb[0] + j * sb[1] + l * sb[2]]);
  return out;
}

template <class F>
Tensor unary_map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

bool broadcastable_to(const Shape& from, const Shape& to) {
  if (from.size() > to.size()) return false;
  const std::size_t off = to.size() - from.size();
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] != 1 && from[i] != to[off + i]) return false;
  }
  return true;
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Graph& graph_of(Var a) {
  RAF_REQUIRE(a.valid(), "operation on an unbound variable");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  RAF_REQUIRE(a.valid() && b.valid(), "operation on an unbound variable");
  RAF_REQUIRE(a.graph() == b.graph(), "operands belong to different graphs");
  return *a.graph();
}

void require_axis(const Shape& s, std::size_t axis) {
  RAF_REQUIRE(axis < s.size(), "axis " + std::to_string(axis) +
                                   " out of range for shape " + shape_str(s));
}

// Splits a shape around `axis` into (outer, extent, inner) for slicing.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScale: return "scale";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSumTo: return "sum_to";
    case OpKind::kExpand: return "expand";
    case OpKind::kSquare: return "square";
    case OpKind::kAbs: return "abs";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kTanh: return "tanh";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kClampMin: return "clamp_min";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kPad: return "pad";
    case OpKind::kL2Norm: return "l2_norm";
    case OpKind::kLinearMap: return "linear_map";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->node(id_).value; }
const Shape& Var::shape() const { return graph_->node(id_).value.shape(); }
bool Var::requires_grad() const { return graph_->node(id_).requires_grad; }

Var Graph::leaf(Tensor value) {
  Var v = push(OpKind::kLeaf, {}, std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Graph::constant(Tensor value) {
  return push(OpKind::kConstant, {}, std::move(value));
}

void Graph::truncate(std::size_t size) {
  if (size < nodes_.size()) nodes_.resize(size);
}

Var Graph::push(OpKind op, std::vector<NodeId> inputs, Tensor value,
                NodeAttr attr) {
  const auto id = static_cast<NodeId>(nodes_.size());
  if (!value.all_finite()) {
    throw NumericFault("non-finite value produced by " +
                           std::string(op_name(op)) + " at node " +
                           std::to_string(id),
                       id);
  }
  bool rg = false;
  for (NodeId in : inputs) rg = rg || nodes_[in].requires_grad;
  nodes_.push_back(Node{op, std::move(inputs), std::move(value), rg,
                        std::move(attr)});
  return Var(this, id);
}

// ---------------------------------------------------------------------------
// Forward operations

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.push(OpKind::kAdd, {a.id(), b.id()},
                binary_map(a.value(), b.value(),
                           [](double x, double y) { return x + y; }));
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.push(OpKind::kSub, {a.id(), b.id()},
                binary_map(a.value(), b.value(),
                           [](double x, double y) { return x - y; }));
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.push(OpKind::kMul, {a.id(), b.id()},
                binary_map(a.value(), b.value(),
                           [](double x, double y) { return x * y; }));
}

Var div(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.push(OpKind::kDiv, {a.id(), b.id()},
                binary_map(a.value(), b.value(),
                           [](double x, double y) { return x / y; }));
}

Var scale(Var a, double c) {
  Graph& g = graph_of(a);
  NodeAttr attr;
  attr.scalar = c;
  return g.push(OpKind::kScale, {a.id()},
                unary_map(a.value(), [c](double x) { return c * x; }),
                std::move(attr));
}

Var add_scalar(Var a, double c) { return add(a, graph_of(a).scalar(c)); }

Var neg(Var a) { return scale(a, -1.0); }

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  RAF_REQUIRE(x.rank() == 2 && y.rank() == 2 && x.dim(1) == y.dim(0),
              "matmul shape mismatch: " + shape_str(x.shape()) + " x " +
                  shape_str(y.shape()));
  const std::size_t m = x.dim(0), k = x.dim(1), n = y.dim(1);
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      if (xv == 0.0) continue;
      const double* yrow = y.data().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += xv * yrow[j];
    }
  }
  return g.push(OpKind::kMatMul, {a.id(), b.id()}, std::move(out));
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  RAF_REQUIRE(x.rank() == 2, "transpose needs a rank-2 tensor");
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return g.push(OpKind::kTranspose, {a.id()}, std::move(out));
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  if (a.shape() == shape) return a;
  return g.push(OpKind::kReshape, {a.id()}, a.value().reshaped(std::move(shape)));
}

Var sum_to(Var a, Shape shape) {
  Graph& g = graph_of(a);
  if (a.shape() == shape) return a;
  RAF_REQUIRE(broadcastable_to(shape, a.shape()),
              "cannot reduce " + shape_str(a.shape()) + " to " +
                  shape_str(shape));
  const Tensor& x = a.value();
  Tensor out(shape);
  const Dims xd = pad3(x.shape());
  const Dims so = broadcast_strides(pad3(shape), xd);
  std::size_t k = 0;
  for (std::size_t i = 0; i < xd[0]; ++i)
    for (std::size_t j = 0; j < xd[1]; ++j)
      for (std::size_t l = 0; l < xd[2]; ++l, ++k)
        out[i * so[0] + j * so[1] + l * so[2]] += x[k];
  return g.push(OpKind::kSumTo, {a.id()}, std::move(out));
}

Var expand(Var a, Shape shape) {
  Graph& g = graph_of(a);
  if (a.shape() == shape) return a;
  RAF_REQUIRE(broadcastable_to(a.shape(), shape),
              "cannot expand " + shape_str(a.shape()) + " to " +
                  shape_str(shape));
  const Tensor& x = a.value();
  Tensor out(shape);
  const Dims od = pad3(shape);
  const Dims sx = broadcast_strides(pad3(x.shape()), od);
  std::size_t k = 0;
  for (std::size_t i = 0; i < od[0]; ++i)
    for (std::size_t j = 0; j < od[1]; ++j)
      for (std::size_t l = 0; l < od[2]; ++l, ++k)
        out[k] = x[i * sx[0] + j * sx[1] + l * sx[2]];
  return g.push(OpKind::kExpand, {a.id()}, std::move(out));
}

Var sum(Var a) { return sum_to(a, Shape{}); }

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var sum_axis(Var a, std::size_t axis) {
  require_axis(a.shape(), axis);
  Shape s = a.shape();
  s[axis] = 1;
  return sum_to(a, std::move(s));
}

Var mean_axis(Var a, std::size_t axis) {
  require_axis(a.shape(), axis);
  const double n = static_cast<double>(a.shape()[axis]);
  return scale(sum_axis(a, axis), 1.0 / n);
}

Var square(Var a) {
  return graph_of(a).push(OpKind::kSquare, {a.id()},
                          unary_map(a.value(), [](double x) { return x * x; }));
}

Var abs(Var a) {
  return graph_of(a).push(
      OpKind::kAbs, {a.id()},
      unary_map(a.value(), [](double x) { return std::fabs(x); }));
}

Var log(Var a) {
  return graph_of(a).push(
      OpKind::kLog, {a.id()},
      unary_map(a.value(), [](double x) { return std::log(x); }));
}

Var exp(Var a) {
  return graph_of(a).push(
      OpKind::kExp, {a.id()},
      unary_map(a.value(), [](double x) { return std::exp(x); }));
}

Var tanh(Var a) {
  return graph_of(a).push(
      OpKind::kTanh, {a.id()},
      unary_map(a.value(), [](double x) { return std::tanh(x); }));
}

Var leaky_relu(Var a) {
  return graph_of(a).push(OpKind::kLeakyRelu, {a.id()},
                          unary_map(a.value(), [](double x) {
                            return x > 0.0 ? x : kLeakySlope * x;
                          }));
}

Var softplus(Var a) {
  return graph_of(a).push(OpKind::kSoftplus, {a.id()},
                          unary_map(a.value(), softplus_value));
}

Var sigmoid(Var a) {
  return graph_of(a).push(OpKind::kSigmoid, {a.id()},
                          unary_map(a.value(), sigmoid_value));
}

Var sqrt(Var a) {
  return graph_of(a).push(
      OpKind::kSqrt, {a.id()},
      unary_map(a.value(), [](double x) { return std::sqrt(x); }));
}

Var clamp_min(Var a, double floor) {
  NodeAttr attr;
  attr.scalar = floor;
  return graph_of(a).push(
      OpKind::kClampMin, {a.id()},
      unary_map(a.value(), [floor](double x) { return std::max(x, floor); }),
      std::move(attr));
}

Var relu(Var a) { return clamp_min(a, 0.0); }

Var concat(std::span<const Var> parts, std::size_t axis) {
  RAF_REQUIRE(!parts.empty(), "concat of zero tensors");
  Graph& g = graph_of(parts.front());
  const Shape& first = parts.front().shape();
  require_axis(first, axis);
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<NodeId> ids;
  for (const Var& p : parts) {
    RAF_REQUIRE(p.graph() == &g, "concat operands belong to different graphs");
    Shape s = p.shape();
    RAF_REQUIRE(s.size() == first.size(), "concat rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      RAF_REQUIRE(i == axis || s[i] == first[i],
                  "concat shape mismatch: " + shape_str(s) + " vs " +
                      shape_str(first));
    }
    out_shape[axis] += s[axis];
    ids.push_back(p.id());
  }
  Tensor out(out_shape);
  const AxisSplit os = split_at(out_shape, axis);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    const AxisSplit ps = split_at(x.shape(), axis);
    for (std::size_t o = 0; o < ps.outer; ++o)
      for (std::size_t e = 0; e < ps.extent; ++e)
        for (std::size_t i = 0; i < ps.inner; ++i)
          out[(o * os.extent + offset + e) * os.inner + i] =
              x[(o * ps.extent + e) * ps.inner + i];
    offset += ps.extent;
  }
  NodeAttr attr;
  attr.axis = axis;
  return g.push(OpKind::kConcat, std::move(ids), std::move(out),
                std::move(attr));
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(a);
  const Shape& s = a.shape();
  require_axis(s, axis);
  RAF_REQUIRE(begin < end && end <= s[axis],
              "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                  ") out of range for axis extent " + std::to_string(s[axis]));
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const AxisSplit in = split_at(s, axis);
  const std::size_t len = end - begin;
  Tensor out(out_shape);
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < in.outer; ++o)
    for (std::size_t e = 0; e < len; ++e)
      for (std::size_t i = 0; i < in.inner; ++i)
        out[(o * len + e) * in.inner + i] =
            x[(o * in.extent + begin + e) * in.inner + i];
  NodeAttr attr;
  attr.axis = axis;
  attr.begin = begin;
  attr.end = end;
  return g.push(OpKind::kSlice, {a.id()}, std::move(out), std::move(attr));
}

Var pad(Var a, std::size_t axis, std::size_t begin, std::size_t total) {
  Graph& g = graph_of(a);
  const Shape& s = a.shape();
  require_axis(s, axis);
  RAF_REQUIRE(begin + s[axis] <= total, "pad target too small");
  Shape out_shape = s;
  out_shape[axis] = total;
  const AxisSplit in = split_at(s, axis);
  Tensor out(out_shape);
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < in.outer; ++o)
    for (std::size_t e = 0; e < in.extent; ++e)
      for (std::size_t i = 0; i < in.inner; ++i)
        out[(o * total + begin + e) * in.inner + i] =
            x[(o * in.extent + e) * in.inner + i];
  NodeAttr attr;
  attr.axis = axis;
  attr.begin = begin;
  attr.end = total;
  return g.push(OpKind::kPad, {a.id()}, std::move(out), std::move(attr));
}

Var l2_norm(Var a) {
  double ss = 0.0;
  for (double v : a.value().data()) ss += v * v;
  return graph_of(a).push(OpKind::kL2Norm, {a.id()},
                          Tensor::scalar(std::sqrt(ss)));
}

Var linear_map(std::shared_ptr<const LinearMap> map, Var a, bool adjoint) {
  Graph& g = graph_of(a);
  RAF_REQUIRE(map != nullptr, "null linear map");
  const Shape in_shape = adjoint ? map->output_shape() : map->input_shape();
  const Shape out_shape = adjoint ? map->input_shape() : map->output_shape();
  RAF_REQUIRE(a.shape() == in_shape, "linear map expects " +
                                         shape_str(in_shape) + ", got " +
                                         shape_str(a.shape()));
  Tensor out(out_shape);
  if (adjoint) {
    map->apply_adjoint(a.value().data(), out.data());
  } else {
    map->apply(a.value().data(), out.data());
  }
  NodeAttr attr;
  attr.map = std::move(map);
  attr.adjoint = adjoint;
  return g.push(OpKind::kLinearMap, {a.id()}, std::move(out), std::move(attr));
}

// ---------------------------------------------------------------------------
// Reverse pass

namespace {

Var reduce_like(Var grad_out, Shape shape) {
  return grad_out.shape() == shape ? grad_out : sum_to(grad_out, std::move(shape));
}

Var mask_constant(Graph& g, const Tensor& x, double (*f)(double)) {
  return g.constant(unary_map(x, f));
}

}  // namespace

std::vector<Var> grad(Var output, std::span<const Var> wrt) {
  Graph& g = graph_of(output);
  RAF_REQUIRE(output.value().size() == 1,
              "backward needs a scalar output, got shape " +
                  shape_str(output.shape()));
  const NodeId top = output.id();

  std::vector<char> reach(top + 1, 0);
  for (const Var& w : wrt) {
    RAF_REQUIRE(w.graph() == &g, "gradient target from another graph");
    if (w.id() <= top) reach[w.id()] = 1;
  }
  for (NodeId i = 0; i <= top; ++i) {
    if (reach[i]) continue;
    for (NodeId in : g.node(i).inputs) {
      if (reach[in]) {
        reach[i] = 1;
        break;
      }
    }
  }

  std::vector<Var> adj(top + 1);
  if (reach[top]) adj[top] = g.constant(Tensor(output.shape(), 1.0));

  auto accumulate = [&](NodeId id, Var contrib) {
    adj[id] = adj[id].valid() ? add(adj[id], contrib) : contrib;
  };

  for (NodeId i = top + 1; i-- > 0;) {
    if (!reach[i] || !adj[i].valid()) continue;
    const OpKind op = g.node(i).op;
    if (op == OpKind::kLeaf || op == OpKind::kConstant) continue;
    const std::vector<NodeId> inputs = g.node(i).inputs;
    const NodeAttr attr = g.node(i).attr;
    const Var gout = adj[i];
    const Var out(&g, i);
    auto in = [&](std::size_t k) { return Var(&g, inputs[k]); };
    auto wants = [&](std::size_t k) { return reach[inputs[k]] != 0; };

    switch (op) {
      case OpKind::kAdd:
        if (wants(0)) accumulate(inputs[0], reduce_like(gout, in(0).shape()));
        if (wants(1)) accumulate(inputs[1], reduce_like(gout, in(1).shape()));
        break;
      case OpKind::kSub:
        if (wants(0)) accumulate(inputs[0], reduce_like(gout, in(0).shape()));
        if (wants(1))
          accumulate(inputs[1], reduce_like(neg(gout), in(1).shape()));
        break;
      case OpKind::kMul:
        if (wants(0))
          accumulate(inputs[0], reduce_like(mul(gout, in(1)), in(0).shape()));
        if (wants(1))
          accumulate(inputs[1], reduce_like(mul(gout, in(0)), in(1).shape()));
        break;
      case OpKind::kDiv:
        if (wants(0))
          accumulate(inputs[0], reduce_like(div(gout, in(1)), in(0).shape()));
        if (wants(1))
          accumulate(inputs[1], reduce_like(neg(div(mul(gout, out), in(1))),
                                            in(1).shape()));
        break;
      case OpKind::kScale:
        accumulate(inputs[0], scale(gout, attr.scalar));
        break;
      case OpKind::kMatMul:
        if (wants(0)) accumulate(inputs[0], matmul(gout, transpose(in(1))));
        if (wants(1)) accumulate(inputs[1], matmul(transpose(in(0)), gout));
        break;
      case OpKind::kTranspose:
        accumulate(inputs[0], transpose(gout));
        break;
      case OpKind::kReshape:
        accumulate(inputs[0], reshape(gout, in(0).shape()));
        break;
      case OpKind::kSumTo:
        accumulate(inputs[0], expand(gout, in(0).shape()));
        break;
      case OpKind::kExpand:
        accumulate(inputs[0], sum_to(gout, in(0).shape()));
        break;
      case OpKind::kSquare:
        accumulate(inputs[0], mul(gout, scale(in(0), 2.0)));
        break;
      case OpKind::kAbs:
        accumulate(inputs[0],
                   mul(gout, mask_constant(g, in(0).value(), [](double x) {
                         return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                       })));
        break;
      case OpKind::kLog:
        accumulate(inputs[0], div(gout, in(0)));
        break;
      case OpKind::kExp:
        accumulate(inputs[0], mul(gout, out));
        break;
      case OpKind::kTanh:
        accumulate(inputs[0],
                   mul(gout, sub(g.scalar(1.0), square(out))));
        break;
      case OpKind::kLeakyRelu:
        accumulate(inputs[0],
                   mul(gout, mask_constant(g, in(0).value(), [](double x) {
                         return x > 0.0 ? 1.0 : kLeakySlope;
                       })));
        break;
      case OpKind::kSoftplus:
        accumulate(inputs[0], mul(gout, sigmoid(in(0))));
        break;
      case OpKind::kSigmoid:
        accumulate(inputs[0],
                   mul(gout, mul(out, sub(g.scalar(1.0), out))));
        break;
      case OpKind::kSqrt:
        accumulate(inputs[0], div(gout, scale(out, 2.0)));
        break;
      case OpKind::kClampMin: {
        const double floor = attr.scalar;
        Tensor m = in(0).value();
        for (double& v : m.data()) v = v > floor ? 1.0 : 0.0;
        accumulate(inputs[0], mul(gout, g.constant(std::move(m))));
        break;
      }
      case OpKind::kConcat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          const std::size_t ext = in(k).shape()[attr.axis];
          if (wants(k))
            accumulate(inputs[k], slice(gout, attr.axis, offset, offset + ext));
          offset += ext;
        }
        break;
      }
      case OpKind::kSlice:
        accumulate(inputs[0], pad(gout, attr.axis, attr.begin,
                                  in(0).shape()[attr.axis]));
        break;
      case OpKind::kPad: {
        const std::size_t ext = in(0).shape()[attr.axis];
        accumulate(inputs[0],
                   slice(gout, attr.axis, attr.begin, attr.begin + ext));
        break;
      }
      case OpKind::kL2Norm:
        if (out.item() == 0.0) {
          accumulate(inputs[0], g.constant(Tensor(in(0).shape())));
        } else {
          accumulate(inputs[0], mul(in(0), div(gout, out)));
        }
        break;
      case OpKind::kLinearMap:
        accumulate(inputs[0], linear_map(attr.map, gout, !attr.adjoint));
        break;
      case OpKind::kLeaf:
      case OpKind::kConstant:
        break;
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id() <= top && adj[w.id()].valid()) {
      result.push_back(adj[w.id()]);
    } else {
      result.push_back(g.constant(Tensor(w.shape())));
    }
  }
  return result;
}

std::vector<Tensor> backward(Var output, std::span<const Var> wrt) {
  Graph& g = graph_of(output);
  const std::size_t mark = g.size();
  std::vector<Tensor> out;
  try {
    const std::vector<Var> gs = grad(output, wrt);
    out.reserve(gs.size());
    for (const Var& v : gs) out.push_back(v.value());
  } catch (...) {
    g.truncate(mark);
    throw;
  }
  g.truncate(mark);
  return out;
}

Var input_grad_sq_norm(Var output, Var input) {
  Graph& g = graph_of(output, input);
  RAF_REQUIRE(g.node(input.id()).op == OpKind::kLeaf,
              "gradient-norm input must be a leaf");
  const Var wrt[] = {input};
  return sum(square(grad(output, wrt)[0]));
}

}  // namespace raf::ad
