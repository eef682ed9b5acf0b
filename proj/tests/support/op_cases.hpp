#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "gradcheck.hpp"
#include "raf/autodiff.hpp"
#include "raf/dsp.hpp"

namespace raf::testing {

using ad::Var;

/// One op under test: input shapes, the op, and the sampling range of its
/// inputs.
struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  std::function<Var(std::span<const Var>)> op;
  double lo = -1.0, hi = 1.0, gap = 0.0;
};

// Contract every output entry with fixed weights so each element's gradient
// is exercised, not only their sum.
inline Var contract(Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = y.graph()->constant(random_tensor(y.shape(), rng));
  return ad::sum(ad::mul(y, w));
}

inline std::vector<OpCase> op_cases() {
  auto stft = std::make_shared<raf::dsp::StftMap>(16, raf::dsp::StftConfig{8, 2});
  return {
      {"add", {{3, 2}, {3, 2}}, [](auto v) { return ad::add(v[0], v[1]); }},
      {"add_broadcast", {{3, 2}, {1, 2}}, [](auto v) { return ad::add(v[0], v[1]); }},
      {"sub", {{2, 3}, {2, 3}}, [](auto v) { return ad::sub(v[0], v[1]); }},
      {"mul", {{2, 3}, {2, 3}}, [](auto v) { return ad::mul(v[0], v[1]); }},
      {"mul_broadcast", {{2, 3}, {2, 1}}, [](auto v) { return ad::mul(v[0], v[1]); }},
      {"div", {{2, 3}, {2, 3}}, [](auto v) { return ad::div(v[0], v[1]); }, 0.5, 2.0},
      {"scale", {{4}}, [](auto v) { return ad::scale(v[0], -2.5); }},
      {"matmul", {{2, 3}, {3, 4}}, [](auto v) { return ad::matmul(v[0], v[1]); }},
      {"transpose", {{2, 3}}, [](auto v) { return ad::transpose(v[0]); }},
      {"reshape", {{2, 3}}, [](auto v) { return ad::reshape(v[0], Shape{3, 2}); }},
      {"sum_to", {{3, 4}}, [](auto v) { return ad::sum_to(v[0], Shape{1, 4}); }},
      {"expand", {{1, 3}}, [](auto v) { return ad::expand(v[0], Shape{2, 3}); }},
      {"sum", {{2, 2}}, [](auto v) { return ad::sum(v[0]); }},
      {"mean", {{3, 2}}, [](auto v) { return ad::mean(v[0]); }},
      {"sum_axis", {{3, 2}}, [](auto v) { return ad::sum_axis(v[0], 0); }},
      {"mean_axis", {{3, 2}}, [](auto v) { return ad::mean_axis(v[0], 1); }},
      {"square", {{5}}, [](auto v) { return ad::square(v[0]); }},
      {"abs", {{5}}, [](auto v) { return ad::abs(v[0]); }, -1.0, 1.0, 0.05},
      {"log", {{5}}, [](auto v) { return ad::log(v[0]); }, 0.2, 3.0},
      {"exp", {{5}}, [](auto v) { return ad::exp(v[0]); }},
      {"tanh", {{5}}, [](auto v) { return ad::tanh(v[0]); }, -2.0, 2.0},
      {"leaky_relu", {{6}}, [](auto v) { return ad::leaky_relu(v[0]); }, -1.0, 1.0, 0.05},
      {"softplus", {{5}}, [](auto v) { return ad::softplus(v[0]); }, -3.0, 3.0},
      {"sigmoid", {{5}}, [](auto v) { return ad::sigmoid(v[0]); }, -3.0, 3.0},
      {"sqrt", {{5}}, [](auto v) { return ad::sqrt(v[0]); }, 0.2, 3.0},
      {"clamp_min", {{6}}, [](auto v) { return ad::clamp_min(v[0], 0.0); }, -1.0, 1.0, 0.05},
      {"relu", {{6}}, [](auto v) { return ad::relu(v[0]); }, -1.0, 1.0, 0.05},
      {"concat", {{2, 2}, {2, 3}},
       [](auto v) { return ad::concat(std::vector<Var>{v[0], v[1]}, 1); }},
      {"slice", {{4, 3}}, [](auto v) { return ad::slice(v[0], 0, 1, 3); }},
      {"pad", {{2, 3}}, [](auto v) { return ad::pad(v[0], 1, 2, 6); }},
      {"l2_norm", {{6}}, [](auto v) { return ad::l2_norm(v[0]); }},
      {"linear_map", {{16}}, [stft](auto v) { return ad::linear_map(stft, v[0]); }},
      {"linear_map_adjoint", {{2, 9, 5}},
       [stft](auto v) { return ad::linear_map(stft, v[0], true); }},
  };
}

}  // namespace raf::testing
