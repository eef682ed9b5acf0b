#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "raf/autodiff.hpp"
#include "raf/models.hpp"

namespace raf::experiments::detail {

/// Independent, reproducible seed for a named sub-stream of a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Evaluates an MLP on a batch without keeping the graph.
Tensor mlp_eval(const models::Mlp& mlp, const Tensor& x);

double median(std::vector<double> values);
double pearson(std::span<const double> a, std::span<const double> b);
/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

void set_learning_rate(models::OptimizerState& state, double lr);

}  // namespace raf::experiments::detail
