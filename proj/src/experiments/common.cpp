#include "common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "raf/errors.hpp"
#include "raf/experiments.hpp"

namespace raf::experiments {

std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::kRaf: return "raf";
    case Objective::kMetricGanRafV1: return "metricgan_raf_v1";
    case Objective::kMetricGanRafV2: return "metricgan_raf_v2";
    case Objective::kLsgan: return "lsgan";
    case Objective::kHingeGan: return "hingegan";
    case Objective::kRpganGp: return "rpgan_gp";
  }
  return "unknown";
}

Objective parse_objective(std::string_view name) {
  for (Objective o : all_objectives())
    if (objective_name(o) == name) return o;
  throw ConfigError("unknown objective: " + std::string(name));
}

std::vector<Objective> all_objectives() {
  return {Objective::kRaf,     Objective::kMetricGanRafV1,
          Objective::kMetricGanRafV2, Objective::kLsgan,
          Objective::kHingeGan, Objective::kRpganGp};
}

namespace detail {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined key
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ULL + stream + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor mlp_eval(const models::Mlp& mlp, const Tensor& x) {
  ad::Graph g;
  const models::BoundMlp bound = models::bind(g, mlp);
  return models::mlp_forward(bound, g.constant(x)).out.value();
}

double median(std::vector<double> values) {
  RAF_REQUIRE(!values.empty(), "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  RAF_REQUIRE(a.size() == b.size() && a.size() >= 2,
              "pearson needs two equal-length series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  return pearson(ra, rb);
}

void set_learning_rate(models::OptimizerState& state, double lr) {
  state.config.lr = lr;
}

}  // namespace detail

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace raf::experiments
