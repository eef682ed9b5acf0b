#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "raf/errors.hpp"

namespace raf::dsp::detail {
namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW's planner is not thread-safe; execution with the new-array interface
// is, so plans are created under a lock and then shared.
const Plans& plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> spec(n / 2 + 1);
  const int len = static_cast<int>(n);
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(len, real.data(), spec.data(),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse =
      fftw_plan_dft_c2r_1d(len, spec.data(), real.data(),
                           FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  if (p.forward == nullptr || p.inverse == nullptr) {
    throw Error("FFTW could not plan a transform of size " + std::to_string(n));
  }
  return cache.emplace(n, p).first->second;
}

}  // namespace

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = in.size();
  RAF_REQUIRE(out.size() == n / 2 + 1, "rfft output size mismatch");
  const Plans& p = plans_for(n);
  // r2c does not modify its input; the cast only satisfies the C signature.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft_unnormalized(std::span<std::complex<double>> in,
                        std::span<double> out) {
  const std::size_t n = out.size();
  RAF_REQUIRE(in.size() == n / 2 + 1, "irfft input size mismatch");
  const Plans& p = plans_for(n);
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
}

}  // namespace raf::dsp::detail
