#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace raf::dsp::detail {

/// Real-to-half-complex forward DFT of length n (bins 0..n/2).
/// Thread-safe; plans are created once per size.
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

/// Inverse of rfft without the 1/n factor: out[t] = sum over the full
/// Hermitian spectrum implied by the n/2+1 input bins. `in` is consumed.
void irfft_unnormalized(std::span<std::complex<double>> in,
                        std::span<double> out);

}  // namespace raf::dsp::detail
