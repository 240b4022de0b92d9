#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace volquote {

namespace detail {

// In-place radix-2 Cooley-Tukey transform, x_k <- sum_j x_j e^{sign*2*pi*i*jk/n}.
// No normalization. Lattice sizes here are small (2^12 by default) so a
// dedicated FFT dependency is not warranted.
inline void fft_radix2(std::vector<std::complex<double>>& x, int sign) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> even = x[i + j];
                const std::complex<double> odd = w * x[i + j + len / 2];
                x[i + j] = even + odd;
                x[i + j + len / 2] = even - odd;
                w *= wlen;
            }
        }
    }
}

}  // namespace detail

inline void fft_forward(std::vector<std::complex<double>>& x) { detail::fft_radix2(x, -1); }

// Unnormalized inverse: divide by n to invert fft_forward.
inline void fft_inverse(std::vector<std::complex<double>>& x) { detail::fft_radix2(x, +1); }

}  // namespace volquote
