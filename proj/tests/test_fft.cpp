#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "volquote/fft.hpp"

using namespace volquote;

namespace {

std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x,
                                            int sign) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(j * k) /
                               static_cast<double>(n);
            acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("fft matches the naive transform", "[fft]") {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> normal;
    std::vector<std::complex<double>> x(64);
    for (auto& v : x) v = {normal(eng), normal(eng)};

    auto fwd = x;
    fft_forward(fwd);
    const auto ref = naive_dft(x, -1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fwd[i] - ref[i]) < 1e-11);

    auto inv = x;
    fft_inverse(inv);
    const auto ref_inv = naive_dft(x, +1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(inv[i] - ref_inv[i]) < 1e-11);
}

TEST_CASE("inverse of forward recovers the input times n", "[fft]") {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> normal;
    std::vector<std::complex<double>> x(256);
    for (auto& v : x) v = {normal(eng), normal(eng)};
    auto y = x;
    fft_forward(y);
    fft_inverse(y);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(y[i] / 256.0 - x[i]) < 1e-12);
}

TEST_CASE("fft rejects non power-of-two sizes", "[fft]") {
    std::vector<std::complex<double>> x(12);
    CHECK_THROWS_AS(fft_forward(x), std::invalid_argument);
    std::vector<std::complex<double>> empty;
    CHECK_THROWS_AS(fft_forward(empty), std::invalid_argument);
}
