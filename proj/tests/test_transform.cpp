#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "oracle_helpers.hpp"
#include "volquote/transform.hpp"

using namespace volquote;
using Catch::Approx;

namespace {
const Market market = Market::make(testref::reference_params());
}

TEST_CASE("affine constants for the reference set", "[transform]") {
    const AffineConstants& k = market.k;
    CHECK(k.delta == Approx(5.032978).epsilon(1e-6));
    CHECK(k.b2 == Approx(6291.0).epsilon(1e-4));
    CHECK(k.b1 == Approx(-0.19871).epsilon(1e-3));
    const double beta2 = market.p.beta * market.p.beta;
    CHECK(k.b1 * k.b2 == Approx(-2.0 / beta2).epsilon(1e-10));
    CHECK(k.b1 + k.b2 == Approx(2.0 * market.tp.alpha_tilde / beta2).epsilon(1e-10));
    CHECK(k.b1 + k.b2 == Approx(6290.8).epsilon(1e-4));
}

TEST_CASE("root asymptotics for large beta", "[transform]") {
    const TildeParams tp{5.0, 0.001, 1.5e-4};
    const double beta = 1e4;
    const auto k = affine_constants(tp, beta);
    CHECK(k.delta == Approx(beta * std::numbers::sqrt2).epsilon(1e-6));
    CHECK(k.b2 == Approx(std::numbers::sqrt2 / beta).epsilon(1e-3));
    CHECK(k.b1 == Approx(-std::numbers::sqrt2 / beta).epsilon(1e-3));
}

TEST_CASE("exponent slope N", "[transform]") {
    const AffineConstants& k = market.k;

    SECTION("terminal value is -iu") {
        for (const double u : {0.0, 0.3, 17.3, 1000.0, 2.5e5}) {
            const auto n = coeff_N(u, 0.0, k);
            CHECK(std::abs(n - std::complex<double>(0.0, -u)) <= 1e-12 * std::max(1.0, u));
        }
    }

    SECTION("long-horizon limit at u = 0 is b1") {
        CHECK(coeff_N(0.0, 500.0, k).real() == Approx(k.b1).epsilon(1e-12));
        CHECK(coeff_N(0.0, 500.0, k).imag() == 0.0);
    }

    SECTION("u = 0 matches the classical bond exponent") {
        const auto ref = testref::reference_bond();
        for (const double tau : {0.1, 0.5, 1.0, 5.0, 20.0}) {
            const auto n = coeff_N(0.0, tau, k);
            CHECK(n.imag() == 0.0);
            CHECK(n.real() == Approx(-ref.B(tau)).epsilon(1e-12));
            CHECK(n.real() <= 0.0);
        }
    }
}

TEST_CASE("exponent amplitude M", "[transform]") {
    const AffineConstants& k = market.k;

    SECTION("vanishes at tau = 0") {
        for (const double u : {0.0, 1.0, 250.0, 1e5})
            CHECK(std::abs(coeff_M(u, 0.0, k)) < 1e-12);
    }

    SECTION("u = 0 matches the classical bond log-amplitude") {
        const auto ref = testref::reference_bond();
        for (const double tau : {0.1, 0.5, 1.0, 5.0}) {
            const auto m = coeff_M(0.0, tau, k);
            CHECK(m.imag() == 0.0);
            CHECK(m.real() == Approx(ref.log_A(tau)).epsilon(1e-10));
        }
    }

    SECTION("conjugate symmetry at u = 17.3") {
        const auto plus = coeff_M(17.3, 1.0, k);
        const auto minus = coeff_M(-17.3, 1.0, k);
        CHECK(std::abs(minus - std::conj(plus)) < 1e-13 * std::abs(plus));
    }
}

TEST_CASE("discounted transform", "[transform]") {
    const AffineConstants& k = market.k;

    SECTION("terminal condition over random points") {
        std::mt19937_64 eng(17);
        std::uniform_real_distribution<double> uu(-3e5, 3e5), ur(1e-5, 5e-2);
        for (int i = 0; i < 1000; ++i) {
            const double u = uu(eng);
            const double r = ur(eng);
            const auto p = psi(u, r, 0.0, k);
            const auto expected = std::exp(std::complex<double>(0.0, -u * r));
            CHECK(std::abs(p - expected) < 1e-12);
        }
    }

    SECTION("point value at tau = 0") {
        const auto p = psi(2.0, 0.001, 0.0, k);
        CHECK(p.real() == Approx(std::cos(0.002)).epsilon(1e-14));
        CHECK(p.imag() == Approx(-std::sin(0.002)).epsilon(1e-14));
    }

    SECTION("modulus is bounded by the bond value") {
        const double b = bond(0.001, 1.0, k);
        CHECK(b <= 1.0);
        for (const double u : {0.5, 10.0, 300.0, 5e4})
            CHECK(std::abs(psi(u, 0.001, 1.0, k)) <= b * (1.0 + 1e-13));
    }

    SECTION("bond decreases with maturity") {
        CHECK(bond(0.001, 0.0, k) == 1.0);
        CHECK(bond(0.001, 1.0, k) < bond(0.001, 0.5, k));
        double prev = 1.0;
        for (const double tau : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const double b = bond(0.001, tau, k);
            CHECK(b < prev);
            prev = b;
        }
    }

    SECTION("bond matches the closed form") {
        const auto ref = testref::reference_bond();
        for (const double tau : {0.1, 0.5, 1.0, 5.0})
            for (const double r : {1e-4, 1e-3, 1e-2})
                CHECK(bond(r, tau, k) == Approx(ref.price(tau, r)).epsilon(1e-10));
    }

    SECTION("conjugate symmetry") {
        std::mt19937_64 eng(23);
        std::uniform_real_distribution<double> uu(0.0, 2e5);
        for (int i = 0; i < 200; ++i) {
            const double u = uu(eng);
            const auto plus = psi(u, 0.001, 1.0, k);
            const auto minus = psi(-u, 0.001, 1.0, k);
            CHECK(std::abs(minus - std::conj(plus)) <= 1e-13 * std::abs(plus) + 1e-300);
        }
    }

    SECTION("degenerate level: unit bond") {
        const TildeParams tiny{5.0, 1e-12, 1.5e-4};
        const auto kk = affine_constants(tiny, 1e-5);
        CHECK(bond(1e-12, 1.0, kk) == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("algebraic tail decay", "[transform]") {
    // |Psi| ~ |u|^{-2 a_kappa / beta^2}; the exponent is 6.25 for the
    // reference set.
    const AffineConstants& k = market.k;
    const double u = 2e6;
    const double ratio = std::abs(psi(2.0 * u, 0.001, 1.0, k)) / std::abs(psi(u, 0.001, 1.0, k));
    const double measured_exponent = -std::log2(ratio);
    CHECK(measured_exponent == Approx(6.25).margin(0.3));
}

TEST_CASE("lattice evaluation tracks the phase continuously", "[transform]") {
    const AffineConstants& k = market.k;
    std::vector<std::complex<double>> psi_lat, psi_n_lat;
    const double du = 255.0;
    const std::size_t n_half = 2048;
    eval_transform_lattice(du, n_half, 0.001, 1.0, k, psi_lat, psi_n_lat);
    REQUIRE(psi_lat.size() == n_half + 1);
    for (std::size_t j = 0; j <= n_half; j += 97) {
        const double u = static_cast<double>(j) * du;
        const auto direct = eval_transform(u, 0.001, 1.0, k);
        CHECK(std::abs(psi_lat[j] - direct.psi) <= 1e-12 * std::abs(direct.psi) + 1e-300);
        CHECK(std::abs(psi_n_lat[j] - direct.psi * direct.n) <=
              1e-12 * std::abs(direct.psi * direct.n) + 1e-300);
    }
}

TEST_CASE("transform argument checks", "[transform]") {
    CHECK_THROWS_AS(coeff_N(1.0, -0.5, market.k), std::invalid_argument);
    CHECK_THROWS_AS(affine_constants(market.tp, 0.0), std::invalid_argument);
}
