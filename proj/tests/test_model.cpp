#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracle_helpers.hpp"
#include "volquote/model.hpp"

using namespace volquote;
using Catch::Approx;

TEST_CASE("tilde parameters for the reference set", "[model]") {
    const auto tp = derive_tilde_params(testref::reference_params());
    CHECK(tp.alpha_tilde == Approx(5.0326599).epsilon(1e-7));
    CHECK(tp.kappa_tilde == Approx(9.9351e-4).epsilon(1e-4));
    CHECK(tp.c == Approx(1.5e-4).epsilon(1e-12));
    // Feller margin: 4 * alpha_tilde * kappa_tilde = 0.02 > beta^2 = 0.0016
    CHECK(4.0 * tp.a_kappa() == Approx(0.02).epsilon(1e-12));
}

TEST_CASE("zero correlation leaves the measure unchanged", "[model]") {
    ModelParams p = testref::reference_params();
    p.rho = 0.0;
    const auto tp = derive_tilde_params(p);
    CHECK(tp.alpha_tilde == p.alpha);
    CHECK(tp.kappa_tilde == Approx(p.kappa).epsilon(1e-14));
}

TEST_CASE("parameter validation", "[model]") {
    auto valid = testref::reference_params();
    CHECK_NOTHROW(derive_tilde_params(valid));

    auto p = valid;
    p.rho = 1.0;
    CHECK_THROWS_WITH(derive_tilde_params(p), Catch::Matchers::ContainsSubstring("|rho| < 1"));
    p = valid;
    p.rho = -1.2;
    CHECK_THROWS_AS(derive_tilde_params(p), std::invalid_argument);
    p = valid;
    p.mu = p.r;
    CHECK_THROWS_WITH(derive_tilde_params(p), Catch::Matchers::ContainsSubstring("mu == r"));
    p = valid;
    p.alpha = 0.0;
    CHECK_THROWS_AS(derive_tilde_params(p), std::invalid_argument);
    p = valid;
    p.kappa = -0.001;
    CHECK_THROWS_AS(derive_tilde_params(p), std::invalid_argument);
    p = valid;
    p.beta = 0.0;
    CHECK_THROWS_AS(derive_tilde_params(p), std::invalid_argument);

    // strongly negative correlation with a large beta flips the sign of the
    // pricing-measure reversion speed
    p = valid;
    p.alpha = 1.0;
    p.rho = -0.9;
    p.beta = 0.4;
    p.kappa = 0.05;
    CHECK_THROWS_WITH(derive_tilde_params(p),
                      Catch::Matchers::ContainsSubstring("mean reversion"));

    // Feller violation
    p = valid;
    p.kappa = 1e-5;
    CHECK_THROWS_WITH(derive_tilde_params(p), Catch::Matchers::ContainsSubstring("Feller"));
}

TEST_CASE("volatility to rate map", "[model]") {
    const auto tp = derive_tilde_params(testref::reference_params());
    CHECK(vol_to_rate(0.15, tp) == Approx(1.0e-3).epsilon(1e-14));
    CHECK(vol_to_rate(tp.c, tp) == Approx(1.0).epsilon(1e-14));
    CHECK(rate_to_vol(0.001, tp) == Approx(0.15).epsilon(1e-14));
    CHECK_THROWS_AS(vol_to_rate(0.0, tp), std::invalid_argument);
    CHECK_THROWS_AS(vol_to_rate(-0.1, tp), std::invalid_argument);

    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> uy(1e-4, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double y = uy(eng);
        CHECK(rate_to_vol(vol_to_rate(y, tp), tp) == Approx(y).epsilon(1e-12));
    }
}

TEST_CASE("measure conversion round trip and product identity", "[model]") {
    std::mt19937_64 eng(11);
    for (int i = 0; i < 200; ++i) {
        const auto d = testref::draw_market(eng);
        const auto tp = derive_tilde_params(d.params);
        CHECK(tp.a_kappa() == Approx(d.params.alpha * d.params.kappa).epsilon(1e-12));
        const double corr = d.params.beta * d.params.rho *
                            std::sqrt(2.0 / (1.0 - d.params.rho * d.params.rho));
        CHECK(tp.alpha_tilde - corr == Approx(d.params.alpha).epsilon(1e-12));
    }
}

TEST_CASE("state construction", "[model]") {
    const auto tp = derive_tilde_params(testref::reference_params());
    const auto st = make_state(0.25, 1.0, 0.15, 2.0, tp);
    CHECK(st.tau() == Approx(0.75));
    CHECK(st.r_shadow * st.y == Approx(tp.c).epsilon(1e-15));
    CHECK_THROWS_AS(make_state(1.5, 1.0, 0.15, 1.0, tp), std::invalid_argument);
    CHECK_THROWS_AS(make_state(0.0, 1.0, -0.15, 1.0, tp), std::invalid_argument);
    CHECK_THROWS_AS(make_state(0.0, 1.0, 0.15, 0.0, tp), std::invalid_argument);
}

TEST_CASE("squared-volatility coefficients", "[model]") {
    const auto p = testref::reference_params();
    const auto tp = derive_tilde_params(p);

    SECTION("vanish at the origin") {
        const auto c = y_drift_diffusion(1e-12, p, tp);
        CHECK(std::abs(c.drift) < 1e-11);
        CHECK(std::abs(c.diffusion) < 1e-11);
    }

    SECTION("quadratic drift term drops out when beta^2 = alpha*kappa") {
        ModelParams q = p;
        q.kappa = q.beta * q.beta / q.alpha;  // 0.00032
        const auto tq = derive_tilde_params(q);
        const auto c = y_drift_diffusion(0.15, q, tq);
        CHECK(c.drift == Approx(q.alpha * 0.15).epsilon(1e-14));
    }

    SECTION("reference point pinned by the chain-rule oracle") {
        const auto c = y_drift_diffusion(0.15, p, tp);
        const auto ref = testref::chain_rule_y_coeffs(0.15, p, tp);
        CHECK(c.drift == Approx(ref.drift).epsilon(1e-6));
        CHECK(c.diffusion == Approx(ref.diffusion).epsilon(1e-6));
        CHECK(c.drift == Approx(0.24).epsilon(1e-12));
        CHECK(c.diffusion == Approx(-0.18973665961010275).epsilon(1e-12));
    }

    SECTION("correlation sign does not enter the squared diffusion") {
        ModelParams q = p;
        q.rho = -p.rho;
        const auto tq = derive_tilde_params(q);
        const auto a = y_drift_diffusion(0.2, p, tp);
        const auto b = y_drift_diffusion(0.2, q, tq);
        CHECK(a.diffusion * a.diffusion == Approx(b.diffusion * b.diffusion).epsilon(1e-13));
    }
}
