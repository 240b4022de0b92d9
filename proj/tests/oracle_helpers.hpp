// Test-only reference implementations, independent of the library code
// they are used to check.
#pragma once

#include <cmath>
#include <random>

#include "volquote/model.hpp"

namespace testref {

// Reference parameter set used throughout the suites.
inline volquote::ModelParams reference_params() {
    return volquote::ModelParams{0.04, 0.02, 0.5, 5.0, 0.001, 0.04};
}

// Classical zero-coupon bond closed form for dR = a(b - R)dt + sig sqrt(R) dW:
// P(tau, R) = A(tau) e^{-B(tau) R}.
struct CirBond {
    double a, b, sig;

    double gamma_rate() const { return std::sqrt(a * a + 2.0 * sig * sig); }

    double B(double tau) const {
        const double g = gamma_rate();
        const double e = std::exp(g * tau) - 1.0;
        return 2.0 * e / ((g + a) * e + 2.0 * g);
    }

    double log_A(double tau) const {
        const double g = gamma_rate();
        const double e = std::exp(g * tau) - 1.0;
        const double inner = 2.0 * g * std::exp((a + g) * tau / 2.0) / ((g + a) * e + 2.0 * g);
        return (2.0 * a * b / (sig * sig)) * std::log(inner);
    }

    double price(double tau, double r0) const { return std::exp(log_A(tau) - B(tau) * r0); }
};

inline CirBond reference_bond() {
    const auto tp = volquote::derive_tilde_params(reference_params());
    return CirBond{tp.alpha_tilde, tp.kappa_tilde, reference_params().beta};
}

// Chain-rule route to the squared-volatility coefficients: map the CIR
// drift/diffusion through phi(R) = c/R with numerical derivatives.
struct ChainRuleCoeffs {
    double drift;
    double diffusion;
};

inline ChainRuleCoeffs chain_rule_y_coeffs(double y, const volquote::ModelParams& p,
                                           const volquote::TildeParams& tp) {
    const double r = tp.c / y;
    const double h = r * 1e-5;
    auto phi = [&](double x) { return tp.c / x; };
    const double d1 = (phi(r + h) - phi(r - h)) / (2.0 * h);
    const double d2 = (phi(r + h) - 2.0 * phi(r) + phi(r - h)) / (h * h);
    const double cir_drift = p.alpha * (p.kappa - r);
    const double cir_var = p.beta * p.beta * r;
    return ChainRuleCoeffs{d1 * cir_drift + 0.5 * d2 * cir_var, d1 * p.beta * std::sqrt(r)};
}

// Random generator for valid parameter sets and states, used by the
// property suites. Draws are rejected until the model validates.
struct RandomMarketDraw {
    volquote::ModelParams params;
    double y0;
    double T;
    double s0;
};

inline RandomMarketDraw draw_market(std::mt19937_64& eng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (;;) {
        volquote::ModelParams p{};
        p.r = 0.01 + 0.04 * u01(eng);
        const double excess = (0.005 + 0.075 * u01(eng)) * (u01(eng) < 0.3 ? -1.0 : 1.0);
        p.mu = p.r + excess;
        p.rho = -0.8 + 1.6 * u01(eng);
        p.alpha = 0.5 + 7.5 * u01(eng);
        p.kappa = 2e-4 + 4.8e-3 * u01(eng);
        // keep the Feller ratio away from the boundary
        p.beta = std::sqrt(4.0 * p.alpha * p.kappa) * (0.1 + 0.7 * u01(eng));
        try {
            volquote::derive_tilde_params(p);
        } catch (const std::invalid_argument&) {
            continue;
        }
        RandomMarketDraw d;
        d.params = p;
        d.y0 = 0.03 + 0.5 * u01(eng);
        d.T = 0.1 + 1.4 * u01(eng);
        d.s0 = 0.5 + 1.5 * u01(eng);
        return d;
    }
}

}  // namespace testref
