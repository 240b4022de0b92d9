#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace volquote {

// Market and volatility parameters under the economic measure P.
// All rates and times are annualized; there are no day-count conventions.
struct ModelParams {
    double mu;     // drift of the risky asset
    double r;      // riskless rate
    double rho;    // correlation between the stock and volatility drivers
    double alpha;  // mean-reversion speed of the shadow rate under P
    double kappa;  // long-run level of the shadow rate under P
    double beta;   // volatility coefficient of the shadow rate

    void validate() const {
        auto bad = [](double v) { return !std::isfinite(v); };
        if (bad(mu) || bad(r) || bad(rho) || bad(alpha) || bad(kappa) || bad(beta))
            throw std::invalid_argument("model parameters must be finite");
        if (std::abs(rho) >= 1.0)
            throw std::invalid_argument("requires |rho| < 1: every pricing formula divides by (1 - rho^2)");
        if (mu == r)
            throw std::invalid_argument(
                "mu == r is rejected: the shadow rate vanishes identically and the "
                "squared-volatility <-> rate map is undefined");
        if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
        if (kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
        if (beta <= 0.0) throw std::invalid_argument("beta must be positive");
    }
};

// Pricing-measure CIR parameters together with the conversion constant c
// of the map R = c / Y between squared volatility and the shadow rate.
struct TildeParams {
    double alpha_tilde;  // mean-reversion speed under the pricing measure
    double kappa_tilde;  // long-run level under the pricing measure
    double c;            // c = (1 - rho^2)(mu - r)^2 / 2

    // The product alpha*kappa is measure invariant.
    double a_kappa() const { return alpha_tilde * kappa_tilde; }
};

/**
 * Converts economic-measure inputs to pricing-measure CIR parameters.
 *
 * Inverts alpha = alpha_tilde - beta*rho*sqrt(2/(1-rho^2)) and uses the
 * invariance of the product alpha*kappa. Enforces the strict Feller
 * condition 4*alpha_tilde*kappa_tilde > beta^2 so the shadow rate stays
 * strictly positive under the pricing measure.
 */
inline TildeParams derive_tilde_params(const ModelParams& p) {
    p.validate();
    const double corr_shift = p.beta * p.rho * std::sqrt(2.0 / (1.0 - p.rho * p.rho));
    const double alpha_tilde = p.alpha + corr_shift;
    if (alpha_tilde <= 0.0)
        throw std::invalid_argument(
            "measure change inverts mean reversion: alpha + beta*rho*sqrt(2/(1-rho^2)) <= 0");
    const double kappa_tilde = p.alpha * p.kappa / alpha_tilde;
    if (4.0 * alpha_tilde * kappa_tilde <= p.beta * p.beta)
        throw std::invalid_argument(
            "Feller condition violated: requires 4*alpha_tilde*kappa_tilde > beta^2");
    const double c = (1.0 - p.rho * p.rho) * (p.mu - p.r) * (p.mu - p.r) / 2.0;
    return TildeParams{alpha_tilde, kappa_tilde, c};
}

// R = c / Y. The map is its own inverse up to the constant c.
inline double vol_to_rate(double y, const TildeParams& tp) {
    if (!(y > 0.0)) throw std::invalid_argument("squared volatility must be positive");
    return tp.c / y;
}

inline double rate_to_vol(double r_shadow, const TildeParams& tp) {
    if (!(r_shadow > 0.0)) throw std::invalid_argument("shadow rate must be positive");
    return tp.c / r_shadow;
}

// Evaluation point for prices and hedges. Immutable after construction.
struct VolState {
    double t;         // current time (years)
    double T;         // maturity (years)
    double y;         // current squared volatility
    double r_shadow;  // c / y
    double s;         // discounted stock price

    double tau() const { return T - t; }
};

inline VolState make_state(double t, double T, double y, double s, const TildeParams& tp) {
    if (!(y > 0.0)) throw std::invalid_argument("squared volatility must be positive");
    if (!(s > 0.0)) throw std::invalid_argument("stock price must be positive");
    if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("requires 0 <= t <= T");
    return VolState{t, T, y, vol_to_rate(y, tp), s};
}

// Drift and diffusion of the squared-volatility process under P, obtained
// by mapping the CIR coefficients through Y = c / R. Used by consistency
// tests and reports, not by the pricer.
struct YCoeffs {
    double drift;      // alpha*Y + (beta^2 - alpha*kappa) * Y^2 / c
    double diffusion;  // -sqrt(2/(1-rho^2)) * beta * Y^(3/2) / (mu - r)
};

inline YCoeffs y_drift_diffusion(double y, const ModelParams& p, const TildeParams& tp) {
    if (!(y > 0.0)) throw std::invalid_argument("squared volatility must be positive");
    const double drift = p.alpha * y + (p.beta * p.beta - p.alpha * p.kappa) * y * y / tp.c;
    const double diffusion =
        -std::sqrt(2.0 / (1.0 - p.rho * p.rho)) * p.beta * std::pow(y, 1.5) / (p.mu - p.r);
    return YCoeffs{drift, diffusion};
}

}  // namespace volquote
