#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "volquote/claims.hpp"
#include "volquote/fft.hpp"
#include "volquote/model.hpp"
#include "volquote/transform.hpp"

namespace volquote {

// Requested lattice shape. n_points may be grown automatically (doubling,
// up to max_points) when the tail-decay and mass-coverage requirements
// cannot both be met at the requested size.
struct GridSpec {
    std::size_t n_points = std::size_t{1} << 12;
    double tail_tol = 1e-13;  // |Psi| at the half-lattice edge
    bool auto_grow = true;
    std::size_t max_points = std::size_t{1} << 18;
};

// Realized Fourier lattice. du * dr = 2*pi / n_points; frequencies live on
// [-u_half, u_half] and rates on [0, r_max).
struct FourierGrid {
    std::size_t n_points;
    double du;
    double dr;

    double u_half() const { return 0.5 * static_cast<double>(n_points) * du; }
    double r_max() const { return static_cast<double>(n_points) * dr; }
};

/**
 * Discounted terminal density q0 and its N-weighted companion q1 on the
 * rate lattice, inverted from Psi and Psi*N.
 *
 * q0 integrates to the bond value and q1 to N(0) times the bond. g and B
 * are integrated against these lattices by trapezoid; inverting the
 * transform itself (rather than transforming the payoff) sidesteps
 * payoffs whose Fourier transform only exists distributionally.
 */
struct DensityPair {
    FourierGrid grid;
    std::vector<double> r;   // r[j] = j * dr
    std::vector<double> q0;  // clipped non-negative
    std::vector<double> q1;  // signed
    double tau = 0.0;
    double r0 = 0.0;
    double bond = 0.0;       // analytic Psi(0)
    double n0 = 0.0;         // N(0, tau)
    double mass = 0.0;       // trapezoid integral of q0
    double mass1 = 0.0;      // trapezoid integral of q1
    double tail_psi = 0.0;   // |Psi(u_half)|
    std::size_t clipped = 0; // nodes below the negativity tolerance

    double residual_mass() const { return std::abs(mass - bond) / bond; }
};

namespace detail {

inline double trapezoid(std::span<const double> f, double dx) {
    if (f.size() < 2) return 0.0;
    double acc = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
    return acc * dx;
}

// Smallest frequency with |Psi| below tol, found by doubling then bisection.
inline double tail_frequency(const AffineConstants& k, double r0, double tau, double tol) {
    double hi = 64.0;
    double lo = 0.0;
    while (std::abs(psi(hi, r0, tau, k)) > tol) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e16)
            throw std::runtime_error(
                "transform tail does not decay below tolerance; increase u_max "
                "or loosen tail_tol");
    }
    for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(psi(mid, r0, tau, k)) > tol) lo = mid;
        else hi = mid;
    }
    return hi;
}

// Conditional mean and variance of the pricing-measure CIR rate at horizon
// tau, used to size the rate lattice before inversion.
inline std::pair<double, double> cir_moments(const TildeParams& tp, double beta, double r0,
                                             double tau) {
    const double e = std::exp(-tp.alpha_tilde * tau);
    const double mean = tp.kappa_tilde + (r0 - tp.kappa_tilde) * e;
    const double var = r0 * (beta * beta / tp.alpha_tilde) * (e - e * e) +
                       tp.kappa_tilde * beta * beta / (2.0 * tp.alpha_tilde) * (1.0 - e) * (1.0 - e);
    return {mean, var};
}

inline double coverage_requirement(const Market& m, double r0, double tau) {
    const auto [mean, var] = cir_moments(m.tp, m.p.beta, r0, tau);
    return 1.25 * (std::max(mean, r0) + 30.0 * std::sqrt(std::max(var, 0.0)));
}

}  // namespace detail

/**
 * Chooses the lattice for one (r0, tau) point: the frequency spacing comes
 * from the measured tail of Psi, and n_points doubles until the rate side
 * covers the terminal distribution.
 */
inline FourierGrid plan_grid(const Market& m, double r0, double tau, const GridSpec& spec) {
    if (!(tau > 0.0)) throw std::invalid_argument("requires tau > 0 to build densities");
    if ((spec.n_points & (spec.n_points - 1)) != 0 || spec.n_points < 16)
        throw std::invalid_argument("n_points must be a power of two >= 16");
    const double u_half = detail::tail_frequency(m.k, r0, tau, spec.tail_tol);
    const double r_need = detail::coverage_requirement(m, r0, tau);
    std::size_t n = spec.n_points;
    // dr = pi / u_half independently of n; doubling n doubles coverage.
    const double dr = std::numbers::pi / u_half;
    while (static_cast<double>(n) * dr < r_need) {
        if (!spec.auto_grow || n * 2 > spec.max_points)
            throw std::runtime_error(
                "rate lattice cannot cover the terminal distribution; increase "
                "n_points (R_max too small)");
        n *= 2;
    }
    const double du = 2.0 * u_half / static_cast<double>(n);
    return FourierGrid{n, du, 2.0 * std::numbers::pi / (static_cast<double>(n) * du)};
}

/**
 * Inverts Psi and Psi*N on a fixed lattice.
 *
 * The half-lattice is mirrored by conjugate symmetry, the u = 0 node takes
 * trapezoid half-weight in the folded sum (full weight once in the
 * wrap-around form used here), and the Nyquist node is real-projected.
 * Fails loudly if the decay, coverage or mass invariants are violated.
 */
inline DensityPair build_densities_on(const Market& m, const FourierGrid& grid,
                                      double r0, double tau) {
    const std::size_t n = grid.n_points;
    const std::size_t n_half = n / 2;

    std::vector<std::complex<double>> psi_lat, psi_n_lat;
    eval_transform_lattice(grid.du, n_half, r0, tau, m.k, psi_lat, psi_n_lat);

    DensityPair dp;
    dp.grid = grid;
    dp.tau = tau;
    dp.r0 = r0;
    dp.bond = psi_lat[0].real();
    if (std::abs(psi_lat[0].imag()) >= 1e-14)
        throw std::runtime_error("Psi(0) acquired an imaginary part; transform corrupted");
    dp.n0 = coeff_N(0.0, tau, m.k).real();
    dp.tail_psi = std::abs(psi_lat[n_half]);
    if (dp.tail_psi >= 1e-10)
        throw std::runtime_error(
            "tail decay violated: |Psi(u_max/2)| >= 1e-10; increase u_max");

    std::vector<std::complex<double>> a0(n), a1(n);
    for (std::size_t j = 0; j <= n_half; ++j) {
        a0[j] = psi_lat[j];
        a1[j] = psi_n_lat[j];
    }
    a0[n_half] = psi_lat[n_half].real();
    a1[n_half] = psi_n_lat[n_half].real();
    for (std::size_t j = 1; j < n_half; ++j) {
        a0[n - j] = std::conj(a0[j]);
        a1[n - j] = std::conj(a1[j]);
    }
    fft_inverse(a0);
    fft_inverse(a1);

    const double scale = grid.du / (2.0 * std::numbers::pi);
    dp.r.resize(n);
    dp.q0.resize(n);
    dp.q1.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        dp.r[j] = static_cast<double>(j) * grid.dr;
        dp.q0[j] = a0[j].real() * scale;
        dp.q1[j] = a1[j].real() * scale;
    }

    double peak = 0.0;
    for (const double v : dp.q0) peak = std::max(peak, v);
    const double clip_tol = 1e-8 * std::max(peak, 1.0);
    for (double& v : dp.q0) {
        if (v < 0.0) {
            if (v < -clip_tol) ++dp.clipped;
            v = 0.0;
        }
    }
    if (dp.clipped > n / 100)
        throw std::runtime_error("density inversion produced large negative lobes; grid corrupted");

    dp.mass = detail::trapezoid(dp.q0, grid.dr);
    dp.mass1 = detail::trapezoid(dp.q1, grid.dr);
    if (dp.residual_mass() > 1e-6)
        throw std::runtime_error(
            "density mass deviates from the bond value; increase R_max (coverage) "
            "or the lattice size");
    const double target1 = dp.n0 * dp.bond;
    if (std::abs(dp.mass1 - target1) > 1e-5 * std::abs(target1) + 1e-12)
        throw std::runtime_error("q1 moment check failed; grid corrupted");

    // Mass aliased onto the top of the rate lattice would silently distort
    // prices; the trapezoid mass check alone cannot see wrap-around.
    double edge = 0.0;
    const std::size_t edge_n = std::max<std::size_t>(n / 64, 2);
    for (std::size_t j = n - edge_n; j < n; ++j) edge += dp.q0[j];
    if (edge * grid.dr > 1e-7 * dp.mass)
        throw std::runtime_error("terminal distribution touches the lattice edge; increase R_max");

    return dp;
}

inline DensityPair build_densities(const Market& m, const VolState& state,
                                   const GridSpec& spec = {}) {
    GridSpec s = spec;
    for (;;) {
        const FourierGrid grid = plan_grid(m, state.r_shadow, state.tau(), s);
        try {
            return build_densities_on(m, grid, state.r_shadow, state.tau());
        } catch (const std::runtime_error&) {
            if (!s.auto_grow || grid.n_points * 2 > s.max_points) throw;
            s.n_points = grid.n_points * 2;
        }
    }
}

namespace detail {

// Payoff and tilted integrand sampled on the rate lattice. r = 0 holds the
// y -> infinity limit.
inline void sample_claim(const VolClaim& claim, double gamma_eff, const TildeParams& tp,
                         std::span<const double> r, std::vector<double>& payoff_out,
                         std::vector<double>& g_out) {
    payoff_out.resize(r.size());
    g_out.resize(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double y =
            r[j] > 0.0 ? tp.c / r[j] : std::numeric_limits<double>::infinity();
        payoff_out[j] = claim.payoff(y);
        g_out[j] = std::exp(gamma_eff * payoff_out[j]);
    }
}

inline std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

}  // namespace detail

/**
 * Indifference price pi = log(I / bond) / gamma_eff with
 * I = int q0(R) g(R) dR.
 *
 * The denominator uses the lattice mass of q0 rather than the analytic
 * bond so that cash invariance, the zero-claim price and the payoff
 * bounds hold exactly on the lattice; the two agree to the mass
 * tolerance.
 */
inline double price_indifference(const VolClaim& claim, const RiskAversion& ra,
                                 const Market& m, const DensityPair& dp) {
    std::vector<double> payoff, g;
    detail::sample_claim(claim, ra.gamma_eff, m.tp, dp.r, payoff, g);
    const double integral = detail::trapezoid(detail::multiply(dp.q0, g), dp.grid.dr);
    if (!(integral > 0.0))
        throw std::runtime_error("tilted integral non-positive; lattice corrupted");
    return std::log(integral / dp.mass) / ra.gamma_eff;
}

// Zero-aversion limit: the discounted expectation of B normalized by the
// bond.
inline double price_davis(const VolClaim& claim, const Market& m, const DensityPair& dp) {
    std::vector<double> payoff(dp.r.size());
    for (std::size_t j = 0; j < dp.r.size(); ++j) {
        const double y =
            dp.r[j] > 0.0 ? m.tp.c / dp.r[j] : std::numeric_limits<double>::infinity();
        payoff[j] = claim.payoff(y);
    }
    return detail::trapezoid(detail::multiply(dp.q0, payoff), dp.grid.dr) / dp.mass;
}

namespace detail {

// Weighted slope d/dR log I shared by the hedge and the volatility risk
// premium: int q1 g / int q0 g.
inline double log_slope(const VolClaim& claim, const RiskAversion& ra, const Market& m,
                        const DensityPair& dp) {
    std::vector<double> payoff, g;
    sample_claim(claim, ra.gamma_eff, m.tp, dp.r, payoff, g);
    const double denom = trapezoid(multiply(dp.q0, g), dp.grid.dr);
    if (!(denom > 0.0))
        throw std::runtime_error("tilted integral non-positive; lattice corrupted");
    return trapezoid(multiply(dp.q1, g), dp.grid.dr) / denom;
}

inline double hedge_from_slope(double slope, const RiskAversion& ra, const Market& m,
                               const VolState& st) {
    const double bracket =
        m.p.beta * m.p.rho / std::sqrt(2.0 * (1.0 - m.p.rho * m.p.rho)) * slope + 1.0;
    return (m.p.mu - m.p.r) / (ra.gamma * st.s * st.y) * bracket;
}

}  // namespace detail

// Optimal stock holding (share count) when hedging the claim.
inline double hedge_shares(const VolClaim& claim, const RiskAversion& ra, const Market& m,
                           const VolState& st, const DensityPair& dp) {
    return detail::hedge_from_slope(detail::log_slope(claim, ra, m, dp), ra, m, st);
}

// Merton holding (no claim). N(0, tau) plays the role of the weighted
// slope; no quadrature is involved.
inline double merton_shares(const RiskAversion& ra, const Market& m, const VolState& st) {
    const double n0 = coeff_N(0.0, st.tau(), m.k).real();
    return detail::hedge_from_slope(n0, ra, m, st);
}

struct RiskPrices {
    double lambda1;  // Sharpe ratio (mu - r)/sqrt(y); claim independent
    double lambda2;  // utility-induced volatility risk premium
};

// Closed-form lambda2 for the zero claim. Exact only in the beta -> 0
// limit where delta -> alpha_tilde; kept as a diagnostic next to the
// general formula.
inline double lambda2_closed_form(const Market& m, const VolState& st) {
    const double decay = std::exp(-m.k.delta * st.tau());
    return m.p.beta / (m.k.delta * std::numbers::sqrt2) * (1.0 - decay) * (m.p.mu - m.p.r) /
           std::sqrt(st.y);
}

/**
 * Market price of risk (lambda1, lambda2). With a claim, lambda2 follows
 * from the chain rule through the certainty equivalent:
 * lambda2 = -(beta/sqrt(2)) * (d/dR log I) * (mu - r)/sqrt(y); without
 * one, the slope is N(0).
 */
inline RiskPrices market_price_of_risk(const RiskAversion& ra, const VolClaim* claim,
                                       const Market& m, const VolState& st,
                                       const DensityPair* dp) {
    const double lambda1 = (m.p.mu - m.p.r) / std::sqrt(st.y);
    double slope;
    if (claim != nullptr) {
        if (dp == nullptr)
            throw std::invalid_argument("claim-dependent risk price needs a density pair");
        slope = detail::log_slope(*claim, ra, m, *dp);
    } else {
        slope = coeff_N(0.0, st.tau(), m.k).real();
    }
    const double lambda2 =
        -m.p.beta / std::numbers::sqrt2 * slope * (m.p.mu - m.p.r) / std::sqrt(st.y);
    return RiskPrices{lambda1, lambda2};
}

// One fully assembled pricing point.
struct Quote {
    double y0 = 0.0, T = 0.0, gamma = 0.0;
    double pi = 0.0;              // indifference price
    double davis = 0.0;           // zero-aversion price
    double h_claim = 0.0;         // hedge shares
    double h_merton = 0.0;        // Merton shares
    double excess_dollars = 0.0;  // (h_claim - h_merton) * s
    double lambda1 = 0.0;
    double lambda2 = 0.0;         // claim-dependent premium
    double bond = 0.0;
    double residual_mass = 0.0;
    double tail_psi = 0.0;
    std::size_t clipped = 0;
    double lambda2_merton = 0.0;        // zero-claim premium, general formula
    double lambda2_merton_closed = 0.0; // zero-claim premium, closed form
    double lambda2_closed_gap = 0.0;    // relative gap between the two
};

namespace detail {

inline Quote assemble_quote(const Market& m, const VolClaim& claim, const RiskAversion& ra,
                            const VolState& st, const DensityPair& dp) {
    Quote q;
    q.y0 = st.y;
    q.T = st.T;
    q.gamma = ra.gamma;
    q.pi = price_indifference(claim, ra, m, dp);
    q.davis = price_davis(claim, m, dp);
    q.h_claim = hedge_shares(claim, ra, m, st, dp);
    q.h_merton = merton_shares(ra, m, st);
    q.excess_dollars = (q.h_claim - q.h_merton) * st.s;
    const RiskPrices with_claim = market_price_of_risk(ra, &claim, m, st, &dp);
    q.lambda1 = with_claim.lambda1;
    q.lambda2 = with_claim.lambda2;
    q.bond = dp.bond;
    q.residual_mass = dp.residual_mass();
    q.tail_psi = dp.tail_psi;
    q.clipped = dp.clipped;
    q.lambda2_merton = market_price_of_risk(ra, nullptr, m, st, nullptr).lambda2;
    q.lambda2_merton_closed = lambda2_closed_form(m, st);
    q.lambda2_closed_gap =
        std::abs(q.lambda2_merton - q.lambda2_merton_closed) / std::abs(q.lambda2_merton_closed);
    return q;
}

}  // namespace detail

inline Quote quote(const Market& m, const VolClaim& claim, const RiskAversion& ra,
                   const VolState& st, const GridSpec& spec = {}) {
    const DensityPair dp = build_densities(m, st, spec);
    return detail::assemble_quote(m, claim, ra, st, dp);
}

// Scan over initial squared volatility, maturity and risk aversion.
struct SurfaceSpec {
    double y_lo = 0.05, y_hi = 0.5;
    std::size_t n_y = 10;
    double t_lo = 0.1, t_hi = 1.0;
    std::size_t n_t = 10;
    std::vector<double> gammas = {1.0};
    double s0 = 1.0;
};

/**
 * Evaluates a table of quotes, one row per (y0, T, gamma) cell, reusing a
 * single lattice layout per maturity (densities depend on gamma only
 * through the integrand, so each cell's density pair serves every gamma).
 * Cells whose state violates the shared layout fall back to a private one.
 */
inline std::vector<Quote> surface(const Market& m, const VolClaim& claim,
                                  const SurfaceSpec& ss, const GridSpec& spec = {}) {
    if (!(ss.y_lo >= 1e-3))
        throw std::invalid_argument("surface requires y_lo >= 1e-3: the rate diverges at y = 0");
    if (!(ss.y_hi >= ss.y_lo) || ss.n_y < 1 || ss.n_t < 1 || ss.gammas.empty())
        throw std::invalid_argument("invalid surface grid");
    if (!(ss.t_lo > 0.0 && ss.t_hi >= ss.t_lo))
        throw std::invalid_argument("invalid maturity range");
    for (const double g : ss.gammas)
        if (!(g > 0.0)) throw std::invalid_argument("gamma values must be positive");

    auto axis = [](double lo, double hi, std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        return v;
    };
    const std::vector<double> ys = axis(ss.y_lo, ss.y_hi, ss.n_y);
    const std::vector<double> ts = axis(ss.t_lo, ss.t_hi, ss.n_t);

    std::vector<Quote> rows;
    rows.reserve(ys.size() * ts.size() * ss.gammas.size());
    for (const double T : ts) {
        // Tail decay is slowest at the smallest rate (largest y); coverage
        // is hardest at the largest rate (smallest y).
        FourierGrid shared = plan_grid(m, m.tp.c / ss.y_hi, T, spec);
        const double u_half = shared.u_half();
        const double r_hi_need = detail::coverage_requirement(m, m.tp.c / ss.y_lo, T);
        while (shared.r_max() < r_hi_need && shared.n_points * 2 <= spec.max_points) {
            const std::size_t n2 = shared.n_points * 2;
            shared = FourierGrid{n2, 2.0 * u_half / static_cast<double>(n2),
                                 std::numbers::pi / u_half};
        }
        for (const double y0 : ys) {
            const VolState st = make_state(0.0, T, y0, ss.s0, m.tp);
            DensityPair dp;
            try {
                dp = build_densities_on(m, shared, st.r_shadow, st.tau());
            } catch (const std::runtime_error&) {
                dp = build_densities(m, st, spec);
            }
            for (const double gval : ss.gammas)
                rows.push_back(detail::assemble_quote(m, claim, RiskAversion(gval, m.p.rho), st, dp));
        }
    }
    return rows;
}

}  // namespace volquote
