#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "volquote/claims.hpp"
#include "volquote/model.hpp"
#include "volquote/pricer.hpp"
#include "volquote/transform.hpp"

namespace volquote {

enum class McScheme { exact_transition, full_truncation_euler };
enum class Measure { economic, pricing };  // P and P-tilde

struct SimSpec {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 64;
    McScheme scheme = McScheme::exact_transition;
    Measure measure = Measure::pricing;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_paths < 1 || n_steps < 1)
            throw std::invalid_argument("simulation needs n_paths >= 1 and n_steps >= 1");
    }
};

// CIR coefficients dR = speed*(level - R) dt + vol*sqrt(R) dW under the
// requested measure. speed*level is shared by both measures.
struct CirParams {
    double speed;
    double level;
    double vol;
};

inline CirParams cir_params(const Market& m, Measure meas) {
    if (meas == Measure::pricing) return CirParams{m.tp.alpha_tilde, m.tp.kappa_tilde, m.p.beta};
    return CirParams{m.p.alpha, m.p.kappa, m.p.beta};
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// One engine per (seed, path): streams are independent of evaluation order,
// so estimates are reproducible bit-exact for a fixed seed and scheme.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(detail::splitmix64(detail::splitmix64(seed) ^ (path + 1)));
}

/**
 * One-step CIR sampler with a fixed step size.
 *
 * exact_transition draws the noncentral chi-square transition with
 * d = 4*speed*level/vol^2 degrees of freedom: for d > 1 as the square of a
 * shifted normal plus an independent chi-square with d-1 degrees, otherwise
 * through the Poisson mixture of central chi-squares. full_truncation_euler
 * clamps the rate at zero inside both drift and diffusion.
 */
class CirStepper {
public:
    CirStepper(const CirParams& cp, double dt, McScheme scheme)
        : cp_(cp), dt_(dt), scheme_(scheme) {
        if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
        if (!(cp.speed > 0.0 && cp.level > 0.0 && cp.vol > 0.0))
            throw std::invalid_argument("CIR parameters must be positive");
        decay_ = std::exp(-cp.speed * dt);
        scale_ = cp.vol * cp.vol * (1.0 - decay_) / (4.0 * cp.speed);
        dof_ = 4.0 * cp.speed * cp.level / (cp.vol * cp.vol);
        if (dof_ > 1.0) chi_rest_ = std::gamma_distribution<double>(0.5 * (dof_ - 1.0), 2.0);
        sqrt_dt_ = std::sqrt(dt);
    }

    double dt() const { return dt_; }
    double dof() const { return dof_; }

    double step(double r, std::mt19937_64& eng) {
        if (scheme_ == McScheme::full_truncation_euler) {
            const double rp = std::max(r, 0.0);
            const double z = normal_(eng);
            return r + cp_.speed * (cp_.level - rp) * dt_ + cp_.vol * std::sqrt(rp) * sqrt_dt_ * z;
        }
        const double noncentrality = r * decay_ / scale_;
        if (dof_ > 1.0) {
            const double z = normal_(eng) + std::sqrt(noncentrality);
            return scale_ * (z * z + chi_rest_(eng));
        }
        std::poisson_distribution<long> pois(0.5 * noncentrality);
        const long j = pois(eng);
        std::gamma_distribution<double> mix(0.5 * dof_ + static_cast<double>(j), 2.0);
        return scale_ * mix(eng);
    }

private:
    CirParams cp_;
    double dt_;
    McScheme scheme_;
    double decay_ = 0.0, scale_ = 0.0, dof_ = 0.0, sqrt_dt_ = 0.0;
    std::normal_distribution<double> normal_;
    std::gamma_distribution<double> chi_rest_;
};

// Terminal rates R_T, one entry per path.
inline std::vector<double> simulate_cir_terminal(const CirParams& cp, const SimSpec& spec,
                                                 double r0, double horizon) {
    spec.validate();
    if (!(r0 > 0.0 && horizon > 0.0))
        throw std::invalid_argument("requires r0 > 0 and horizon > 0");
    CirStepper stepper(cp, horizon / static_cast<double>(spec.n_steps), spec.scheme);
    std::vector<double> out(spec.n_paths);
    for (std::size_t p = 0; p < spec.n_paths; ++p) {
        auto eng = path_engine(spec.seed, p);
        double r = r0;
        for (std::size_t s = 0; s < spec.n_steps; ++s) r = stepper.step(r, eng);
        out[p] = r;
    }
    return out;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
};

struct McPriceResult {
    McEstimate bond;       // e^{-int R}
    McEstimate integrand;  // e^{-int R} g(R_T)
    double pi = 0.0;
    double pi_se = 0.0;    // delta method on the paired estimates
    double davis = 0.0;
    double davis_se = 0.0;
};

/**
 * Simulation price of the claim under the pricing measure. The bond and
 * the tilted integrand share every path, so their errors cancel in the
 * price ratio; the running integral of R is a trapezoid along each path.
 */
inline McPriceResult mc_price(const Market& m, const VolClaim& claim, const RiskAversion& ra,
                              const VolState& st, const SimSpec& spec) {
    spec.validate();
    if (spec.measure != Measure::pricing)
        throw std::invalid_argument("mc_price integrates under the pricing measure only");
    const double tau = st.tau();
    if (!(tau > 0.0)) throw std::invalid_argument("requires tau > 0");

    const CirParams cp = cir_params(m, Measure::pricing);
    CirStepper stepper(cp, tau / static_cast<double>(spec.n_steps), spec.scheme);
    const double dt = stepper.dt();

    const std::size_t n = spec.n_paths;
    double sum_b = 0, sum_i = 0, sum_d = 0;
    double sum_bb = 0, sum_ii = 0, sum_dd = 0, sum_ib = 0, sum_db = 0;
    for (std::size_t p = 0; p < n; ++p) {
        auto eng = path_engine(spec.seed, p);
        double r = st.r_shadow;
        double integral = 0.0;
        for (std::size_t s = 0; s < spec.n_steps; ++s) {
            const double r_next = stepper.step(r, eng);
            integral += 0.5 * (std::max(r, 0.0) + std::max(r_next, 0.0)) * dt;
            r = r_next;
        }
        const double discount = std::exp(-integral);
        const double y_T = m.tp.c / std::max(r, 1e-300);
        const double b_payoff = claim.payoff(y_T);
        const double tilted = discount * std::exp(ra.gamma_eff * b_payoff);
        const double davis_term = discount * b_payoff;
        sum_b += discount;
        sum_i += tilted;
        sum_d += davis_term;
        sum_bb += discount * discount;
        sum_ii += tilted * tilted;
        sum_dd += davis_term * davis_term;
        sum_ib += tilted * discount;
        sum_db += davis_term * discount;
    }
    const double nd = static_cast<double>(n);
    const double mb = sum_b / nd, mi = sum_i / nd, md = sum_d / nd;
    const double vb = (sum_bb - nd * mb * mb) / (nd - 1.0);
    const double vi = (sum_ii - nd * mi * mi) / (nd - 1.0);
    const double vd = (sum_dd - nd * md * md) / (nd - 1.0);
    const double cib = (sum_ib - nd * mi * mb) / (nd - 1.0);
    const double cdb = (sum_db - nd * md * mb) / (nd - 1.0);
    if (!(mi > 0.0)) throw std::runtime_error("tilted sample mean non-positive; g must be positive");

    McPriceResult out;
    out.bond = McEstimate{mb, std::sqrt(vb / nd), n};
    out.integrand = McEstimate{mi, std::sqrt(vi / nd), n};
    out.pi = std::log(mi / mb) / ra.gamma_eff;
    out.pi_se =
        std::sqrt(std::max(vi / (mi * mi) + vb / (mb * mb) - 2.0 * cib / (mi * mb), 0.0) / nd) /
        ra.gamma_eff;
    out.davis = md / mb;
    out.davis_se = std::sqrt(
        std::max(vd / (mb * mb) + md * md * vb / (mb * mb * mb * mb) -
                     2.0 * md * cdb / (mb * mb * mb),
                 0.0) /
        nd);
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference solver for the linear pricing equation in rate
// coordinates: f_tau = speed*(level - R) f_R + (vol^2/2) R f_RR - R f.
// ---------------------------------------------------------------------------

struct PdeGrid {
    double r_min = 0.0;
    double r_max = 0.0;
    std::size_t n_space = 800;  // number of intervals
    std::size_t n_time = 400;
    double theta = 0.5;              // 0.5 = Crank-Nicolson
    std::size_t rannacher_steps = 2; // fully implicit startup steps
};

/**
 * Grid sized for the claim: the upper boundary sits well past the
 * stationary range of the rate, the lower one close to zero, and the
 * lattice is shifted so the kink of the payoff nearest the evaluation
 * point lands on a node.
 */
inline PdeGrid default_pde_grid(const Market& m, const VolState& st, const VolClaim* claim,
                                std::size_t n_space = 800, std::size_t n_time = 0) {
    PdeGrid g;
    g.n_space = n_space;
    g.n_time = n_time > 0 ? n_time
                          : std::max<std::size_t>(100, static_cast<std::size_t>(400.0 * st.tau()));
    const double stationary_sd =
        m.p.beta * std::sqrt(m.tp.kappa_tilde / (2.0 * m.tp.alpha_tilde));
    g.r_max = std::max({m.tp.kappa_tilde + 12.0 * stationary_sd, 2.5 * st.r_shadow,
                        2.5 * m.tp.kappa_tilde});
    g.r_min = std::min(st.r_shadow, m.tp.kappa_tilde) / 100.0;
    if (claim != nullptr) {
        double nearest = 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (const double ky : claim->kink_levels()) {
            const double kr = m.tp.c / ky;
            g.r_max = std::max(g.r_max, 1.5 * kr);
            const double d = std::abs(kr - st.r_shadow);
            if (d < best) {
                best = d;
                nearest = kr;
            }
        }
        if (std::isfinite(best) && nearest > g.r_min && nearest < g.r_max) {
            const double h = (g.r_max - g.r_min) / static_cast<double>(g.n_space);
            const double shift = std::floor((nearest - g.r_min) / h) * h;
            double r_lo = nearest - shift;  // aligns the kink on the lattice
            if (r_lo <= 0.0) r_lo += h;
            g.r_max += r_lo - g.r_min;
            g.r_min = r_lo;
        }
    }
    return g;
}

namespace detail {

inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    static thread_local std::vector<double> cp, dp;
    cp.assign(n, 0.0);
    dp.assign(n, 0.0);
    cp[0] = upper[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = diag[i] - lower[i] * cp[i - 1];
        cp[i] = upper[i] / denom;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom;
    }
    rhs[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = dp[i] - cp[i] * rhs[i + 1];
}

}  // namespace detail

/**
 * Backward induction from the terminal data to time-to-maturity tau.
 *
 * Interior rows use central differences, switching the convection term to
 * first-order upwind only where the cell Peclet number would break the
 * sign pattern (the degenerate region near R = 0). The lower boundary row
 * keeps the drift alone, one-sided into the interior; the upper row
 * imposes zero curvature. The first rannacher_steps are fully implicit to
 * damp the terminal kink before switching to the theta weighting.
 */
inline std::vector<double> pde_solve(const Market& m, const PdeGrid& grid, double tau,
                                     const std::function<double(double)>& terminal) {
    if (!(grid.r_min > 0.0 && grid.r_max > grid.r_min))
        throw std::invalid_argument("requires 0 < r_min < r_max");
    if (grid.n_space < 8 || grid.n_time < 4) throw std::invalid_argument("PDE grid too coarse");
    if (!(tau > 0.0)) throw std::invalid_argument("requires tau > 0");
    const CirParams cp = cir_params(m, Measure::pricing);
    if (!(grid.r_min < cp.level && grid.r_max > cp.level))
        throw std::invalid_argument("PDE grid must bracket the long-run level");

    const std::size_t nodes = grid.n_space + 1;
    const double h = (grid.r_max - grid.r_min) / static_cast<double>(grid.n_space);
    const double dt = tau / static_cast<double>(grid.n_time);

    // Row coefficients of the generator L.
    std::vector<double> gen_lo(nodes), gen_di(nodes), gen_up(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        const double r = grid.r_min + static_cast<double>(j) * h;
        const double drift = cp.speed * (cp.level - r);
        const double diff = 0.5 * cp.vol * cp.vol * r / (h * h);
        if (j == 0) {
            gen_lo[j] = 0.0;
            gen_di[j] = -drift / h - r;
            gen_up[j] = drift / h;  // drift points into the domain here
        } else if (j == nodes - 1) {
            gen_lo[j] = -drift / h;  // drift points left of r_max: one-sided, zero curvature
            gen_di[j] = drift / h - r;
            gen_up[j] = 0.0;
        } else if (diff >= std::abs(drift) / (2.0 * h)) {
            gen_lo[j] = diff - drift / (2.0 * h);
            gen_di[j] = -2.0 * diff - r;
            gen_up[j] = diff + drift / (2.0 * h);
        } else if (drift > 0.0) {
            gen_lo[j] = diff;
            gen_di[j] = -2.0 * diff - drift / h - r;
            gen_up[j] = diff + drift / h;
        } else {
            gen_lo[j] = diff - drift / h;
            gen_di[j] = -2.0 * diff + drift / h - r;
            gen_up[j] = diff;
        }
    }

    std::vector<double> f(nodes);
    double terminal_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes; ++j) {
        f[j] = terminal(grid.r_min + static_cast<double>(j) * h);
        terminal_max = std::max(terminal_max, f[j]);
    }

    std::vector<double> lo(nodes), di(nodes), up(nodes), rhs(nodes);
    for (std::size_t step = 0; step < grid.n_time; ++step) {
        const double theta = step < grid.rannacher_steps ? 1.0 : grid.theta;
        for (std::size_t j = 0; j < nodes; ++j) {
            lo[j] = -theta * dt * gen_lo[j];
            di[j] = 1.0 - theta * dt * gen_di[j];
            up[j] = -theta * dt * gen_up[j];
            const double explicit_part =
                (1.0 - theta) * dt *
                ((j > 0 ? gen_lo[j] * f[j - 1] : 0.0) + gen_di[j] * f[j] +
                 (j + 1 < nodes ? gen_up[j] * f[j + 1] : 0.0));
            rhs[j] = f[j] + explicit_part;
        }
        detail::solve_tridiagonal(lo, di, up, rhs);
        f.swap(rhs);
        for (const double v : f)
            if (!(v > -1e-12) || v > terminal_max * (1.0 + 1e-7))
                throw std::runtime_error(
                    "PDE solution left the admissible range (oscillation near the "
                    "kink); refine the grid");
    }
    return f;
}

inline double pde_interp(const PdeGrid& grid, std::span<const double> f, double r) {
    const double h = (grid.r_max - grid.r_min) / static_cast<double>(grid.n_space);
    const double x = (r - grid.r_min) / h;
    if (x < -1e-9 || x > static_cast<double>(grid.n_space) + 1e-9)
        throw std::invalid_argument("evaluation point outside the PDE grid");
    const std::size_t j =
        std::min(static_cast<std::size_t>(std::max(x, 0.0)), grid.n_space - 1);
    const double w = x - static_cast<double>(j);
    return f[j] * (1.0 - w) + f[j + 1] * w;
}

// Indifference price from two solves: tilted terminal data and the
// constant 1 for the bond normalization. Fully independent of the
// transform route.
inline double pde_price(const Market& m, const VolClaim& claim, const RiskAversion& ra,
                        const VolState& st, const PdeGrid& grid) {
    const double tau = st.tau();
    const auto f = pde_solve(m, grid, tau, [&](double r) {
        const double y = m.tp.c / r;
        return std::exp(ra.gamma_eff * claim.payoff(y));
    });
    const auto bond_fn = pde_solve(m, grid, tau, [](double) { return 1.0; });
    const double fv = pde_interp(grid, f, st.r_shadow);
    const double bv = pde_interp(grid, bond_fn, st.r_shadow);
    return std::log(fv / bv) / ra.gamma_eff;
}

// ---------------------------------------------------------------------------
// One-step moment test of the squared-volatility dynamics under P.
// ---------------------------------------------------------------------------

struct SdeProbe {
    double y = 0.0;
    double drift_expected = 0.0, drift_sample = 0.0, z_drift = 0.0;
    double var_expected = 0.0, var_sample = 0.0, z_var = 0.0;
    double cov_expected = 0.0, cov_sample = 0.0, z_cov = 0.0;
};

struct SdeReport {
    std::vector<SdeProbe> probes;
    double dt = 0.0;
    std::size_t n_samples = 0;

    double max_abs_z() const {
        double z = 0.0;
        for (const auto& p : probes)
            z = std::max({z, std::abs(p.z_drift), std::abs(p.z_var), std::abs(p.z_cov)});
        return z;
    }
    bool pass(double z_max = 3.0) const { return max_abs_z() < z_max; }
};

/**
 * Ensembles of single Euler increments of R under P, mapped through
 * Y = c/R, probe the drift, the squared diffusion and the signed
 * covariance with the first Brownian increment against the Ito-derived
 * coefficients of Y. z-scores use empirical moments up to order four.
 */
inline SdeReport sde_consistency_report(const Market& m, std::span<const double> y_levels,
                                        double dt, std::size_t n_samples, std::uint64_t seed) {
    if (!(dt > 0.0 && dt <= 1e-4))
        throw std::invalid_argument("moment test needs dt <= 1e-4");
    if (n_samples < 1000) throw std::invalid_argument("moment test needs >= 1000 samples");
    const CirParams cp = cir_params(m, Measure::economic);
    const double rho = m.p.rho;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    const double sqrt_dt = std::sqrt(dt);

    SdeReport report;
    report.dt = dt;
    report.n_samples = n_samples;
    std::uint64_t stream = 0;
    for (const double y : y_levels) {
        const double r0 = m.tp.c / y;
        const YCoeffs expect = y_drift_diffusion(y, m.p, m.tp);
        double s1 = 0, s2 = 0, s3 = 0, s4 = 0, sc = 0, sc2 = 0;
        auto eng = path_engine(seed, stream++);
        std::normal_distribution<double> normal;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double z1 = normal(eng);
            const double z2 = normal(eng);
            const double dw1 = sqrt_dt * z1;
            const double dr = cp.speed * (cp.level - r0) * dt +
                              cp.vol * std::sqrt(r0) * (rho * z1 + rho_c * z2) * sqrt_dt;
            const double r1 = std::max(r0 + dr, 1e-300);
            const double dy = m.tp.c / r1 - y;
            s1 += dy;
            s2 += dy * dy;
            s3 += dy * dy * dy;
            s4 += dy * dy * dy * dy;
            sc += dy * dw1;
            sc2 += dy * dw1 * dy * dw1;
        }
        const double nd = static_cast<double>(n_samples);
        const double mean = s1 / nd;
        const double var = s2 / nd - mean * mean;
        const double m4 = s4 / nd - 4.0 * mean * s3 / nd + 6.0 * mean * mean * s2 / nd -
                          3.0 * mean * mean * mean * mean;
        const double cov = sc / nd;  // E[dW1] = 0
        const double var_cov = sc2 / nd - cov * cov;

        SdeProbe probe;
        probe.y = y;
        probe.drift_expected = expect.drift;
        probe.drift_sample = mean / dt;
        probe.z_drift = (probe.drift_sample - expect.drift) / (std::sqrt(var / nd) / dt);
        probe.var_expected = expect.diffusion * expect.diffusion;
        probe.var_sample = var / dt;
        const double se_var = std::sqrt(std::max(m4 - var * var, 0.0) / nd) / dt;
        probe.z_var = (probe.var_sample - probe.var_expected) / se_var;
        probe.cov_expected = expect.diffusion * rho;
        probe.cov_sample = cov / dt;
        const double se_cov = std::sqrt(var_cov / nd) / dt;
        probe.z_cov = (probe.cov_sample - probe.cov_expected) / se_cov;
        report.probes.push_back(probe);
    }
    return report;
}

}  // namespace volquote
