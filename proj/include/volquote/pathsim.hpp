#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "volquote/claims.hpp"
#include "volquote/model.hpp"
#include "volquote/oracle.hpp"
#include "volquote/pricer.hpp"

namespace volquote {

struct LedgerRow {
    double t = 0.0;
    double y = 0.0;
    double r_shadow = 0.0;
    double pi = 0.0;
    double h_claim = 0.0;
    double h_merton = 0.0;
    double excess_dollars = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

// One simulated squared-volatility path under the economic measure with
// prices and hedges re-evaluated at every step. The stock price is held
// at s0 throughout: hedge ratios depend on it only through the explicit
// 1/s factor, so dollar differences are what the ledger reports.
struct PathLedger {
    std::vector<LedgerRow> rows;
    std::string claim_label;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double s0 = 0.0;
    double T = 0.0;
};

namespace detail {

// The final row sits at t = T where the transform degenerates to a point
// mass; it is priced at this floor instead.
inline constexpr double ledger_tau_floor = 1e-5;

inline LedgerRow ledger_row(const Market& m, const VolClaim& claim, const RiskAversion& ra,
                            double t, double T, double y, double s0, const GridSpec& spec) {
    const double tau = std::max(T - t, ledger_tau_floor);
    const VolState st = make_state(T - tau, T, y, s0, m.tp);
    const Quote q = quote(m, claim, ra, st, spec);
    return LedgerRow{t,           y,           st.r_shadow,      q.pi, q.h_claim,
                     q.h_merton,  q.excess_dollars, q.lambda1, q.lambda2};
}

inline std::vector<double> simulate_y_path(const Market& m, double y0, double dt,
                                           std::size_t n_steps, std::uint64_t seed) {
    const CirParams cp = cir_params(m, Measure::economic);
    CirStepper stepper(cp, dt, McScheme::exact_transition);
    auto eng = path_engine(seed, 0);
    std::vector<double> y(n_steps + 1);
    y[0] = y0;
    double r = vol_to_rate(y0, m.tp);
    for (std::size_t kstep = 1; kstep <= n_steps; ++kstep) {
        r = stepper.step(r, eng);
        y[kstep] = rate_to_vol(r, m.tp);
    }
    return y;
}

}  // namespace detail

/**
 * Simulates Y under P with exact rate transitions and records price,
 * hedge, Merton holding and excess hedge dollars at every step.
 * Deterministic for a fixed seed.
 */
inline PathLedger generate_ledger(const Market& m, const VolClaim& claim,
                                  const RiskAversion& ra, double y0, double s0, double T,
                                  double dt, std::uint64_t seed, const GridSpec& spec = {}) {
    if (!(y0 > 0.0)) throw std::invalid_argument("requires y0 > 0");
    if (!(T > 0.0) || !(dt > 0.0) || dt > T / 50.0)
        throw std::invalid_argument("requires dt <= T/50");
    const auto n_steps = static_cast<std::size_t>(std::llround(T / dt));
    if (std::abs(static_cast<double>(n_steps) * dt - T) > 1e-9 * T)
        throw std::invalid_argument("dt must divide T");

    const std::vector<double> path = detail::simulate_y_path(m, y0, dt, n_steps, seed);

    PathLedger ledger;
    ledger.claim_label = claim.label();
    ledger.gamma = ra.gamma;
    ledger.seed = seed;
    ledger.dt = dt;
    ledger.s0 = s0;
    ledger.T = T;
    ledger.rows.reserve(n_steps + 1);
    for (std::size_t kstep = 0; kstep <= n_steps; ++kstep) {
        const double t = kstep == n_steps ? T : static_cast<double>(kstep) * dt;
        ledger.rows.push_back(detail::ledger_row(m, claim, ra, t, T, path[kstep], s0, spec));
    }
    return ledger;
}

// Prices along one common rate path for several risk aversions. The path
// does not depend on gamma, so differences across columns isolate the
// aversion effect (common random numbers).
struct GammaPathTable {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> gammas;
    std::vector<std::vector<double>> pi;  // pi[gamma_index][step]
    double max_rel_spread = 0.0;          // max over steps of (max - min)/|mid gamma price|
};

inline GammaPathTable gamma_sensitivity(const Market& m, const VolClaim& claim,
                                        std::span<const double> gammas, double y0, double s0,
                                        double T, double dt, std::uint64_t seed,
                                        const GridSpec& spec = {}) {
    if (gammas.empty()) throw std::invalid_argument("needs at least one gamma");
    for (const double g : gammas)
        if (!(g > 0.0 && g <= 10.0))
            throw std::invalid_argument("gamma values must lie in (0, 10]");
    if (!(T > 0.0) || !(dt > 0.0) || dt > T / 50.0)
        throw std::invalid_argument("requires dt <= T/50");
    const auto n_steps = static_cast<std::size_t>(std::llround(T / dt));

    const std::vector<double> path = detail::simulate_y_path(m, y0, dt, n_steps, seed);

    GammaPathTable table;
    table.gammas.assign(gammas.begin(), gammas.end());
    table.pi.assign(gammas.size(), std::vector<double>(n_steps + 1));
    table.t.resize(n_steps + 1);
    table.y = path;
    for (std::size_t kstep = 0; kstep <= n_steps; ++kstep) {
        const double t = kstep == n_steps ? T : static_cast<double>(kstep) * dt;
        table.t[kstep] = t;
        const double tau = std::max(T - t, detail::ledger_tau_floor);
        const VolState st = make_state(T - tau, T, path[kstep], s0, m.tp);
        const DensityPair dp = build_densities(m, st, spec);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t gi = 0; gi < table.gammas.size(); ++gi) {
            const RiskAversion ra(table.gammas[gi], m.p.rho);
            const double pi = price_indifference(claim, ra, m, dp);
            table.pi[gi][kstep] = pi;
            lo = std::min(lo, pi);
            hi = std::max(hi, pi);
        }
        const double mid = std::abs(table.pi[table.gammas.size() / 2][kstep]);
        if (mid > 1e-12)
            table.max_rel_spread = std::max(table.max_rel_spread, (hi - lo) / mid);
    }
    return table;
}

}  // namespace volquote
