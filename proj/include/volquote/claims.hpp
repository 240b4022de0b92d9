#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "volquote/model.hpp"

namespace volquote {

enum class ClaimKind { put, call_spread, constant, tabulated };

/**
 * Terminal payoff B on the squared volatility Y_T.
 *
 * Payoffs must be bounded from above; claims growing without bound (calls,
 * forwards) produce an expected utility of negative infinity under
 * exponential preferences and are rejected at construction. Strikes are
 * quoted in variance units.
 */
class VolClaim {
public:
    static VolClaim put(double strike) {
        if (!(strike > 0.0)) throw std::invalid_argument("put strike must be positive");
        VolClaim c(ClaimKind::put);
        c.k1_ = strike;
        c.lo_ = 0.0;
        c.hi_ = strike;
        c.label_ = "put:K=" + trim(strike);
        return c;
    }

    static VolClaim call_spread(double k1, double k2) {
        if (!(k1 > 0.0 && k1 < k2))
            throw std::invalid_argument("call spread requires 0 < K1 < K2");
        if (!std::isfinite(k2))
            throw std::invalid_argument(
                "claim is unbounded above (expected utility of negative infinity); "
                "cap the spread with a finite K2");
        VolClaim c(ClaimKind::call_spread);
        c.k1_ = k1;
        c.k2_ = k2;
        c.lo_ = 0.0;
        c.hi_ = k2 - k1;
        c.label_ = "spread:K1=" + trim(k1) + ",K2=" + trim(k2);
        return c;
    }

    static VolClaim constant(double value) {
        if (!std::isfinite(value)) throw std::invalid_argument("constant payoff must be finite");
        VolClaim c(ClaimKind::constant);
        c.k1_ = value;
        c.lo_ = value;
        c.hi_ = value;
        c.label_ = "const:k=" + trim(value);
        return c;
    }

    // Piecewise-linear in y with constant extrapolation beyond the grid,
    // which keeps any table bounded.
    static VolClaim tabulated(std::vector<double> y_grid, std::vector<double> values) {
        if (y_grid.size() != values.size() || y_grid.size() < 2)
            throw std::invalid_argument("tabulated claim needs matching grids of size >= 2");
        for (std::size_t i = 0; i < y_grid.size(); ++i) {
            if (!(y_grid[i] > 0.0) || !std::isfinite(y_grid[i]))
                throw std::invalid_argument("tabulated y grid must be positive and finite");
            if (i > 0 && !(y_grid[i] > y_grid[i - 1]))
                throw std::invalid_argument("tabulated y grid must be strictly increasing");
            if (!std::isfinite(values[i]))
                throw std::invalid_argument(
                    "tabulated payoff must be finite (claims unbounded above have "
                    "expected utility of negative infinity)");
        }
        VolClaim c(ClaimKind::tabulated);
        c.lo_ = *std::min_element(values.begin(), values.end());
        c.hi_ = *std::max_element(values.begin(), values.end());
        c.grid_ = std::move(y_grid);
        c.values_ = std::move(values);
        c.label_ = "table:" + std::to_string(c.grid_.size()) + "pts";
        return c;
    }

    // Payoff at squared volatility y; y = +infinity evaluates the limit.
    double payoff(double y) const {
        switch (kind_) {
            case ClaimKind::put:
                return std::max(k1_ - y, 0.0);
            case ClaimKind::call_spread:
                return std::min(std::max(y - k1_, 0.0), k2_ - k1_);
            case ClaimKind::constant:
                return k1_;
            case ClaimKind::tabulated: {
                if (y <= grid_.front()) return values_.front();
                if (y >= grid_.back()) return values_.back();
                const auto it = std::upper_bound(grid_.begin(), grid_.end(), y);
                const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
                const double w = (y - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
                return values_[i - 1] + w * (values_[i] - values_[i - 1]);
            }
        }
        throw std::logic_error("unreachable claim kind");
    }

    // Tight payoff bounds (inf B, sup B) for the built-in kinds; grid
    // min/max for tables.
    std::pair<double, double> bounds() const { return {lo_, hi_}; }

    // y-locations where the payoff has a kink; used to align PDE grids.
    std::vector<double> kink_levels() const {
        switch (kind_) {
            case ClaimKind::put: return {k1_};
            case ClaimKind::call_spread: return {k1_, k2_};
            case ClaimKind::constant: return {};
            case ClaimKind::tabulated:
                return std::vector<double>(grid_.begin() + 1, grid_.end() - 1);
        }
        return {};
    }

    ClaimKind kind() const { return kind_; }
    const std::string& label() const { return label_; }

private:
    explicit VolClaim(ClaimKind kind) : kind_(kind) {}

    static std::string trim(double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }

    ClaimKind kind_;
    double k1_ = 0.0, k2_ = 0.0;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> grid_, values_;
    std::string label_;
};

// Risk aversion together with the effective exponent gamma*(1 - rho^2)
// appearing in every pure-volatility formula. The zero-aversion (Davis)
// limit has its own pricing routine; gamma = 0 is not representable here.
struct RiskAversion {
    double gamma;
    double gamma_eff;

    RiskAversion(double gamma_, double rho) {
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_))
            throw std::invalid_argument("risk aversion gamma must be positive and finite");
        if (std::abs(rho) >= 1.0) throw std::invalid_argument("requires |rho| < 1");
        gamma = gamma_;
        gamma_eff = gamma_ * (1.0 - rho * rho);
    }
};

// Exponential-tilted integrand g(R) = exp(gamma_eff * B(c/R)). R = 0 is
// accepted and evaluates the y -> infinity limit of the payoff.
inline double g_of_rate(const VolClaim& claim, const RiskAversion& ra, const TildeParams& tp,
                        double r_shadow) {
    if (!(r_shadow >= 0.0)) throw std::invalid_argument("shadow rate must be non-negative");
    const double y = r_shadow > 0.0 ? tp.c / r_shadow : std::numeric_limits<double>::infinity();
    return std::exp(ra.gamma_eff * claim.payoff(y));
}

}  // namespace volquote
