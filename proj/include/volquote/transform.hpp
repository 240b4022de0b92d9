#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "volquote/model.hpp"

namespace volquote {

// Constants of the discounted affine transform of the shadow rate.
// b1 < 0 < b2 are the roots of x^2 - (2*alpha_tilde/beta^2) x - 2/beta^2,
// so b1*b2 = -2/beta^2 and b1 + b2 = 2*alpha_tilde/beta^2.
struct AffineConstants {
    double b1;
    double b2;
    double delta;    // sqrt(alpha_tilde^2 + 2 beta^2)
    double a_kappa;  // alpha*kappa product entering the amplitude exponent
    double beta;
};

inline AffineConstants affine_constants(const TildeParams& tp, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const double delta = std::sqrt(tp.alpha_tilde * tp.alpha_tilde + 2.0 * beta * beta);
    const double b2 = (tp.alpha_tilde + delta) / (beta * beta);
    const double b1 = (tp.alpha_tilde - delta) / (beta * beta);
    return AffineConstants{b1, b2, delta, tp.a_kappa(), beta};
}

// Everything fixed once the model parameters are chosen. Immutable;
// safe to share across threads.
struct Market {
    ModelParams p;
    TildeParams tp;
    AffineConstants k;

    static Market make(const ModelParams& params) {
        const TildeParams tp = derive_tilde_params(params);
        return Market{params, tp, affine_constants(tp, params.beta)};
    }
};

/**
 * Exponent slope N(u, tau) of the transform exp(M + N*R).
 *
 * Solves the Riccati equation N' = (beta^2/2) N^2 - alpha_tilde N - 1 with
 * N(0) = -iu. N(u, 0) = -iu exactly; N(0, tau) is real and non-positive and
 * tends to b1 as tau grows. Only e^{-delta*tau} appears, so large tau cannot
 * overflow.
 */
inline std::complex<double> coeff_N(double u, double tau, const AffineConstants& k) {
    if (!(tau >= 0.0)) throw std::invalid_argument("requires tau >= 0");
    const std::complex<double> iu(0.0, u);
    const double decay = std::exp(-k.delta * tau);
    const std::complex<double> num = (k.b2 + iu) * k.b1 - (k.b1 + iu) * k.b2 * decay;
    const std::complex<double> den = (k.b2 + iu) - (k.b1 + iu) * decay;
    if (std::abs(den) < 1e-14)
        throw std::runtime_error("transform denominator vanished; invalid constants");
    return num / den;
}

namespace detail {

// Argument of the logarithm in M. Equals
// (b2 - b1 e^{-delta*tau} + i u (1 - e^{-delta*tau})) / (b2 - b1), whose real
// part is strictly positive for all real u and tau >= 0: the principal branch
// is continuous in u. Lattice evaluation still tracks the winding explicitly
// and treats any jump as a hard error.
inline std::complex<double> log_arg_M(double u, const AffineConstants& k,
                                      const std::complex<double>& n_val) {
    const std::complex<double> iu(0.0, u);
    return (k.b2 + iu) / (k.b2 - n_val);
}

}  // namespace detail

/**
 * Exponent amplitude M(u, tau), the integral a_kappa * int_0^tau N ds in
 * closed form:
 *
 *   M = -(2 a_kappa / beta^2) log((b2 + iu)/(b2 - N)) + a_kappa * b1 * tau.
 *
 * M(u, 0) = 0 and M(0, tau) is real and negative for tau > 0.
 */
inline std::complex<double> coeff_M(double u, double tau, const AffineConstants& k) {
    const std::complex<double> n_val = coeff_N(u, tau, k);
    const std::complex<double> w = detail::log_arg_M(u, k, n_val);
    if (!(w.real() > 0.0))
        throw std::runtime_error("branch tracking failure: log argument left the right half-plane");
    const double amp = -2.0 * k.a_kappa / (k.beta * k.beta);
    return amp * std::log(w) + k.a_kappa * k.b1 * tau;
}

struct TransformEval {
    std::complex<double> m;
    std::complex<double> n;
    std::complex<double> psi;  // exp(m + n * r_shadow)
};

inline TransformEval eval_transform(double u, double r_shadow, double tau,
                                    const AffineConstants& k) {
    const std::complex<double> n_val = coeff_N(u, tau, k);
    const std::complex<double> m_val = coeff_M(u, tau, k);
    return TransformEval{m_val, n_val, std::exp(m_val + n_val * r_shadow)};
}

// Discounted transform Psi(u) = E~[e^{-int R} e^{-iu R_T}] at the point
// (r_shadow, tau). |Psi(u)| <= Psi(0) <= 1 for tau >= 0.
inline std::complex<double> psi(double u, double r_shadow, double tau,
                                const AffineConstants& k) {
    return eval_transform(u, r_shadow, tau, k).psi;
}

// Discounted bond value Psi(0). Real by construction; the imaginary residue
// is asserted small and dropped.
inline double bond(double r_shadow, double tau, const AffineConstants& k) {
    const std::complex<double> v = psi(0.0, r_shadow, tau, k);
    if (std::abs(v.imag()) >= 1e-14)
        throw std::runtime_error("bond value acquired an imaginary part; transform corrupted");
    return v.real();
}

/**
 * Evaluates Psi and Psi*N on the half-lattice u_j = j*du, j = 0..n_half.
 *
 * The complex logarithm inside M is evaluated with a rotation count carried
 * along the lattice from u = 0 instead of independent principal-branch calls;
 * a phase jump of pi or more between neighbours aborts, since the winding
 * would then be ambiguous. The negative-frequency half follows from conjugate
 * symmetry and is not stored.
 */
inline void eval_transform_lattice(double du, std::size_t n_half, double r_shadow, double tau,
                                   const AffineConstants& k,
                                   std::vector<std::complex<double>>& psi_out,
                                   std::vector<std::complex<double>>& psi_n_out) {
    psi_out.resize(n_half + 1);
    psi_n_out.resize(n_half + 1);
    const double amp = -2.0 * k.a_kappa / (k.beta * k.beta);
    const double linear = k.a_kappa * k.b1 * tau;
    double prev_phase = 0.0;   // arg of the log argument at the previous node
    double unwrapped = 0.0;    // continuously tracked arg
    for (std::size_t j = 0; j <= n_half; ++j) {
        const double u = static_cast<double>(j) * du;
        const std::complex<double> n_val = coeff_N(u, tau, k);
        const std::complex<double> w = detail::log_arg_M(u, k, n_val);
        const double phase = std::arg(w);
        if (j == 0) {
            unwrapped = phase;  // w is real positive at u = 0
        } else {
            double jump = phase - prev_phase;
            if (jump > std::numbers::pi) jump -= 2.0 * std::numbers::pi;
            else if (jump < -std::numbers::pi) jump += 2.0 * std::numbers::pi;
            if (std::abs(jump) >= std::numbers::pi * (1.0 - 1e-9))
                throw std::runtime_error(
                    "branch tracking failure: phase jump of pi between lattice nodes");
            unwrapped += jump;
        }
        prev_phase = phase;
        const std::complex<double> m_val =
            amp * std::complex<double>(std::log(std::abs(w)), unwrapped) + linear;
        const std::complex<double> value = std::exp(m_val + n_val * r_shadow);
        psi_out[j] = value;
        psi_n_out[j] = value * n_val;
    }
}

}  // namespace volquote
