#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "oscmap/errors.hpp"
#include "oscmap/expr.hpp"
#include "oscmap/jet.hpp"
#include "oscmap/numeric.hpp"

namespace oscmap {

// ---------------------------------------------------------------------------
// Phase-method construction for x'' + Omega^2(t) x = 0.
//
// The whole module rests on the polar decomposition x = rho cos(theta) with
// rho = sqrt(Ltilde / theta') and the identity
//     Omega^2(t) = theta'^2 + (1/2) {theta; t},
// which turns any smooth strictly increasing phase into an exact
// (oscillator, solution) pair. All derivatives come from order-3 jets, never
// from differencing samples.
// ---------------------------------------------------------------------------

/// One sampled point of a constructed oscillator solution.
struct OscillatorState {
    double t = 0.0;
    double x = 0.0;
    double xdot = 0.0;
    double rho = 0.0;
    double theta = 0.0;
    double omega_inst = 0.0;  ///< instantaneous angular frequency theta'
    double omega_sq = 0.0;    ///< stiffness Omega^2(t)
    double e_tk = 0.0;        ///< Teager-Kaiser instantaneous energy
};

/// A sampled (Omega^2, exact solution) pair with its exact invariant.
struct GeneratedPair {
    PhaseExpr phase;
    double l_tilde = 1.0;  ///< angular momentum per unit mass, > 0
    double mass = 1.0;
    UniformGrid grid;
    std::vector<OscillatorState> samples;
};

/// Teager-Kaiser instantaneous energy (M/2)(xdot^2 - x * xddot).
inline double tk_energy(double x, double xdot, double xddot, double mass) {
    return 0.5 * mass * (xdot * xdot - x * xddot);
}

/// Stiffness from the phase: theta'^2 + (1/2) {theta; t}.
inline double omega_sq_from_phase_jet(const Jet3& j) {
    return j.v1 * j.v1 + 0.5 * schwarzian(j);
}

inline double omega_sq_from_phase(const PhaseExpr& phase, double t) {
    const Jet3 j = phase.jet(t);
    if (j.v1 <= 0.0) throw PhaseNotMonotone(t);
    return omega_sq_from_phase_jet(j);
}

namespace detail {

/// Amplitude jet rho = sqrt(l / theta') built from the phase jet. Only
/// v0..v2 are meaningful (the phase jet carries theta' through its third
/// derivative, i.e. two derivatives of theta').
inline Jet3 rho_jet_from_phase(const Jet3& theta, double l_tilde) {
    const Jet3 theta_dot{theta.v1, theta.v2, theta.v3, 0.0};
    return sqrt(Jet3::constant(l_tilde) / theta_dot);
}

struct ConstructedPoint {
    OscillatorState state;
    double xddot = 0.0;
    double rhodot = 0.0;
    double rhoddot = 0.0;
};

inline ConstructedPoint construct_point(const Jet3& theta, double t, double l_tilde,
                                        double mass) {
    if (theta.v1 <= 0.0) throw PhaseNotMonotone(t);
    const Jet3 rho = rho_jet_from_phase(theta, l_tilde);
    const Jet3 x = rho * cos(theta);  // v0..v2 valid
    ConstructedPoint p;
    p.state.t = t;
    p.state.x = x.v0;
    p.state.xdot = x.v1;
    p.state.rho = rho.v0;
    p.state.theta = theta.v0;
    p.state.omega_inst = theta.v1;
    p.state.omega_sq = omega_sq_from_phase_jet(theta);
    p.state.e_tk = tk_energy(x.v0, x.v1, x.v2, mass);
    p.xddot = x.v2;
    p.rhodot = rho.v1;
    p.rhoddot = rho.v2;
    return p;
}

}  // namespace detail

/// Sample an exact (Omega^2, solution) pair on a uniform grid. Throws
/// PhaseNotMonotone at the first grid point where theta' <= 0.
inline GeneratedPair generate_pair(const PhaseExpr& phase, double l_tilde, double mass,
                                   const UniformGrid& grid) {
    if (!(l_tilde > 0.0)) throw Error("l_tilde must be positive");
    if (!(mass > 0.0)) throw Error("mass must be positive");
    GeneratedPair pair{phase, l_tilde, mass, grid, {}};
    pair.samples.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.at(k);
        pair.samples[k] = detail::construct_point(phase.jet(t), t, l_tilde, mass).state;
    }
    return pair;
}

/// Ermakov-Pinney residual rho'' + Omega^2 rho - Ltilde^2 / rho^3 at t;
/// near-zero certifies the construction.
inline double ermakov_pinney_residual(const PhaseExpr& phase, double l_tilde, double t) {
    const Jet3 theta = phase.jet(t);
    if (theta.v1 <= 0.0) throw PhaseNotMonotone(t);
    const Jet3 rho = detail::rho_jet_from_phase(theta, l_tilde);
    const double omega_sq = omega_sq_from_phase_jet(theta);
    return rho.v2 + omega_sq * rho.v0 - l_tilde * l_tilde / (rho.v0 * rho.v0 * rho.v0);
}

/// Effective radial Hamiltonian P_rho^2/(2M) + (M/2) Omega^2 rho^2
/// + M Ltilde^2 / (2 rho^2).
inline double radial_energy(double rho, double rhodot, double omega_sq, double l_tilde,
                            double mass) {
    if (!(rho > 0.0)) throw NonpositiveAmplitude("rho must be positive");
    const double p_rho = mass * rhodot;
    return p_rho * p_rho / (2.0 * mass) + 0.5 * mass * omega_sq * rho * rho +
           mass * l_tilde * l_tilde / (2.0 * rho * rho);
}

/// Recover theta(t) = theta0 + Ltilde * integral dt / rho^2 from sampled
/// amplitudes (cumulative Simpson quadrature on the uniform grid).
inline std::vector<double> phase_from_amplitude(std::span<const double> rho_samples, double dt,
                                                double l_tilde, double theta0) {
    std::vector<double> integrand(rho_samples.size());
    for (std::size_t k = 0; k < rho_samples.size(); ++k) {
        if (!(rho_samples[k] > 0.0))
            throw NonpositiveAmplitude("rho <= 0 at sample " + std::to_string(k));
        integrand[k] = 1.0 / (rho_samples[k] * rho_samples[k]);
    }
    std::vector<double> theta = cumulative_simpson(integrand, dt);
    for (double& v : theta) v = theta0 + l_tilde * v;
    return theta;
}

// ---------------------------------------------------------------------------
// Self-diagnostics for constructed pairs
// ---------------------------------------------------------------------------

struct PairDiagnostics {
    double l_drift = 0.0;           ///< max |rho^2 theta' - Ltilde| / Ltilde
    double construction_residual = 0.0;  ///< max |x'' + Omega^2 x| / max |Omega^2 x|
    double ermakov_pinney = 0.0;    ///< max EP residual / max |Omega^2 rho|
    double tk_consistency = 0.0;    ///< max rel. diff of the two TK energy forms
};

/// Re-derives every jet along the pair's grid and reports the worst-case
/// violation of the structural identities the construction guarantees.
inline PairDiagnostics diagnose(const GeneratedPair& pair) {
    PairDiagnostics d;
    double max_omega_x = 0.0, max_resid = 0.0;
    double max_omega_rho = 0.0, max_ep = 0.0;
    for (std::size_t k = 0; k < pair.samples.size(); ++k) {
        const double t = pair.grid.at(k);
        const Jet3 theta = pair.phase.jet(t);
        const auto p = detail::construct_point(theta, t, pair.l_tilde, pair.mass);
        const auto& s = p.state;

        const double l_here = s.rho * s.rho * s.omega_inst;
        d.l_drift = std::max(d.l_drift, std::abs(l_here - pair.l_tilde) / pair.l_tilde);

        max_resid = std::max(max_resid, std::abs(p.xddot + s.omega_sq * s.x));
        max_omega_x = std::max(max_omega_x, std::abs(s.omega_sq * s.x));

        const double ep = p.rhoddot + s.omega_sq * s.rho -
                          pair.l_tilde * pair.l_tilde / (s.rho * s.rho * s.rho);
        max_ep = std::max(max_ep, std::abs(ep));
        max_omega_rho = std::max(max_omega_rho, std::abs(s.omega_sq * s.rho));

        const double tk_a = tk_energy(s.x, s.xdot, p.xddot, pair.mass);
        const double tk_b = 0.5 * pair.mass * (s.xdot * s.xdot + s.omega_sq * s.x * s.x);
        const double scale = std::max({std::abs(tk_a), std::abs(tk_b), 1e-300});
        d.tk_consistency = std::max(d.tk_consistency, std::abs(tk_a - tk_b) / scale);
    }
    d.construction_residual = max_omega_x > 0.0 ? max_resid / max_omega_x : max_resid;
    d.ermakov_pinney = max_omega_rho > 0.0 ? max_ep / max_omega_rho : max_ep;
    return d;
}

// ---------------------------------------------------------------------------
// Nondimensionalization and the TISE <-> TDHOE isomorphism
// ---------------------------------------------------------------------------

/// Characteristic scales tying the quantum (TISE) and classical (TDHOE)
/// sides of the dimensionless mapping together.
struct NondimScales {
    // quantum side
    double u0 = 1.0;      ///< characteristic energy U0
    double mass_q = 1.0;  ///< quantum mass m
    double hbar = 1.0;
    double x0 = 0.0;      ///< length scale hbar (2 m U0)^(-1/2)
    // classical side
    double v0 = 1.0;       ///< classical energy scale V0
    double l_action = 1.0; ///< exact invariant L (action)
    double mass_c = 1.0;   ///< classical mass M
    double nu = 0.0;       ///< frequency scale 2 V0 / L
    double r0 = 0.0;       ///< classical length scale sqrt(L / (M nu))

    static NondimScales make(double u0, double mass_q, double hbar, double v0, double l_action,
                             double mass_c) {
        NondimScales s;
        s.u0 = u0;
        s.mass_q = mass_q;
        s.hbar = hbar;
        s.x0 = hbar / std::sqrt(2.0 * mass_q * u0);
        s.v0 = v0;
        s.l_action = l_action;
        s.mass_c = mass_c;
        s.nu = 2.0 * v0 / l_action;
        s.r0 = std::sqrt(l_action / (mass_c * s.nu));
        return s;
    }

    static NondimScales dimensionless() { return make(1.0, 1.0, 1.0, 1.0, 1.0, 1.0); }
};

/// The isomorphism itself: a dimensionless potential and energy become the
/// stiffness of a dimensionless oscillator, Omega_bar^2(tbar) = Ebar - ubar.
inline std::function<double(double)> map_tise_to_tdhoe(const NondimScales&,
                                                       std::function<double(double)> u_bar,
                                                       double e_bar) {
    return [u_bar = std::move(u_bar), e_bar](double tbar) { return e_bar - u_bar(tbar); };
}

inline std::function<double(double)> map_tise_to_tdhoe(const NondimScales& scales,
                                                       const PhaseExpr& u_bar, double e_bar) {
    return map_tise_to_tdhoe(scales, [u_bar](double t) { return u_bar(t); }, e_bar);
}

/// Instantaneous energy of the classical analog,
/// E_TK(tbar) = V0 (Xbar'^2 + (Ebar - ubar) Xbar^2).
inline double classical_analog_energy(const NondimScales& scales, double e_bar, double u_bar_at_t,
                                      double xbar, double xbardot) {
    return scales.v0 * (xbardot * xbardot + (e_bar - u_bar_at_t) * xbar * xbar);
}

// ---------------------------------------------------------------------------
// Hermite validation pairs: Omega_n^2(t) = 2n + 1 - t^2 with the normalized
// Hermite functions as exact solutions.
// ---------------------------------------------------------------------------

class HermitePair {
public:
    explicit HermitePair(int n) : n_(n) {
        if (n < 0 || n > 12) throw Error("hermite_pair: n must be in [0, 12]");
        // physicists' Hermite polynomial coefficients via the recurrence
        // h_{k+1} = 2 t h_k - 2 k h_{k-1}
        std::vector<double> prev{1.0};
        std::vector<double> cur{0.0, 2.0};
        if (n == 0) {
            coeffs_ = prev;
        } else if (n == 1) {
            coeffs_ = cur;
        } else {
            for (int k = 1; k < n; ++k) {
                std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
                for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0 * cur[i];
                for (std::size_t i = 0; i < prev.size(); ++i)
                    next[i] -= 2.0 * static_cast<double>(k) * prev[i];
                prev = std::move(cur);
                cur = std::move(next);
            }
            coeffs_ = cur;
        }
        double fact = 1.0;
        for (int k = 2; k <= n; ++k) fact *= static_cast<double>(k);
        norm_ = std::pow(std::numbers::pi, -0.25) / std::sqrt(std::ldexp(fact, n));
    }

    int order() const { return n_; }

    double omega_sq(double t) const { return 2.0 * n_ + 1.0 - t * t; }

    /// H_n(t) = norm * exp(-t^2/2) * h_n(t)
    double value(double t) const { return norm_ * std::exp(-0.5 * t * t) * poly(t); }

    double deriv(double t) const {
        // h_n' = 2n h_{n-1} expressed through the stored coefficients
        return norm_ * std::exp(-0.5 * t * t) * (poly_deriv(t) - t * poly(t));
    }

    double second_deriv(double t) const {
        const double p = poly(t), p1 = poly_deriv(t), p2 = poly_second_deriv(t);
        return norm_ * std::exp(-0.5 * t * t) * (p2 - 2.0 * t * p1 + (t * t - 1.0) * p);
    }

private:
    int n_;
    std::vector<double> coeffs_;
    double norm_;

    double poly(double t) const {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * t + coeffs_[i];
        return acc;
    }
    double poly_deriv(double t) const {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 1;)
            acc = acc * t + static_cast<double>(i) * coeffs_[i];
        return acc;
    }
    double poly_second_deriv(double t) const {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 2;)
            acc = acc * t + static_cast<double>(i) * static_cast<double>(i - 1) * coeffs_[i];
        return acc;
    }
};

inline HermitePair hermite_pair(int n) { return HermitePair(n); }

}  // namespace oscmap
