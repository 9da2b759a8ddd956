#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oscmap/errors.hpp"
#include "oscmap/expr.hpp"
#include "oscmap/jet.hpp"
#include "oscmap/numeric.hpp"
#include "oscmap/tdho.hpp"

namespace oscmap {

// ---------------------------------------------------------------------------
// Inverse design of tunneling barriers with prescribed reflection coefficient
// and transmission phase shift.
//
// The design pins the asymptotics of a strictly increasing phase theta(x):
// an interpolating reflection profile sigma(x) rolls from sqrt(R) on the left
// to 0 on the right, a tanh ramp of width D carries the transmission phase
// shift, and the exact solution / barrier follow from the same phase-method
// identities used for the oscillator:
//     psi(x) = |A| sqrt((1-R)/theta') e^{i theta},
//     u(x)   = 1 - theta'^2 - (1/2){theta; x}.
// ---------------------------------------------------------------------------

struct BarrierDesign {
    double r_target = 0.0;     ///< R in [0, 1)
    double sigma0 = 0.0;       ///< sqrt(R)
    double delta_theta = 0.0;  ///< transmission phase shift (rad)
    double d = 2.0;            ///< sigma transition width
    double big_d = 2.0;        ///< phase-shift ramp width D
    std::optional<PhaseExpr> eta;  ///< small shaping term added to sigma
    double amp = 1.0;          ///< |A|
    double theta0 = 0.0;       ///< phase constant, wrapped into [0, 2*pi)

    /// Validated factory; throws MonotonicityViolated / Error when the
    /// parameters cannot yield a strictly increasing phase on
    /// [validate_lo, validate_hi].
    static BarrierDesign make(double r, double delta_theta, double d, double big_d,
                              std::optional<PhaseExpr> eta = std::nullopt, double amp = 1.0,
                              double theta0 = 0.0, double validate_lo = -20.0,
                              double validate_hi = 20.0);

    static BarrierDesign example1() { return make(0.2, 0.0, 2.0, 2.0); }
    static BarrierDesign example2() { return make(0.0, -std::numbers::pi, 2.0, 2.0); }
    static BarrierDesign example3() {
        return make(0.05, -std::numbers::pi / 2.0, 1.25, 1.5,
                    PhaseExpr::parse("0.1*exp(-(x+1)^2/(2*1.25^2))-0.15*exp(-(x-1)^2/(2*1.25^2))",
                                     "x"));
    }

    static std::optional<BarrierDesign> preset(std::string_view name) {
        if (name == "example1") return example1();
        if (name == "example2") return example2();
        if (name == "example3") return example3();
        return std::nullopt;
    }
};

/// sigma(x) = sigma0 (1 - tanh(x/d)) / 2 + eta(x).
inline double sigma_profile(const BarrierDesign& design, double x) {
    double s = design.sigma0 * 0.5 * (1.0 - std::tanh(x / design.d));
    if (design.eta) s += (*design.eta)(x);
    return s;
}

namespace detail {

inline std::int32_t build_sigma(ExprBuilder& b, const BarrierDesign& design) {
    // sigma0 * (1 - tanh(x/d)) / 2 [+ eta]
    std::int32_t s = -1;
    if (design.sigma0 != 0.0) {
        const auto ramp =
            b.sub(b.constant(1.0), b.call(FuncId::Tanh, b.div(b.var(), b.constant(design.d))));
        s = b.mul(b.constant(0.5 * design.sigma0), ramp);
    }
    if (design.eta) {
        const auto e = b.subexpr(*design.eta);
        s = s < 0 ? e : b.add(s, e);
    }
    return s;
}

}  // namespace detail

/// The design's phase function as a DSL expression: the globally smooth,
/// unwrapped equivalent of theta0 + arctan(((1-sigma)/(1+sigma)) tan x)
/// + delta_theta (1 + tanh(x/D)) / 2. The arctan form jumps branches at
/// x = pi/2 + k pi; rewriting it as
///     x + atan( (g-1) sin x cos x / (cos^2 x + g sin^2 x) ),
/// with g = (1-sigma)/(1+sigma), keeps it continuous (the denominator stays
/// positive for |sigma| < 1), which the construction needs for jets and for
/// the dtheta/dx > 0 constraint to be meaningful globally.
inline PhaseExpr phase_function(const BarrierDesign& design) {
    ExprBuilder b("x");
    std::int32_t acc = b.add(b.constant(design.theta0), b.var());

    const std::int32_t sigma = detail::build_sigma(b, design);
    if (sigma >= 0) {
        const auto g = b.div(b.sub(b.constant(1.0), sigma), b.add(b.constant(1.0), sigma));
        const auto sin_x = b.call(FuncId::Sin, b.var());
        const auto cos_x = b.call(FuncId::Cos, b.var());
        const auto num = b.mul(b.sub(g, b.constant(1.0)), b.mul(sin_x, cos_x));
        const auto den = b.add(b.mul(cos_x, cos_x), b.mul(g, b.mul(sin_x, sin_x)));
        acc = b.add(acc, b.call(FuncId::Atan, b.div(num, den)));
    }
    if (design.delta_theta != 0.0) {
        const auto ramp = b.add(
            b.constant(1.0), b.call(FuncId::Tanh, b.div(b.var(), b.constant(design.big_d))));
        acc = b.add(acc, b.mul(b.constant(0.5 * design.delta_theta), ramp));
    }
    return b.finish(acc);
}

inline BarrierDesign BarrierDesign::make(double r, double delta_theta, double d, double big_d,
                                         std::optional<PhaseExpr> eta, double amp, double theta0,
                                         double validate_lo, double validate_hi) {
    if (!(r >= 0.0 && r < 1.0)) throw Error("reflection coefficient must be in [0, 1)");
    if (!(d > 0.0) || !(big_d > 0.0)) throw Error("widths d and D must be positive");
    if (!(amp > 0.0)) throw Error("|A| must be positive");
    BarrierDesign design;
    design.r_target = r;
    design.sigma0 = std::sqrt(r);
    design.delta_theta = delta_theta;
    design.d = d;
    design.big_d = big_d;
    design.eta = std::move(eta);
    design.amp = amp;
    const double two_pi = 2.0 * std::numbers::pi;
    design.theta0 = theta0 - two_pi * std::floor(theta0 / two_pi);

    const PhaseExpr theta = phase_function(design);
    const double step = 2e-3;
    const auto n = static_cast<std::size_t>(std::ceil((validate_hi - validate_lo) / step));
    for (std::size_t k = 0; k <= n; ++k) {
        const double x = std::min(validate_lo + static_cast<double>(k) * step, validate_hi);
        const double s = sigma_profile(design, x);
        if (!(std::abs(s) < 1.0))
            throw Error("|sigma| >= 1 at x = " + std::to_string(x) +
                        " (eta too large for this design)");
        if (!(theta.jet(x).v1 > 0.0)) throw MonotonicityViolated(x);
    }
    return design;
}

/// Synthesized exact tunneling solution on a grid.
struct TunnelSolution {
    BarrierDesign design;
    UniformGrid grid;
    std::vector<double> x;
    std::vector<double> re_psi, im_psi;
    std::vector<double> density;       ///< |psi|^2 = |A|^2 (1-R) / theta'
    std::vector<double> theta;         ///< unwrapped phase
    std::vector<double> u_bar;         ///< barrier profile
    std::vector<double> omega_bar_sq;  ///< 1 - u_bar (classical-analog stiffness)

    std::complex<double> psi(std::size_t i) const { return {re_psi[i], im_psi[i]}; }
};

inline TunnelSolution synthesize(const BarrierDesign& design, const UniformGrid& grid) {
    const PhaseExpr phase = phase_function(design);
    const double flux = design.amp * design.amp * (1.0 - design.r_target);
    TunnelSolution sol;
    sol.design = design;
    sol.grid = grid;
    const std::size_t n = grid.size();
    sol.x.resize(n);
    sol.re_psi.resize(n);
    sol.im_psi.resize(n);
    sol.density.resize(n);
    sol.theta.resize(n);
    sol.u_bar.resize(n);
    sol.omega_bar_sq.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = grid.at(k);
        const Jet3 j = phase.jet(x);
        if (!(j.v1 > 0.0)) throw MonotonicityViolated(x);
        const double dens = flux / j.v1;
        const double rho = std::sqrt(dens);
        const double ub = 1.0 - j.v1 * j.v1 - 0.5 * schwarzian(j);
        sol.x[k] = x;
        sol.theta[k] = j.v0;
        sol.density[k] = dens;
        sol.re_psi[k] = rho * std::cos(j.v0);
        sol.im_psi[k] = rho * std::sin(j.v0);
        sol.u_bar[k] = ub;
        sol.omega_bar_sq[k] = 1.0 - ub;
    }
    return sol;
}

/// The same solution read as a pair of classical trajectories in a
/// time-dependent harmonic potential (grid coordinate plays the time role).
struct ClassicalAnalog {
    std::vector<double> t;           ///< = solution grid
    std::vector<double> x1, x2;      ///< Re psi, Im psi
    std::vector<double> stiffness;   ///< V0 * Omega_bar^2
    std::vector<double> potential;   ///< V = V0 * Omega_bar^2 * x1^2 along trajectory 1
    std::vector<double> turning_points;  ///< zeros of Omega_bar^2
};

inline ClassicalAnalog classical_analog(const TunnelSolution& sol, const NondimScales& scales) {
    ClassicalAnalog out;
    out.t = sol.x;
    out.x1 = sol.re_psi;
    out.x2 = sol.im_psi;
    const std::size_t n = sol.x.size();
    out.stiffness.resize(n);
    out.potential.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.stiffness[k] = scales.v0 * sol.omega_bar_sq[k];
        out.potential[k] = out.stiffness[k] * sol.re_psi[k] * sol.re_psi[k];
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double a = sol.omega_bar_sq[k - 1], b = sol.omega_bar_sq[k];
        if (a == 0.0) out.turning_points.push_back(sol.x[k - 1]);
        if ((a < 0.0) != (b < 0.0) && a != 0.0 && b != 0.0)
            out.turning_points.push_back(sol.x[k - 1] + (sol.x[k] - sol.x[k - 1]) * a / (a - b));
    }
    return out;
}

}  // namespace oscmap
