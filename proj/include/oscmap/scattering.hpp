#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "oscmap/errors.hpp"
#include "oscmap/numeric.hpp"
#include "oscmap/ode.hpp"

namespace oscmap {

/// Measured scattering quantities, recovered from a barrier by direct
/// integration rather than from the design that produced it.
struct ScatteringReport {
    double r_extracted = 0.0;            ///< reflection coefficient |B/A|^2
    double sigma0_extracted = 0.0;       ///< Re(B/A)
    double phase_shift_extracted = 0.0;  ///< transmitted-side phase convention, in [-pi, pi)
    double fit_residual = 0.0;           ///< scaled RMS misfit of the asymptotic decomposition
};

struct ScatteringOptions {
    OdeTolerance ode{1e-10, 1e-12};
    /// |u_bar| allowed at the domain edges before the asymptotic
    /// decomposition is considered meaningless.
    double edge_flatness = 1e-6;
    /// Fraction of the domain (left side) used for the asymptotic fit.
    double fit_window_fraction = 0.1;
    std::size_t fit_points = 256;
    double max_fit_residual = 1e-4;
};

/// Extract (R, sigma0, delta_theta) from a barrier u_bar at unit dimensionless
/// energy. Integrates psi'' = (u_bar - 1) psi from the right edge with the
/// pure transmitted wave e^{i x} as boundary condition, then least-squares
/// fits the left asymptotic window against A e^{i x} + B e^{-i x}.
///
/// With the transmitted wave pinned to amplitude 1 and zero phase offset, the
/// fitted A equals e^{-i delta_theta} / sqrt(1 - R), so the transmission
/// phase shift is -arg(A) and R = |B/A|^2.
inline ScatteringReport extract_reflection(const std::function<double(double)>& u_bar,
                                           double x_left, double x_right,
                                           const ScatteringOptions& opt = {}) {
    if (!(x_right > x_left)) throw Error("extract_reflection: need x_right > x_left");
    const double ul = u_bar(x_left), ur = u_bar(x_right);
    if (std::abs(ul) > opt.edge_flatness || std::abs(ur) > opt.edge_flatness)
        throw FitResidualTooLarge(std::max(std::abs(ul), std::abs(ur)),
                                  "domain edges are not asymptotically free");

    const double span = x_right - x_left;
    const double window_hi = x_left + opt.fit_window_fraction * span;
    const std::size_t n = std::max<std::size_t>(opt.fit_points, 64);

    // integration runs right -> left; samples must be descending
    std::vector<double> pts(n);
    const double dw = (window_hi - x_left) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = window_hi - dw * static_cast<double>(i);
    pts.back() = x_left;

    const std::complex<double> i_unit(0.0, 1.0);
    const std::complex<double> psi_r = std::exp(i_unit * x_right);
    auto omega_sq = [&u_bar](double x) { return 1.0 - u_bar(x); };
    const auto run = integrate_tdhoe_complex(omega_sq, psi_r, i_unit * psi_r,
                                             {x_right, x_left}, opt.ode, pts);

    // normal equations for min || psi - A e^{ix} - B e^{-ix} ||
    std::complex<double> s_uv = 0.0, rhs_a = 0.0, rhs_b = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::complex<double> em = std::exp(-i_unit * run.grid[j]);  // conj(e^{ix})
        const std::complex<double> psi = run.psi(j);
        s_uv += em * em;
        rhs_a += em * psi;
        rhs_b += std::conj(em) * psi;
    }
    const auto nn = static_cast<double>(n);
    const std::complex<double> det = nn * nn - s_uv * std::conj(s_uv);
    const std::complex<double> a_fit = (nn * rhs_a - s_uv * rhs_b) / det;
    const std::complex<double> b_fit = (nn * rhs_b - std::conj(s_uv) * rhs_a) / det;

    double misfit = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::complex<double> ep = std::exp(i_unit * run.grid[j]);
        misfit += std::norm(run.psi(j) - a_fit * ep - b_fit / ep);
    }
    ScatteringReport rep;
    rep.fit_residual = std::sqrt(misfit / nn) / std::abs(a_fit);
    if (rep.fit_residual > opt.max_fit_residual)
        throw FitResidualTooLarge(rep.fit_residual, "asymptotic decomposition does not fit");

    const std::complex<double> ratio = b_fit / a_fit;
    rep.r_extracted = std::norm(ratio);
    rep.sigma0_extracted = ratio.real();
    rep.phase_shift_extracted = -std::arg(a_fit);
    return rep;
}

/// Ratio of the time spent inside the phase windows [theta1, theta1+dtheta]
/// and [theta2, theta2+dtheta] by a complex-valued run with monotone phase.
/// Implements the trajectory-probability reading of the sampled solution.
inline double dwell_time_ratio(const IntegrationResult& result, double theta1, double theta2,
                               double dtheta = 1e-3) {
    if (!result.complex_valued) throw Error("dwell_time_ratio needs a complex-valued run");
    if (result.grid.size() < 4) throw Error("dwell_time_ratio: run too short");
    if (!(dtheta > 0.0)) throw Error("dwell_time_ratio: dtheta must be positive");

    const std::size_t n = result.grid.size();
    std::vector<double> theta(n), theta_dot(n);
    double prev = std::atan2(result.y2[0], result.y[0]);
    theta[0] = prev;
    for (std::size_t k = 0; k < n; ++k) {
        const double re = result.y[k], im = result.y2[k];
        const double rho_sq = re * re + im * im;
        if (rho_sq == 0.0) throw Error("dwell_time_ratio: amplitude vanished");
        // exact phase rate from the state itself
        theta_dot[k] = wronskian(re, result.ydot[k], im, result.y2dot[k]) / rho_sq;
        if (k > 0) {
            const double raw = std::atan2(im, re);
            theta[k] = theta[k - 1] + wrap_angle(raw - prev);
            prev = raw;
        }
    }
    for (std::size_t k = 1; k < n; ++k)
        if (theta[k] <= theta[k - 1])
            throw Error("dwell_time_ratio: phase is not monotone over the run");

    // invert theta(t) by cubic Hermite on the bracketing interval
    auto time_at = [&](double target) {
        if (target < theta.front() || target > theta.back())
            throw PhaseWindowNotFound("phase " + std::to_string(target) +
                                      " outside the sampled range");
        const auto it = std::lower_bound(theta.begin(), theta.end(), target);
        std::size_t k = static_cast<std::size_t>(it - theta.begin());
        if (k > 0) --k;
        k = std::min(k, n - 2);
        const double t0 = result.grid[k], t1 = result.grid[k + 1];
        const double h = t1 - t0;
        const double y0 = theta[k], y1 = theta[k + 1];
        const double m0 = theta_dot[k] * h, m1 = theta_dot[k + 1] * h;
        double s = (target - y0) / (y1 - y0);
        for (int it2 = 0; it2 < 20; ++it2) {
            const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
            const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
            const double val = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
            const double d00 = 6 * s * (s - 1), d10 = (1 - s) * (1 - 3 * s);
            const double d01 = 6 * s * (1 - s), d11 = s * (3 * s - 2);
            const double dv = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
            if (dv == 0.0) break;
            const double step = (val - target) / dv;
            s -= step;
            if (std::abs(step) < 1e-15) break;
        }
        s = std::clamp(s, 0.0, 1.0);
        return t0 + s * h;
    };

    const double tau1 = time_at(theta1 + dtheta) - time_at(theta1);
    const double tau2 = time_at(theta2 + dtheta) - time_at(theta2);
    if (tau2 == 0.0) throw Error("dwell_time_ratio: degenerate second window");
    return tau1 / tau2;
}

}  // namespace oscmap
