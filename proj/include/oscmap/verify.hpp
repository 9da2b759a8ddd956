#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "oscmap/errors.hpp"
#include "oscmap/expr.hpp"
#include "oscmap/io.hpp"
#include "oscmap/numeric.hpp"
#include "oscmap/ode.hpp"

namespace oscmap {

// ---------------------------------------------------------------------------
// Independent replay of serialized solutions through the adaptive integrator.
// A file passes when the integrated trajectory reproduces its own samples and
// the structural identities hold on the stored columns.
// ---------------------------------------------------------------------------

struct VerifyThresholds {
    double replay = 1e-6;        ///< scaled max-norm deviation of the replay
    double l_drift = 1e-10;      ///< exact-invariant drift (pairs)
    double polar = 1e-10;        ///< |x - rho cos theta| consistency (pairs)
    double tk = 1e-8;            ///< TK-energy consistency (pairs)
    double density = 1e-10;      ///< |psi|^2 vs density column (tunnel)
    double wronskian = 1e-8;     ///< Wronskian drift (tunnel)
    OdeTolerance ode{1e-10, 1e-12};
};

struct PairVerifyReport {
    double replay_deviation = 0.0;  ///< max |x_replay - x| / max |x|
    double worst_t = 0.0;
    double l_drift = 0.0;
    double polar_consistency = 0.0;
    double tk_consistency = 0.0;
    std::size_t steps_taken = 0;
    bool pass = false;
};

inline PairVerifyReport verify_pair(const LoadedPair& lp, const VerifyThresholds& thr = {}) {
    const auto& t = lp.table.column("t");
    const auto& x = lp.table.column("x");
    const auto& xdot = lp.table.column("xdot");
    const auto& rho = lp.table.column("rho");
    const auto& theta = lp.table.column("theta");
    const auto& omega_inst = lp.table.column("omega_inst");
    const auto& omega_sq = lp.table.column("omega_sq");
    const auto& e_tk = lp.table.column("e_tk");
    const std::size_t n = t.size();
    const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);

    PairVerifyReport rep;

    // exact invariant: rho^2 theta' must be constant across the table
    const double l_tilde = lp.has_metadata ? lp.l_tilde : rho[0] * rho[0] * omega_inst[0];
    for (std::size_t k = 0; k < n; ++k) {
        rep.l_drift = std::max(
            rep.l_drift, std::abs(rho[k] * rho[k] * omega_inst[k] - l_tilde) / l_tilde);
    }

    // polar decomposition consistency
    double max_x = 0.0;
    for (std::size_t k = 0; k < n; ++k) max_x = std::max(max_x, std::abs(x[k]));
    const double x_scale = max_x > 0.0 ? max_x : 1.0;
    for (std::size_t k = 0; k < n; ++k)
        rep.polar_consistency =
            std::max(rep.polar_consistency, std::abs(x[k] - rho[k] * std::cos(theta[k])) / x_scale);

    // TK energy vs (m/2)(xdot^2 + Omega^2 x^2) with the mass fitted when the
    // table does not carry it
    {
        double mass = lp.mass;
        std::vector<double> per_unit(n);
        for (std::size_t k = 0; k < n; ++k)
            per_unit[k] = 0.5 * (xdot[k] * xdot[k] + omega_sq[k] * x[k] * x[k]);
        if (!lp.has_metadata) {
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                num += e_tk[k] * per_unit[k];
                den += per_unit[k] * per_unit[k];
            }
            mass = den > 0.0 ? num / den : 1.0;
        }
        double max_e = 0.0;
        for (std::size_t k = 0; k < n; ++k) max_e = std::max(max_e, std::abs(e_tk[k]));
        const double e_scale = max_e > 0.0 ? max_e : 1.0;
        for (std::size_t k = 0; k < n; ++k)
            rep.tk_consistency =
                std::max(rep.tk_consistency, std::abs(e_tk[k] - mass * per_unit[k]) / e_scale);
    }

    // replay through the integrator from the first sample
    std::function<double(double)> stiffness;
    if (lp.has_metadata && !lp.phase_source.empty()) {
        const PhaseExpr phase = PhaseExpr::parse(lp.phase_source, lp.variable);
        stiffness = [phase](double tt) { return omega_sq_from_phase_jet(phase.jet(tt)); };
    } else {
        stiffness = SampledFunction(t.front(), dt, omega_sq);
    }
    const auto run =
        integrate_tdhoe(stiffness, x[0], xdot[0], {t.front(), t.back()}, thr.ode, t);
    rep.steps_taken = run.steps_taken;
    rep.worst_t = t.front();
    for (std::size_t k = 0; k < n; ++k) {
        const double dev = std::abs(run.y[k] - x[k]) / x_scale;
        if (dev > rep.replay_deviation) {
            rep.replay_deviation = dev;
            rep.worst_t = t[k];
        }
    }

    rep.pass = rep.replay_deviation < thr.replay && rep.l_drift < thr.l_drift &&
               rep.polar_consistency < thr.polar && rep.tk_consistency < thr.tk;
    return rep;
}

struct TunnelVerifyReport {
    double replay_deviation = 0.0;  ///< max |psi_replay - psi| / max |psi|
    double worst_x = 0.0;
    double wronskian_value = 0.0;   ///< flux |A|^2 (1 - R) measured at the start
    double wronskian_drift = 0.0;
    double density_consistency = 0.0;
    std::size_t steps_taken = 0;
    bool pass = false;
};

inline TunnelVerifyReport verify_tunnel(const CsvTable& table, const VerifyThresholds& thr = {}) {
    const auto& x = table.column("x");
    const auto& re = table.column("re_psi");
    const auto& im = table.column("im_psi");
    const auto& density = table.column("density");
    const auto& u_bar = table.column("u_bar");
    const std::size_t n = x.size();
    const double dx = (x.back() - x.front()) / static_cast<double>(n - 1);

    TunnelVerifyReport rep;

    double max_density = 0.0;
    for (double v : density) max_density = std::max(max_density, v);
    for (std::size_t k = 0; k < n; ++k)
        rep.density_consistency = std::max(
            rep.density_consistency,
            std::abs(re[k] * re[k] + im[k] * im[k] - density[k]) / max_density);

    // initial derivative from a one-sided stencil on the leading samples
    const double re_dot0 = forward_derivative(std::span(re).first(7), dx);
    const double im_dot0 = forward_derivative(std::span(im).first(7), dx);
    rep.wronskian_value = wronskian(re[0], re_dot0, im[0], im_dot0);

    SampledFunction u_interp(x.front(), dx, u_bar);
    auto stiffness = [&u_interp](double xx) { return 1.0 - u_interp(xx); };
    const auto run = integrate_tdhoe_complex(stiffness, {re[0], im[0]}, {re_dot0, im_dot0},
                                             {x.front(), x.back()}, thr.ode, x);
    rep.steps_taken = run.steps_taken;
    rep.wronskian_drift = run.wronskian_drift;

    double max_psi = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        max_psi = std::max(max_psi, std::abs(run.psi(k)));
    rep.worst_x = x.front();
    for (std::size_t k = 0; k < n; ++k) {
        const double dev = std::abs(run.psi(k) - std::complex<double>(re[k], im[k])) / max_psi;
        if (dev > rep.replay_deviation) {
            rep.replay_deviation = dev;
            rep.worst_x = x[k];
        }
    }

    rep.pass = rep.replay_deviation < thr.replay && rep.density_consistency < thr.density &&
               rep.wronskian_drift < thr.wronskian;
    return rep;
}

}  // namespace oscmap
