#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "oscmap/errors.hpp"
#include "oscmap/expr.hpp"
#include "oscmap/numeric.hpp"
#include "oscmap/tdho.hpp"

namespace oscmap {

// ---------------------------------------------------------------------------
// Reaction of a macroscopic oscillator to a Gaussian parametric phase
// perturbation, and the conjectured range relations
//     (2/L) * dE_TK * T  >= 1   and   (2/L) * dX * dP >= 1
// for the per-T phase averages.
// ---------------------------------------------------------------------------

/// Smallest admissible perturbation time for theta' > 0 everywhere:
/// (a / omega0) * sqrt(2/e).
inline double t_min(double a, double omega0) {
    if (!(a >= 0.0) || !(omega0 > 0.0)) throw Error("t_min: need a >= 0 and omega0 > 0");
    return a / omega0 * std::sqrt(2.0 / std::numbers::e);
}

/// Parameters of one perturbed run: theta(t) = theta0 + omega0 t
/// + a exp(-t^2/T^2).
struct PerturbationSpec {
    double theta0 = 0.0;
    double omega0 = 10.0 * std::numbers::pi;  ///< 5 Hz reference oscillator
    double a = 1.0;                           ///< perturbation amplitude (rad)
    double t_cap = 0.0;                       ///< characteristic time T
    double mass = 0.1;
    double rho0 = 0.01;

    static PerturbationSpec make(double theta0, double omega0, double a, double t_cap,
                                 double mass = 0.1, double rho0 = 0.01) {
        if (!(mass > 0.0) || !(rho0 > 0.0)) throw Error("mass and rho0 must be positive");
        if (!(a >= 0.0)) throw Error("perturbation amplitude a must be >= 0");
        if (a != 0.0 && !(t_cap > t_min(a, omega0)))
            throw Error("T must exceed T_min = (a/omega0) sqrt(2/e) to keep theta' > 0");
        if (!(t_cap > 0.0)) throw Error("T must be positive");
        return {theta0, omega0, a, t_cap, mass, rho0};
    }

    double l_tilde() const { return rho0 * rho0 * omega0; }
    double l_invariant() const { return mass * l_tilde(); }
};

/// The perturbation law as a DSL expression.
inline PhaseExpr gaussian_phase_expr(const PerturbationSpec& spec) {
    ExprBuilder b("t");
    auto acc = b.add(b.constant(spec.theta0), b.mul(b.constant(spec.omega0), b.var()));
    if (spec.a != 0.0) {
        const auto t_sq = b.mul(b.var(), b.var());
        const auto gauss =
            b.call(FuncId::Exp, b.neg(b.div(t_sq, b.constant(spec.t_cap * spec.t_cap))));
        acc = b.add(acc, b.mul(b.constant(spec.a), gauss));
    }
    return b.finish(acc);
}

struct PerturbedTrajectory {
    GeneratedPair pair;
    std::vector<double> x_ref;  ///< unperturbed rho0 cos(theta0 + omega0 t)
    std::vector<double> p_ref;  ///< -M rho0 omega0 sin(theta0 + omega0 t)
};

inline PerturbedTrajectory perturbed_trajectory(const PerturbationSpec& spec,
                                                const UniformGrid& grid) {
    PerturbedTrajectory out;
    out.pair = generate_pair(gaussian_phase_expr(spec), spec.l_tilde(), spec.mass, grid);
    const std::size_t n = grid.size();
    out.x_ref.resize(n);
    out.p_ref.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ph = spec.theta0 + spec.omega0 * grid.at(k);
        out.x_ref[k] = spec.rho0 * std::cos(ph);
        out.p_ref[k] = -spec.mass * spec.rho0 * spec.omega0 * std::sin(ph);
    }
    return out;
}

struct RangeTriple {
    double delta_e_tk = 0.0;
    double delta_x = 0.0;
    double delta_p = 0.0;
};

/// Extrema-based ranges over the sampled window: the TK-energy range and the
/// position/momentum ranges of the deviation from the reference motion.
inline RangeTriple ranges(const GeneratedPair& pair, std::span<const double> x_ref,
                          std::span<const double> p_ref) {
    const std::size_t n = pair.samples.size();
    if (x_ref.size() != n || p_ref.size() != n)
        throw GridMismatch("reference tracks do not match the pair grid");
    double e_lo = pair.samples[0].e_tk, e_hi = e_lo;
    double x_lo = pair.samples[0].x - x_ref[0], x_hi = x_lo;
    const double p0 = pair.mass * pair.samples[0].xdot - p_ref[0];
    double p_lo = p0, p_hi = p0;
    for (std::size_t k = 1; k < n; ++k) {
        const auto& s = pair.samples[k];
        e_lo = std::min(e_lo, s.e_tk);
        e_hi = std::max(e_hi, s.e_tk);
        const double dx = s.x - x_ref[k];
        x_lo = std::min(x_lo, dx);
        x_hi = std::max(x_hi, dx);
        const double dp = pair.mass * s.xdot - p_ref[k];
        p_lo = std::min(p_lo, dp);
        p_hi = std::max(p_hi, dp);
    }
    return {e_hi - e_lo, x_hi - x_lo, p_hi - p_lo};
}

struct RangeCell {
    double theta0 = 0.0;
    double t_cap = 0.0;
    double delta_e_tk = 0.0;
    double delta_x = 0.0;
    double delta_p = 0.0;
    double norm_energy_product = 0.0;  ///< (2/L) dE_TK T
    double norm_xp_product = 0.0;      ///< (2/L) dX dP
};

struct RangeSummaryRow {
    double t_cap = 0.0;
    double delta_e_tk = 0.0;  ///< phase-averaged
    double delta_x = 0.0;
    double delta_p = 0.0;
    double norm_energy_product = 0.0;
    double norm_xp_product = 0.0;
};

struct RangeExperimentResult {
    std::vector<double> theta0_values;
    std::vector<double> t_values;
    std::vector<RangeCell> cells;  ///< T-major: cells[ti * n_theta + pi]
    std::vector<RangeSummaryRow> summary;
    double l_invariant = 0.0;
    double max_l_drift = 0.0;
    double min_cell_norm_energy = 0.0;
    double min_cell_norm_xp = 0.0;
    bool inequalities_hold = false;  ///< both averaged products >= 1 for every T

    const RangeCell& cell(std::size_t ti, std::size_t pi) const {
        return cells[ti * theta0_values.size() + pi];
    }
};

struct ExperimentConfig {
    double omega0 = 10.0 * std::numbers::pi;
    double a = 1.0;
    double mass = 0.1;
    double rho0 = 0.01;
    double theta0_step = std::numbers::pi / 180.0;  ///< 1 degree
    double t_lo_mult = 1.2;   ///< in units of T_min
    double t_hi_mult = 4.0;
    double t_step_mult = 0.1;
    double window_mult = 6.0;   ///< evaluation window [-w T, w T]
    double dt_divisor = 4000.0; ///< dt = T / dt_divisor

    void validate() const {
        if (!(theta0_step > 0.0) || !(t_step_mult > 0.0)) throw Error("grid steps must be positive");
        if (!(t_lo_mult > 1.0)) throw Error("T grid must start strictly above T_min");
        if (!(t_hi_mult >= t_lo_mult)) throw Error("empty T grid");
        if (!(window_mult >= 6.0)) throw Error("window must cover at least [-6T, 6T]");
        if (!(dt_divisor >= 16.0)) throw Error("dt divisor too coarse");
    }
};

namespace detail {

struct CellOutcome {
    RangeTriple r;
    double l_drift = 0.0;
};

/// Streaming variant of perturbed_trajectory + ranges that never stores the
/// samples; the hot path of the full-grid experiment.
inline CellOutcome cell_ranges(const PerturbationSpec& spec, const UniformGrid& grid) {
    const PhaseExpr phase = gaussian_phase_expr(spec);
    const double l_tilde = spec.l_tilde();
    CellOutcome out;
    double e_lo = 0.0, e_hi = 0.0, x_lo = 0.0, x_hi = 0.0, p_lo = 0.0, p_hi = 0.0;
    const std::size_t n = grid.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.at(k);
        const auto p = construct_point(phase.jet(t), t, l_tilde, spec.mass);
        const double ph = spec.theta0 + spec.omega0 * t;
        const double dx = p.state.x - spec.rho0 * std::cos(ph);
        const double dp = spec.mass * (p.state.xdot + spec.rho0 * spec.omega0 * std::sin(ph));
        const double drift =
            std::abs(p.state.rho * p.state.rho * p.state.omega_inst - l_tilde) / l_tilde;
        out.l_drift = std::max(out.l_drift, drift);
        if (k == 0) {
            e_lo = e_hi = p.state.e_tk;
            x_lo = x_hi = dx;
            p_lo = p_hi = dp;
        } else {
            e_lo = std::min(e_lo, p.state.e_tk);
            e_hi = std::max(e_hi, p.state.e_tk);
            x_lo = std::min(x_lo, dx);
            x_hi = std::max(x_hi, dx);
            p_lo = std::min(p_lo, dp);
            p_hi = std::max(p_hi, dp);
        }
    }
    out.r = {e_hi - e_lo, x_hi - x_lo, p_hi - p_lo};
    return out;
}

}  // namespace detail

/// Full (theta0, T) sweep. Cells are computed concurrently into fixed slots;
/// the phase averages are a deterministic ordered fold afterwards, so
/// repeated runs produce bitwise-identical tables.
inline RangeExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RangeExperimentResult res;

    const double two_pi = 2.0 * std::numbers::pi;
    const auto n_theta =
        static_cast<std::size_t>(std::floor(two_pi / cfg.theta0_step - 1e-9)) + 1;
    for (std::size_t i = 0; i < n_theta; ++i)
        res.theta0_values.push_back(static_cast<double>(i) * cfg.theta0_step);

    const double tmin = t_min(cfg.a, cfg.omega0);
    const auto n_t =
        static_cast<std::size_t>(std::llround((cfg.t_hi_mult - cfg.t_lo_mult) / cfg.t_step_mult)) +
        1;
    for (std::size_t i = 0; i < n_t; ++i)
        res.t_values.push_back(tmin * (cfg.t_lo_mult + static_cast<double>(i) * cfg.t_step_mult));

    const double l_inv = cfg.mass * cfg.rho0 * cfg.rho0 * cfg.omega0;
    res.l_invariant = l_inv;
    res.cells.resize(n_t * n_theta);
    std::vector<double> drifts(res.cells.size(), 0.0);

    parallel_for(res.cells.size(), [&](std::size_t idx) {
        const std::size_t ti = idx / n_theta;
        const std::size_t pi = idx % n_theta;
        const double t_cap = res.t_values[ti];
        const auto spec = PerturbationSpec::make(res.theta0_values[pi], cfg.omega0, cfg.a, t_cap,
                                                 cfg.mass, cfg.rho0);
        const UniformGrid grid(-cfg.window_mult * t_cap, cfg.window_mult * t_cap,
                               t_cap / cfg.dt_divisor);
        const auto cell = detail::cell_ranges(spec, grid);
        RangeCell& out = res.cells[idx];
        out.theta0 = spec.theta0;
        out.t_cap = t_cap;
        out.delta_e_tk = cell.r.delta_e_tk;
        out.delta_x = cell.r.delta_x;
        out.delta_p = cell.r.delta_p;
        out.norm_energy_product = 2.0 / l_inv * cell.r.delta_e_tk * t_cap;
        out.norm_xp_product = 2.0 / l_inv * cell.r.delta_x * cell.r.delta_p;
        drifts[idx] = cell.l_drift;
    });

    res.max_l_drift = *std::max_element(drifts.begin(), drifts.end());
    res.min_cell_norm_energy = res.cells[0].norm_energy_product;
    res.min_cell_norm_xp = res.cells[0].norm_xp_product;
    res.inequalities_hold = true;
    for (std::size_t ti = 0; ti < n_t; ++ti) {
        CompensatedSum se, sx, sp;
        for (std::size_t pi = 0; pi < n_theta; ++pi) {
            const RangeCell& c = res.cells[ti * n_theta + pi];
            se.add(c.delta_e_tk);
            sx.add(c.delta_x);
            sp.add(c.delta_p);
            res.min_cell_norm_energy = std::min(res.min_cell_norm_energy, c.norm_energy_product);
            res.min_cell_norm_xp = std::min(res.min_cell_norm_xp, c.norm_xp_product);
        }
        RangeSummaryRow row;
        row.t_cap = res.t_values[ti];
        const auto nth = static_cast<double>(n_theta);
        row.delta_e_tk = se.value() / nth;
        row.delta_x = sx.value() / nth;
        row.delta_p = sp.value() / nth;
        row.norm_energy_product = 2.0 / l_inv * row.delta_e_tk * row.t_cap;
        row.norm_xp_product = 2.0 / l_inv * row.delta_x * row.delta_p;
        if (row.norm_energy_product < 1.0 || row.norm_xp_product < 1.0)
            res.inequalities_hold = false;
        res.summary.push_back(row);
    }
    return res;
}

}  // namespace oscmap
