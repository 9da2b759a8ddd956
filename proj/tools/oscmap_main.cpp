// Command-line front end: generates exact oscillator pairs from phase
// functions, synthesizes tunneling barriers, runs the range-relations sweep,
// and replays serialized solutions through the independent integrator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oscmap/oscmap.hpp"

namespace {

// exit codes are part of the CLI contract
constexpr int kOk = 0;
constexpr int kUsage = 2;       // flag/expression parse errors
constexpr int kMonotone = 3;    // theta' <= 0 somewhere
constexpr int kIo = 4;
constexpr int kVerifyTarget = 5;  // --verify extraction missed the design target
constexpr int kRangeViolation = 6;
constexpr int kVerifyFailed = 7;

using oscmap::fmt;

void write_text_file(const std::string& path, const std::string& body) {
    oscmap::write_file(path, body);
    std::cout << "wrote " << path << "\n";
}

// ---------------------------------------------------------------------------
// pair-gen
// ---------------------------------------------------------------------------

struct PairGenArgs {
    std::string phase;
    std::string var = "t";
    std::string preset;
    double ltilde = 1.0;
    double mass = 1.0;
    double t0 = 0.0, t1 = 1.0, dt = 1e-3;
    bool grid_given = false;
    // gaussian preset parameters
    double theta0 = 0.0;
    double omega0 = 10.0 * std::numbers::pi;
    double a = 1.0;
    double t_cap = 0.0;
    double rho0 = 0.01;
    std::string out = "pair.csv";
    std::string format = "csv";
};

int cmd_pair_gen(const PairGenArgs& args) {
    oscmap::PhaseExpr phase;
    double ltilde = args.ltilde;
    double mass = args.mass;
    oscmap::UniformGrid grid(0.0, 1.0, 1e-3);

    if (args.preset == "gaussian") {
        const double t_cap =
            args.t_cap > 0.0 ? args.t_cap : 2.0 * oscmap::t_min(args.a, args.omega0);
        const auto spec = oscmap::PerturbationSpec::make(args.theta0, args.omega0, args.a, t_cap,
                                                         args.mass, args.rho0);
        phase = oscmap::gaussian_phase_expr(spec);
        ltilde = spec.l_tilde();
        mass = spec.mass;
        grid = args.grid_given
                   ? oscmap::UniformGrid(args.t0, args.t1, args.dt)
                   : oscmap::UniformGrid(-6.0 * t_cap, 6.0 * t_cap, t_cap / 4000.0);
    } else if (!args.preset.empty()) {
        std::cerr << "error: unknown preset '" << args.preset << "'\n";
        return kUsage;
    } else {
        if (args.phase.empty()) {
            std::cerr << "error: --phase or --preset is required\n";
            return kUsage;
        }
        phase = oscmap::PhaseExpr::parse(args.phase, args.var);
        grid = oscmap::UniformGrid(args.t0, args.t1, args.dt);
    }

    const auto pair = oscmap::generate_pair(phase, ltilde, mass, grid);
    const auto diag = oscmap::diagnose(pair);
    std::cout << "phase:                 " << pair.phase.to_string() << "\n"
              << "grid:                  [" << fmt(grid.lo) << ", " << fmt(grid.hi)
              << "] dt=" << fmt(grid.step) << " (" << grid.size() << " samples)\n"
              << "L drift:               " << fmt(diag.l_drift) << "\n"
              << "construction residual: " << fmt(diag.construction_residual) << "\n"
              << "Ermakov-Pinney:        " << fmt(diag.ermakov_pinney) << "\n"
              << "TK consistency:        " << fmt(diag.tk_consistency) << "\n";

    if (args.format == "json") {
        write_text_file(args.out, oscmap::pair_to_json(pair).dump(2) + "\n");
    } else if (args.format == "csv") {
        std::ostringstream os;
        oscmap::write_pair_csv(os, pair);
        write_text_file(args.out, os.str());
    } else {
        std::cerr << "error: unknown format '" << args.format << "'\n";
        return kUsage;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// tunnel
// ---------------------------------------------------------------------------

struct TunnelArgs {
    std::string preset;
    double r = -1.0;
    double dtheta = 0.0;
    double d = 2.0;
    double big_d = 2.0;
    std::string eta;
    double amp = 1.0;
    double theta0 = 0.0;
    double x0 = -20.0, x1 = 20.0, dx = 1e-3;
    bool verify = false;
    std::string out = "tunnel.csv";
    std::string report;
};

int cmd_tunnel(const TunnelArgs& args) {
    oscmap::BarrierDesign design;
    if (!args.preset.empty()) {
        auto p = oscmap::BarrierDesign::preset(args.preset);
        if (!p) {
            std::cerr << "error: unknown preset '" << args.preset
                      << "' (expected example1|example2|example3)\n";
            return kUsage;
        }
        design = *p;
    } else {
        if (args.r < 0.0) {
            std::cerr << "error: --preset or --R is required\n";
            return kUsage;
        }
        std::optional<oscmap::PhaseExpr> eta;
        if (!args.eta.empty()) eta = oscmap::PhaseExpr::parse(args.eta, "x");
        design = oscmap::BarrierDesign::make(args.r, args.dtheta, args.d, args.big_d,
                                             std::move(eta), args.amp, args.theta0,
                                             std::min(args.x0, -20.0), std::max(args.x1, 20.0));
    }

    const oscmap::UniformGrid grid(args.x0, args.x1, args.dx);
    const auto sol = oscmap::synthesize(design, grid);
    std::cout << "design: R=" << fmt(design.r_target) << " dtheta=" << fmt(design.delta_theta)
              << " d=" << fmt(design.d) << " D=" << fmt(design.big_d)
              << " |A|=" << fmt(design.amp) << " theta0=" << fmt(design.theta0)
              << (design.eta ? " eta=" + design.eta->to_string() : "") << "\n"
              << "grid:   [" << fmt(grid.lo) << ", " << fmt(grid.hi) << "] dx=" << fmt(grid.step)
              << " (" << grid.size() << " samples)\n";
    {
        std::ostringstream os;
        oscmap::write_tunnel_csv(os, sol);
        write_text_file(args.out, os.str());
    }

    if (!args.verify) return kOk;

    const oscmap::PhaseExpr phase = oscmap::phase_function(design);
    auto u_bar = [&phase](double x) {
        const oscmap::Jet3 j = phase.jet(x);
        return 1.0 - j.v1 * j.v1 - 0.5 * oscmap::schwarzian(j);
    };
    const auto rep = oscmap::extract_reflection(u_bar, grid.lo, grid.hi);
    const double r_err = std::abs(rep.r_extracted - design.r_target);
    const double phase_err =
        std::abs(oscmap::angle_diff(rep.phase_shift_extracted, design.delta_theta));
    const bool r_ok = r_err <= 1e-3;
    const bool p_ok = phase_err <= 1e-2;
    std::cout << "extracted R:           " << fmt(rep.r_extracted) << " (target "
              << fmt(design.r_target) << ", |err| " << fmt(r_err) << ") "
              << (r_ok ? "ok" : "MISS") << "\n"
              << "extracted phase shift: " << fmt(rep.phase_shift_extracted) << " (target "
              << fmt(design.delta_theta) << ", |err| " << fmt(phase_err) << ") "
              << (p_ok ? "ok" : "MISS") << "\n"
              << "fit residual:          " << fmt(rep.fit_residual) << "\n";

    const std::string report_path = args.report.empty() ? args.out + ".report.json" : args.report;
    write_text_file(report_path, oscmap::scattering_report_to_json(rep).dump(2) + "\n");
    return (r_ok && p_ok) ? kOk : kVerifyTarget;
}

// ---------------------------------------------------------------------------
// range
// ---------------------------------------------------------------------------

struct RangeArgs {
    double theta0_step_deg = 1.0;
    double t_lo_mult = 1.2, t_hi_mult = 4.0, t_step_mult = 0.1;
    double window_mult = 6.0;
    double dt_div = 4000.0;
    double omega0 = 10.0 * std::numbers::pi;
    double a = 1.0;
    double mass = 0.1;
    double rho0 = 0.01;
    std::string out_cells = "range_cells.csv";
    std::string out_summary = "range_summary.csv";
};

int cmd_range(const RangeArgs& args) {
    oscmap::ExperimentConfig cfg;
    cfg.omega0 = args.omega0;
    cfg.a = args.a;
    cfg.mass = args.mass;
    cfg.rho0 = args.rho0;
    cfg.theta0_step = args.theta0_step_deg * std::numbers::pi / 180.0;
    cfg.t_lo_mult = args.t_lo_mult;
    cfg.t_hi_mult = args.t_hi_mult;
    cfg.t_step_mult = args.t_step_mult;
    cfg.window_mult = args.window_mult;
    cfg.dt_divisor = args.dt_div;
    cfg.validate();

    const auto res = oscmap::run_experiment(cfg);
    std::cout << "L invariant:  " << fmt(res.l_invariant) << "\n"
              << "grid:         " << res.theta0_values.size() << " theta0 x "
              << res.t_values.size() << " T cells, max L drift " << fmt(res.max_l_drift) << "\n"
              << "T/T_min    (2/L)*dE*T    (2/L)*dX*dP\n";
    const double tmin = oscmap::t_min(cfg.a, cfg.omega0);
    for (const auto& row : res.summary)
        std::cout << fmt(row.t_cap / tmin) << "  " << fmt(row.norm_energy_product) << "  "
                  << fmt(row.norm_xp_product) << "\n";
    std::cout << "per-cell minima: energy " << fmt(res.min_cell_norm_energy) << ", xp "
              << fmt(res.min_cell_norm_xp) << "\n";

    {
        std::ostringstream os;
        oscmap::write_range_cells_csv(os, res);
        write_text_file(args.out_cells, os.str());
    }
    {
        std::ostringstream os;
        oscmap::write_range_summary_csv(os, res);
        write_text_file(args.out_summary, os.str());
    }

    if (!res.inequalities_hold) {
        std::cout << "range relations: VIOLATED for at least one T\n";
        return kRangeViolation;
    }
    std::cout << "range relations: hold for every T\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string in;
    double replay_tol = 1e-6;
};

int cmd_verify(const VerifyArgs& args) {
    std::ifstream probe(args.in);
    if (!probe) {
        std::cerr << "error: cannot open '" << args.in << "'\n";
        return kIo;
    }
    std::string first_line;
    std::getline(probe, first_line);
    probe.close();

    oscmap::VerifyThresholds thr;
    thr.replay = args.replay_tol;

    if (first_line.rfind("t,", 0) == 0 || first_line.rfind("{", 0) == 0) {
        const auto lp = first_line.rfind("{", 0) == 0 ? oscmap::load_pair_json(args.in)
                                                      : oscmap::load_pair_csv(args.in);
        const auto rep = oscmap::verify_pair(lp, thr);
        std::cout << "input:             " << args.in << " (pair, " << lp.table.rows()
                  << " rows)\n"
                  << "replay deviation:  " << fmt(rep.replay_deviation) << " (worst at t="
                  << fmt(rep.worst_t) << ", tol " << fmt(thr.replay) << ")\n"
                  << "L drift:           " << fmt(rep.l_drift) << " (tol " << fmt(thr.l_drift)
                  << ")\n"
                  << "polar consistency: " << fmt(rep.polar_consistency) << " (tol "
                  << fmt(thr.polar) << ")\n"
                  << "TK consistency:    " << fmt(rep.tk_consistency) << " (tol " << fmt(thr.tk)
                  << ")\n"
                  << (rep.pass ? "PASS\n" : "FAIL\n");
        return rep.pass ? kOk : kVerifyFailed;
    }
    if (first_line.rfind("x,", 0) == 0) {
        const auto table = oscmap::load_tunnel_csv(args.in);
        const auto rep = oscmap::verify_tunnel(table, thr);
        std::cout << "input:               " << args.in << " (tunnel solution, " << table.rows()
                  << " rows)\n"
                  << "replay deviation:    " << fmt(rep.replay_deviation) << " (worst at x="
                  << fmt(rep.worst_x) << ", tol " << fmt(thr.replay) << ")\n"
                  << "Wronskian:           " << fmt(rep.wronskian_value) << " (drift "
                  << fmt(rep.wronskian_drift) << ", tol " << fmt(thr.wronskian) << ")\n"
                  << "density consistency: " << fmt(rep.density_consistency) << " (tol "
                  << fmt(thr.density) << ")\n"
                  << (rep.pass ? "PASS\n" : "FAIL\n");
        return rep.pass ? kOk : kVerifyFailed;
    }
    std::cerr << "error: unrecognized input schema in '" << args.in << "'\n";
    return kIo;
}

// ---------------------------------------------------------------------------
// hermite
// ---------------------------------------------------------------------------

struct HermiteArgs {
    int n_max = 5;
    std::string out;
};

int cmd_hermite(const HermiteArgs& args) {
    if (args.n_max < 0 || args.n_max > 12) {
        std::cerr << "error: --n-max must be in [0, 12]\n";
        return kUsage;
    }
    std::ostringstream os;
    os << "n,norm_integral,max_scaled_residual\n";
    std::cout << "n   norm integral        max scaled residual\n";
    for (int n = 0; n <= args.n_max; ++n) {
        const auto hp = oscmap::hermite_pair(n);
        // normalization over [-12, 12]; the Gaussian tail beyond is negligible
        const oscmap::UniformGrid grid(-12.0, 12.0, 1e-3);
        std::vector<double> sq(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double v = hp.value(grid.at(k));
            sq[k] = v * v;
        }
        const double norm = oscmap::simpson(sq, grid.step);
        double max_resid = 0.0, max_scale = 0.0;
        const oscmap::UniformGrid rgrid(-6.0, 6.0, 1e-3);
        for (std::size_t k = 0; k < rgrid.size(); ++k) {
            const double t = rgrid.at(k);
            max_resid = std::max(
                std::abs(hp.second_deriv(t) + hp.omega_sq(t) * hp.value(t)), max_resid);
            max_scale = std::max(std::abs(hp.omega_sq(t) * hp.value(t)), max_scale);
        }
        const double scaled = max_resid / max_scale;
        os << n << ',' << fmt(norm) << ',' << fmt(scaled) << '\n';
        std::printf("%-3d %-20s %s\n", n, fmt(norm).c_str(), fmt(scaled).c_str());
    }
    if (!args.out.empty()) write_text_file(args.out, os.str());
    return kOk;
}

// ---------------------------------------------------------------------------
// config file support: JSON object of long-option values, applied before the
// command line so explicit flags win
// ---------------------------------------------------------------------------

std::vector<std::string> inject_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    std::size_t config_at = 0;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            config_at = i;
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            config_at = i;
            break;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream is(config_path);
    if (!is) throw oscmap::IoError("cannot open config '" + config_path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw oscmap::ParseError("bad JSON config: " + std::string(e.what()), 0);
    }
    if (!j.is_object()) throw oscmap::ParseError("config must be a JSON object", 0);

    std::vector<std::string> injected;
    for (const auto& [key, value] : j.items()) {
        std::string v;
        if (value.is_string())
            v = value.get<std::string>();
        else if (value.is_boolean())
            v = value.get<bool>() ? "true" : "false";
        else if (value.is_number())
            v = fmt(value.get<double>());
        else
            throw oscmap::ParseError("config key '" + key + "' has unsupported type", 0);
        injected.push_back("--" + key + "=" + v);
    }

    // insert right after the subcommand token, before user flags
    std::vector<std::string> out;
    out.reserve(args.size() + injected.size());
    out.push_back(args[0]);
    std::size_t i = 1;
    if (config_at >= 2 && i < args.size()) out.push_back(args[i++]);  // subcommand
    out.insert(out.end(), injected.begin(), injected.end());
    for (; i < args.size(); ++i) out.push_back(args[i]);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact time-dependent-oscillator solutions, tunneling barrier synthesis,\n"
                 "and range-relation experiments, all cross-checked by an ODE replay"};
    app.require_subcommand(1);

    PairGenArgs pg;
    TunnelArgs tn;
    RangeArgs rg;
    VerifyArgs vf;
    HermiteArgs hm;

    static std::string config_path;  // consumed by inject_config before parsing
    auto add_config = [](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config mirroring the flags (flags win)");
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    };

    auto* pair_gen = app.add_subcommand(
        "pair-gen", "generate an exact (Omega^2, solution) pair from a phase function");
    add_config(pair_gen);
    pair_gen->add_option("--phase", pg.phase, "phase expression theta(t)");
    pair_gen->add_option("--var", pg.var, "variable name (default t)");
    pair_gen->add_option("--preset", pg.preset, "named phase preset: gaussian");
    pair_gen->add_option("--ltilde", pg.ltilde, "angular momentum per unit mass");
    pair_gen->add_option("--mass", pg.mass, "oscillator mass");
    auto* o_t0 = pair_gen->add_option("--t0", pg.t0, "grid start");
    pair_gen->add_option("--t1", pg.t1, "grid end");
    pair_gen->add_option("--dt", pg.dt, "grid step");
    pair_gen->add_option("--theta0", pg.theta0, "gaussian preset: initial phase");
    pair_gen->add_option("--omega0", pg.omega0, "gaussian preset: base angular frequency");
    pair_gen->add_option("--a", pg.a, "gaussian preset: perturbation amplitude");
    pair_gen->add_option("--T", pg.t_cap, "gaussian preset: perturbation time");
    pair_gen->add_option("--rho0", pg.rho0, "gaussian preset: unperturbed amplitude");
    pair_gen->add_option("--out", pg.out, "output path");
    pair_gen->add_option("--format", pg.format, "csv | json");

    auto* tunnel = app.add_subcommand(
        "tunnel", "synthesize a barrier with prescribed reflection and phase shift");
    add_config(tunnel);
    tunnel->add_option("--preset", tn.preset, "example1 | example2 | example3");
    tunnel->add_option("--R", tn.r, "target reflection coefficient in [0, 1)");
    tunnel->add_option("--dtheta", tn.dtheta, "transmission phase shift (rad)");
    tunnel->add_option("--d", tn.d, "sigma transition width");
    tunnel->add_option("--D", tn.big_d, "phase-shift ramp width");
    tunnel->add_option("--eta", tn.eta, "shaping term eta(x) as an expression");
    tunnel->add_option("--amp", tn.amp, "|A|");
    tunnel->add_option("--theta0", tn.theta0, "phase constant");
    tunnel->add_option("--x0", tn.x0, "grid start");
    tunnel->add_option("--x1", tn.x1, "grid end");
    tunnel->add_option("--dx", tn.dx, "grid step");
    tunnel->add_flag("--verify", tn.verify, "re-extract R and dtheta through the integrator");
    tunnel->add_option("--out", tn.out, "output CSV path");
    tunnel->add_option("--report", tn.report, "scattering report JSON path");

    auto* range = app.add_subcommand("range", "run the range-relations experiment");
    add_config(range);
    range->add_option("--theta0-step", rg.theta0_step_deg, "theta0 increment in degrees");
    range->add_option("--T-lo-mult", rg.t_lo_mult, "T grid start, in units of T_min (> 1)");
    range->add_option("--T-hi-mult", rg.t_hi_mult, "T grid end, in units of T_min");
    range->add_option("--T-step-mult", rg.t_step_mult, "T grid step, in units of T_min");
    range->add_option("--window-mult", rg.window_mult, "evaluation window half-width, in T");
    range->add_option("--dt-div", rg.dt_div, "samples per T");
    range->add_option("--omega0", rg.omega0, "base angular frequency");
    range->add_option("--a", rg.a, "perturbation amplitude");
    range->add_option("--mass", rg.mass, "oscillator mass");
    range->add_option("--rho0", rg.rho0, "unperturbed amplitude");
    range->add_option("--out-cells", rg.out_cells, "per-cell CSV path");
    range->add_option("--out-summary", rg.out_summary, "per-T summary CSV path");

    auto* verify = app.add_subcommand("verify", "replay a pair/tunnel file and check it");
    add_config(verify);
    verify->add_option("--in", vf.in, "input CSV or JSON")->required();
    verify->add_option("--replay-tol", vf.replay_tol, "scaled replay tolerance");

    auto* hermite = app.add_subcommand("hermite", "emit the Hermite validation table");
    add_config(hermite);
    hermite->add_option("--n-max", hm.n_max, "highest order to validate (<= 12)");
    hermite->add_option("--out", hm.out, "optional CSV path");

    std::vector<std::string> args;
    try {
        args = inject_config(argc, argv);
    } catch (const oscmap::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const oscmap::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    std::vector<const char*> cargs;
    for (const auto& s : args) cargs.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    // track whether pair-gen got an explicit grid
    pg.grid_given = o_t0->count() > 0;

    try {
        if (pair_gen->parsed()) return cmd_pair_gen(pg);
        if (tunnel->parsed()) return cmd_tunnel(tn);
        if (range->parsed()) return cmd_range(rg);
        if (verify->parsed()) return cmd_verify(vf);
        if (hermite->parsed()) return cmd_hermite(hm);
    } catch (const oscmap::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const oscmap::PhaseNotMonotone& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMonotone;
    } catch (const oscmap::MonotonicityViolated& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMonotone;
    } catch (const oscmap::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const oscmap::FitResidualTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kVerifyTarget;
    } catch (const oscmap::IntegrationFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kVerifyFailed;
    } catch (const oscmap::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
