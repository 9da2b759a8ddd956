#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oscmap/errors.hpp"
#include "oscmap/range_relations.hpp"
#include "oscmap/scattering.hpp"
#include "oscmap/tdho.hpp"
#include "oscmap/tunneling.hpp"

namespace oscmap {

/// Shortest round-trip decimal rendering.
inline std::string fmt(double v) { return detail::format_double(v); }

// ---------------------------------------------------------------------------
// Generic column-oriented CSV
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }

    const std::vector<double>& column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return columns[i];
        throw IoError("missing CSV column '" + std::string(name) + "'");
    }
};

inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<const std::vector<double>*>& columns) {
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns[0]->size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            os << (c ? "," : "") << fmt((*columns[c])[r]);
        os << '\n';
    }
}

inline CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    t.columns.resize(t.header.size());
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t pos = 0, col = 0;
        while (col < t.header.size()) {
            std::size_t next = line.find(',', pos);
            std::string_view field(line.data() + pos,
                                   (next == std::string::npos ? line.size() : next) - pos);
            double v = 0.0;
            auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (res.ec != std::errc{})
                throw IoError("bad number at line " + std::to_string(lineno));
            t.columns[col++].push_back(v);
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (col != t.header.size())
            throw IoError("short row at line " + std::to_string(lineno));
    }
    return t;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    return read_csv(is);
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << contents;
    if (!os) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// GeneratedPair
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& pair_csv_header() {
    static const std::vector<std::string> h{"t",     "x",          "xdot",     "rho",
                                            "theta", "omega_inst", "omega_sq", "e_tk"};
    return h;
}

inline void write_pair_csv(std::ostream& os, const GeneratedPair& pair) {
    const std::size_t n = pair.samples.size();
    std::vector<std::vector<double>> cols(8);
    for (auto& c : cols) c.reserve(n);
    for (const auto& s : pair.samples) {
        cols[0].push_back(s.t);
        cols[1].push_back(s.x);
        cols[2].push_back(s.xdot);
        cols[3].push_back(s.rho);
        cols[4].push_back(s.theta);
        cols[5].push_back(s.omega_inst);
        cols[6].push_back(s.omega_sq);
        cols[7].push_back(s.e_tk);
    }
    std::vector<const std::vector<double>*> ptrs;
    for (auto& c : cols) ptrs.push_back(&c);
    write_csv(os, pair_csv_header(), ptrs);
}

inline nlohmann::json pair_to_json(const GeneratedPair& pair) {
    nlohmann::json j;
    j["metadata"] = {{"phase_source", pair.phase.to_string()},
                     {"l_tilde", pair.l_tilde},
                     {"mass", pair.mass},
                     {"grid", {{"t0", pair.grid.lo}, {"t1", pair.grid.hi}, {"dt", pair.grid.step}}},
                     {"variable", pair.phase.variable()}};
    auto& s = j["samples"];
    for (const auto& name : pair_csv_header()) s[name] = nlohmann::json::array();
    for (const auto& p : pair.samples) {
        s["t"].push_back(p.t);
        s["x"].push_back(p.x);
        s["xdot"].push_back(p.xdot);
        s["rho"].push_back(p.rho);
        s["theta"].push_back(p.theta);
        s["omega_inst"].push_back(p.omega_inst);
        s["omega_sq"].push_back(p.omega_sq);
        s["e_tk"].push_back(p.e_tk);
    }
    return j;
}

/// Deserialized pair data; `pair` is fully reconstructed when the phase
/// expression was present (JSON), otherwise only the sampled table is filled.
struct LoadedPair {
    CsvTable table;
    bool has_metadata = false;
    std::string phase_source;
    std::string variable = "t";
    double l_tilde = 0.0;
    double mass = 0.0;
    UniformGrid grid;
};

inline LoadedPair load_pair_csv(const std::string& path) {
    LoadedPair lp;
    lp.table = read_csv_file(path);
    for (const auto& name : pair_csv_header()) (void)lp.table.column(name);
    if (lp.table.rows() < 2) throw IoError("pair table has fewer than two rows");
    return lp;
}

inline LoadedPair load_pair_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad JSON in '" + path + "': " + e.what());
    }
    LoadedPair lp;
    try {
        const auto& meta = j.at("metadata");
        lp.has_metadata = true;
        lp.phase_source = meta.at("phase_source").get<std::string>();
        lp.variable = meta.value("variable", std::string("t"));
        lp.l_tilde = meta.at("l_tilde").get<double>();
        lp.mass = meta.at("mass").get<double>();
        lp.grid = UniformGrid(meta.at("grid").at("t0").get<double>(),
                              meta.at("grid").at("t1").get<double>(),
                              meta.at("grid").at("dt").get<double>());
        const auto& s = j.at("samples");
        for (const auto& name : pair_csv_header()) {
            lp.table.header.push_back(name);
            lp.table.columns.push_back(s.at(name).get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("pair JSON schema mismatch in '" + path + "': " + e.what());
    }
    if (lp.table.rows() < 2) throw IoError("pair table has fewer than two rows");
    return lp;
}

// ---------------------------------------------------------------------------
// TunnelSolution
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& tunnel_csv_header() {
    static const std::vector<std::string> h{"x",     "re_psi", "im_psi",      "density",
                                            "theta", "u_bar",  "omega_bar_sq"};
    return h;
}

inline void write_tunnel_csv(std::ostream& os, const TunnelSolution& sol) {
    write_csv(os, tunnel_csv_header(),
              {&sol.x, &sol.re_psi, &sol.im_psi, &sol.density, &sol.theta, &sol.u_bar,
               &sol.omega_bar_sq});
}

inline CsvTable load_tunnel_csv(const std::string& path) {
    CsvTable t = read_csv_file(path);
    for (const auto& name : tunnel_csv_header()) (void)t.column(name);
    if (t.rows() < 16) throw IoError("tunnel table is too short");
    return t;
}

// ---------------------------------------------------------------------------
// Range experiment
// ---------------------------------------------------------------------------

inline void write_range_cells_csv(std::ostream& os, const RangeExperimentResult& res) {
    os << "theta0,T,delta_e_tk,delta_x,delta_p,norm_energy_product,norm_xp_product\n";
    for (const auto& c : res.cells)
        os << fmt(c.theta0) << ',' << fmt(c.t_cap) << ',' << fmt(c.delta_e_tk) << ','
           << fmt(c.delta_x) << ',' << fmt(c.delta_p) << ',' << fmt(c.norm_energy_product) << ','
           << fmt(c.norm_xp_product) << '\n';
}

inline void write_range_summary_csv(std::ostream& os, const RangeExperimentResult& res) {
    os << "T,Delta_E_TK,Delta_X,Delta_P,norm_energy_product,norm_xp_product\n";
    for (const auto& r : res.summary)
        os << fmt(r.t_cap) << ',' << fmt(r.delta_e_tk) << ',' << fmt(r.delta_x) << ','
           << fmt(r.delta_p) << ',' << fmt(r.norm_energy_product) << ','
           << fmt(r.norm_xp_product) << '\n';
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline nlohmann::json scattering_report_to_json(const ScatteringReport& rep) {
    return {{"r_extracted", rep.r_extracted},
            {"sigma0_extracted", rep.sigma0_extracted},
            {"phase_shift_extracted", rep.phase_shift_extracted},
            {"fit_residual", rep.fit_residual}};
}

inline nlohmann::json integration_result_to_json(const IntegrationResult& res) {
    nlohmann::json j;
    j["grid"] = res.grid;
    j["y"] = res.y;
    j["ydot"] = res.ydot;
    j["y2"] = res.y2;
    j["y2dot"] = res.y2dot;
    j["wronskian_drift"] = res.wronskian_drift;
    j["steps_taken"] = res.steps_taken;
    j["steps_rejected"] = res.steps_rejected;
    j["complex_valued"] = res.complex_valued;
    return j;
}

}  // namespace oscmap
