#pragma once

// Flat-file run configuration and CSV/JSON artifact emission for the
// command-line front end.  Everything here is deterministic: fixed key
// order, fixed float rendering, no locale or wall-clock dependence.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fastslow/branch.hpp"
#include "fastslow/classify.hpp"
#include "fastslow/ews.hpp"
#include "fastslow/integrate.hpp"
#include "fastslow/model.hpp"
#include "fastslow/normal_form.hpp"
#include "fastslow/signal.hpp"

namespace fastslow {

using ordered_json = nlohmann::ordered_json;

/// %.17g: enough digits to round-trip a double exactly.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// run configuration

/// One run description shared by every command.  Defaults equal the study
/// parameter set; file values override defaults, flags override the file.
struct RunConfig {
    ModelParams params;

    bool have_ic = false;
    State ic{};
    std::string frame = "xyz"; ///< input space of ews/classify runs: xyz | uvw
    double tfinal = 0;         ///< 0 = per-command default
    double rel_tol = 1e-10, abs_tol = 1e-12;
    double dtau = 0.02; ///< sample step of transformed trajectories

    EWSConfig ews;

    double h_lo = 0.2, h_hi = 0.3;     ///< folded-singularity search bracket
    double h_min = 0.05, h_max = 0.45; ///< branch sweep range
    double step = 1e-3;                ///< branch sweep step

    std::string out = "out";
    std::string format = "both"; ///< csv | json | both
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

inline double config_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + v);
    }
    if (trim(v.substr(pos)) != "")
        throw ConfigError("config: bad number for '" + key + "': " + v);
    return x;
}

inline int config_int(const std::string& key, const std::string& v) {
    const double x = config_double(key, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError("config: expected an integer for '" + key + "': " + v);
    return i;
}

} // namespace detail

/// "x,y,z" -> State; exactly three comma-separated numbers.
inline State parse_ic(const std::string& s) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        const std::string piece =
            s.substr(start, comma == std::string::npos ? comma : comma - start);
        vals.push_back(detail::config_double("ic", detail::trim(piece)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    if (vals.size() != 3)
        throw ConfigError("config: ic needs three comma-separated numbers: " + s);
    return State{vals[0], vals[1], vals[2]};
}

/// Applies one key=value pair.  Unknown keys are configuration errors so a
/// typo cannot silently run with defaults.
inline void apply_config_entry(RunConfig& rc, const std::string& key,
                               const std::string& value) {
    using detail::config_double;
    using detail::config_int;
    if (key == "beta1")
        rc.params.beta1 = config_double(key, value);
    else if (key == "beta2")
        rc.params.beta2 = config_double(key, value);
    else if (key == "c")
        rc.params.c = config_double(key, value);
    else if (key == "d")
        rc.params.d = config_double(key, value);
    else if (key == "a12")
        rc.params.a12 = config_double(key, value);
    else if (key == "a21")
        rc.params.a21 = config_double(key, value);
    else if (key == "h")
        rc.params.h = config_double(key, value);
    else if (key == "zeta")
        rc.params.zeta = config_double(key, value);
    else if (key == "ic") {
        rc.ic = parse_ic(value);
        rc.have_ic = true;
    } else if (key == "frame") {
        if (value != "xyz" && value != "uvw")
            throw ConfigError("config: frame must be xyz or uvw: " + value);
        rc.frame = value;
    } else if (key == "tfinal")
        rc.tfinal = config_double(key, value);
    else if (key == "rel_tol")
        rc.rel_tol = config_double(key, value);
    else if (key == "abs_tol")
        rc.abs_tol = config_double(key, value);
    else if (key == "dtau")
        rc.dtau = config_double(key, value);
    else if (key == "k")
        rc.ews.k = config_int(key, value);
    else if (key == "N")
        rc.ews.N = config_int(key, value);
    else if (key == "window")
        rc.ews.window = config_double(key, value);
    else if (key == "cross_tol")
        rc.ews.cross_tol = config_double(key, value);
    else if (key == "h_lo")
        rc.h_lo = config_double(key, value);
    else if (key == "h_hi")
        rc.h_hi = config_double(key, value);
    else if (key == "h_min")
        rc.h_min = config_double(key, value);
    else if (key == "h_max")
        rc.h_max = config_double(key, value);
    else if (key == "step")
        rc.step = config_double(key, value);
    else if (key == "out")
        rc.out = value;
    else if (key == "format") {
        if (value != "csv" && value != "json" && value != "both")
            throw ConfigError("config: format must be csv, json or both: " + value);
        rc.format = value;
    } else
        throw ConfigError("config: unknown key '" + key + "'");
}

/// Flat `key = value` file; '#' starts a comment, blank lines are skipped.
inline void load_config_file(const std::string& path, RunConfig& rc) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected key = value");
        apply_config_entry(rc, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
}

// ---------------------------------------------------------------------------
// artifact emission

/// Trajectory as CSV on its own step/sample grid.
inline std::string csv_trajectory(const Trajectory& tr) {
    std::string s = tr.frame() == Trajectory::Frame::model_xyz ? "t,x,y,z\n"
                                                               : "tau,u,v,w\n";
    for (const double t : tr.grid()) {
        const Eigen::Vector3d q = tr.eval(t);
        s += g17(t);
        for (int i = 0; i < 3; ++i) {
            s += ',';
            s += g17(q[i]);
        }
        s += '\n';
    }
    return s;
}

inline ordered_json json_coefficients(const NormalFormCoeffs& c) {
    ordered_json j;
    j["omega"] = c.omega;
    j["delta"] = c.delta;
    j["F13"] = c.F13;
    j["F111"] = c.F111;
    j["H3"] = c.H3;
    j["H11"] = c.H11;
    j["alpha_slope"] = c.alpha_slope;
    j["alpha_intercept"] = c.alpha_intercept;
    j["h_fsn"] = c.h_fsn;
    j["x_fsn"] = c.fsn_point.x;
    j["y_fsn"] = c.fsn_point.y;
    j["z_fsn"] = c.fsn_point.z;
    return j;
}

inline ordered_json json_events(const std::vector<EventHit>& events) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : events) {
        ordered_json j;
        j["name"] = e.name;
        j["t"] = e.t;
        j["state"] = {e.y[0], e.y[1], e.y[2]};
        arr.push_back(j);
    }
    return arr;
}

inline ordered_json json_verdict(const AttractorVerdict& v, const Trajectory& tr) {
    ordered_json j;
    j["verdict"] = to_string(v.kind);
    j["decision_time"] = v.decision_time;
    j["evidence"] = v.evidence;
    j["t_end"] = tr.t_end();
    j["stop_reason"] = tr.stop_reason == Trajectory::StopReason::terminal_event
                           ? "terminal-event"
                           : "reached-t-final";
    j["events"] = json_events(tr.events);
    return j;
}

inline ordered_json json_fit(const ExpFit& f, const std::string& time_unit) {
    ordered_json j;
    j["interval"] = {f.t0, f.t1};
    j["k1"] = f.k1;
    j["k2"] = f.k2;
    j["residual"] = f.residual;
    j["time_unit"] = time_unit;
    return j;
}

inline ordered_json json_ews(const EWSReport& rep) {
    ordered_json j;
    j["verdict"] = to_string(rep.verdict);
    j["warning_time_s"] = rep.warning_time_s;
    j["warning_time_tau"] = rep.warning_time_tau;
    j["i0"] = rep.i0;
    j["tau_min_pred"] = rep.tau_min_pred;
    j["tau_cross_pred"] = rep.tau_cross_pred;
    j["theorem_bounds"] = {{"lower", rep.theorem_bounds.lower},
                           {"upper", rep.theorem_bounds.upper},
                           {"wbar_tau1", rep.theorem_bounds.wbar_tau1}};
    j["monotonic_k1"] = rep.monotonic_k1;
    j["monotonic_k2"] = rep.monotonic_k2;
    j["n_intervals"] = rep.n_intervals;
    j["config"] = {{"k", rep.config.k}, {"N", rep.config.N}};
    j["tau1"] = rep.tau1;
    j["period"] = rep.period;
    j["data_ratio"] = rep.data_ratio;
    return j;
}

/// (tau, wbar, wcrit_i0) samples of the triggering curve (the last curve
/// when no stage fired), on the wbar average grid.
inline std::string csv_curve(const EWSReport& rep) {
    if (rep.curves.curves.empty())
        throw InsufficientDataError("csv_curve: report carries no fitted curves");
    const std::size_t idx =
        rep.i0 > 0 ? static_cast<std::size_t>(rep.i0 - 1) : rep.curves.curves.size() - 1;
    std::string s = "tau,wbar,wcrit_i0\n";
    for (std::size_t i = 0; i < rep.wbar.grid.size(); ++i) {
        const double tau = rep.wbar.grid[i];
        s += g17(tau);
        s += ',';
        s += g17(rep.wbar.values[i]);
        s += ',';
        s += g17(rep.curves.eval(idx, tau));
        s += '\n';
    }
    return s;
}

inline std::string csv_branch(const Branch& br) {
    std::string s = "h,x,y,z,re_lambda1,im_lambda1,re_lambda2,im_lambda2,"
                    "re_lambda3,im_lambda3,stability\n";
    for (const auto& pt : br.points) {
        s += g17(pt.h);
        s += ',';
        s += g17(pt.eq.state.x);
        s += ',';
        s += g17(pt.eq.state.y);
        s += ',';
        s += g17(pt.eq.state.z);
        for (const auto& ev : pt.eq.eigenvalues) {
            s += ',';
            s += g17(ev.real());
            s += ',';
            s += g17(ev.imag());
        }
        s += ',';
        s += to_string(pt.eq.stability);
        s += '\n';
    }
    return s;
}

inline ordered_json json_bifurcations(const std::vector<BifurcationEvent>& events) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : events) {
        ordered_json j;
        j["kind"] = to_string(e.kind);
        j["h"] = e.h;
        j["branch"] = to_string(e.branch);
        j["h_lo"] = e.h_lo;
        j["h_hi"] = e.h_hi;
        j["eigenvalue"] = {{"re", e.eigenvalue.real()}, {"im", e.eigenvalue.imag()}};
        j["note"] = e.note;
        arr.push_back(j);
    }
    return arr;
}

/// Writes content to dir/name, creating dir first.  Rendering is fixed, so
/// a rerun of the same config rewrites identical bytes.
inline void write_artifact(const std::filesystem::path& dir, const std::string& name,
                           const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot open output file '" + p.string() + "'");
    out << content;
    if (!out)
        throw Error("write failed for '" + p.string() + "'");
}

inline void write_artifact(const std::filesystem::path& dir, const std::string& name,
                           const ordered_json& j) {
    write_artifact(dir, name, j.dump(2) + "\n");
}

} // namespace fastslow
