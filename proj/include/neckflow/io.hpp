#pragma once

// Configuration, persistence and report emission. One JSON config format,
// schema-validated with unknown keys rejected; columnar text profiles;
// JSON manifests; CSV sweeps. Every output file carries the config hash in
// its header line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "neckflow/flow.hpp"
#include "neckflow/forward.hpp"
#include "neckflow/grid.hpp"
#include "neckflow/harness.hpp"
#include "neckflow/profile.hpp"

namespace neckflow::io {

using geom::WarpedProfile;
using nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::vector<std::string>& errs)
        : std::runtime_error(join(errs)), errors(errs) {}
    std::vector<std::string> errors;

  private:
    static std::string join(const std::vector<std::string>& errs) {
        std::string out = "invalid config:";
        for (const auto& e : errs) out += "\n  " + e;
        return out;
    }
};

struct InitialData {
    std::string family = "ak_neck";  // ak_neck | round | cylinder
    double bump = 1.0;
    double neck_amp = 0.8;
    int neck_power = 4;
    double radius = 1.0;
};

struct DistanceConfig {
    std::size_t theta_nodes = 96;
    int refine = 1;
};

struct RunConfig {
    int n = 2;
    InitialData initial;
    flow::SolverConfig solver;
    fwd::SurgeryConfig surgery;
    harness::SweepConfig sweep;
    DistanceConfig distance;
    fwd::AsymptoticWindows windows;
    std::string output_dir = "out";
    std::uint64_t seed = 20240801;

    WarpedProfile make_initial() const {
        if (initial.family == "round")
            return geom::make_round_sphere(n, initial.radius, solver.nodes);
        if (initial.family == "cylinder")
            return geom::make_cylinder_band(n, initial.radius, solver.nodes);
        return geom::make_neck_profile(n, solver.nodes, initial.bump, initial.neck_amp,
                                       initial.neck_power);
    }
};

namespace detail {

struct Checker {
    std::vector<std::string> errors;

    void unknown_keys(const json& j, const std::string& path,
                      std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            errors.push_back(path + ": expected an object");
            return;
        }
        for (const auto& [key, _] : j.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) errors.push_back(path + "." + key + ": unknown key");
        }
    }

    template <typename T>
    void get(const json& j, const std::string& path, const char* key, T& out) {
        if (!j.contains(key)) return;
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            errors.push_back(path + "." + key + ": wrong type");
        }
    }

    void require(bool cond, const std::string& msg) {
        if (!cond) errors.push_back(msg);
    }
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError({std::string("not valid JSON: ") + e.what()});
    }
    detail::Checker c;
    RunConfig cfg;
    c.unknown_keys(j, "$",
                   {"n", "initial_data", "solver", "surgery", "sweep", "distance", "windows",
                    "output_dir", "seed"});
    c.get(j, "$", "n", cfg.n);
    c.require(cfg.n >= 2 && cfg.n <= 8, "$.n: must lie in [2, 8]");
    c.get(j, "$", "output_dir", cfg.output_dir);
    c.get(j, "$", "seed", cfg.seed);

    if (j.contains("initial_data")) {
        const auto& ji = j["initial_data"];
        c.unknown_keys(ji, "$.initial_data",
                       {"family", "bump", "neck_amp", "neck_power", "radius"});
        c.get(ji, "$.initial_data", "family", cfg.initial.family);
        c.require(cfg.initial.family == "ak_neck" || cfg.initial.family == "round" ||
                      cfg.initial.family == "cylinder",
                  "$.initial_data.family: must be ak_neck, round or cylinder");
        c.get(ji, "$.initial_data", "bump", cfg.initial.bump);
        c.require(cfg.initial.bump > 0, "$.initial_data.bump: must be > 0");
        c.get(ji, "$.initial_data", "neck_amp", cfg.initial.neck_amp);
        c.require(cfg.initial.neck_amp >= 0 && cfg.initial.neck_amp < 1,
                  "$.initial_data.neck_amp: must lie in [0, 1)");
        c.get(ji, "$.initial_data", "neck_power", cfg.initial.neck_power);
        c.require(cfg.initial.neck_power >= 2, "$.initial_data.neck_power: must be >= 2");
        c.get(ji, "$.initial_data", "radius", cfg.initial.radius);
        c.require(cfg.initial.radius > 0, "$.initial_data.radius: must be > 0");
    }
    if (j.contains("solver")) {
        const auto& js = j["solver"];
        c.unknown_keys(js, "$.solver",
                       {"nodes", "safety", "reaction_safety", "psi_stop", "max_steps",
                        "periodic", "pole_blend_cells", "fit_samples", "fit_window"});
        c.get(js, "$.solver", "nodes", cfg.solver.nodes);
        c.require(cfg.solver.nodes >= 17, "$.solver.nodes: must be >= 17");
        c.get(js, "$.solver", "safety", cfg.solver.safety);
        c.require(cfg.solver.safety > 0 && cfg.solver.safety <= 0.5,
                  "$.solver.safety: must lie in (0, 0.5]");
        c.get(js, "$.solver", "reaction_safety", cfg.solver.reaction_safety);
        c.require(cfg.solver.reaction_safety > 0 && cfg.solver.reaction_safety <= 0.5,
                  "$.solver.reaction_safety: must lie in (0, 0.5]");
        c.get(js, "$.solver", "psi_stop", cfg.solver.psi_stop);
        c.require(cfg.solver.psi_stop > 0, "$.solver.psi_stop: must be > 0");
        c.get(js, "$.solver", "max_steps", cfg.solver.max_steps);
        c.get(js, "$.solver", "periodic", cfg.solver.periodic);
        c.get(js, "$.solver", "pole_blend_cells", cfg.solver.pole_blend_cells);
        c.get(js, "$.solver", "fit_samples", cfg.solver.fit_samples);
        c.get(js, "$.solver", "fit_window", cfg.solver.fit_window);
    }
    if (j.contains("surgery")) {
        const auto& js = j["surgery"];
        c.unknown_keys(js, "$.surgery",
                       {"omega", "rho_star", "blend_exponent", "cap_nodes", "kappa"});
        c.get(js, "$.surgery", "omega", cfg.surgery.omega);
        c.require(cfg.surgery.omega > 0, "$.surgery.omega: must be > 0");
        c.get(js, "$.surgery", "rho_star", cfg.surgery.rho_star);
        c.require(cfg.surgery.rho_star > 0, "$.surgery.rho_star: must be > 0");
        c.get(js, "$.surgery", "blend_exponent", cfg.surgery.blend_exponent);
        c.require(cfg.surgery.blend_exponent > 0, "$.surgery.blend_exponent: must be > 0");
        c.get(js, "$.surgery", "cap_nodes", cfg.surgery.cap_nodes);
        c.require(cfg.surgery.cap_nodes >= 8, "$.surgery.cap_nodes: must be >= 8");
        c.get(js, "$.surgery", "kappa", cfg.surgery.kappa);
        c.require(cfg.surgery.kappa >= 0, "$.surgery.kappa: must be >= 0");
    }
    if (j.contains("sweep")) {
        const auto& js = j["sweep"];
        c.unknown_keys(js, "$.sweep",
                       {"k_max", "delta0_frac", "post_delta0_frac", "j_set", "omega_set",
                        "kappa", "source_stride", "theta_classes", "theta_nodes", "delta_a",
                        "tail_rel_slack"});
        c.get(js, "$.sweep", "k_max", cfg.sweep.k_max);
        c.require(cfg.sweep.k_max >= 1, "$.sweep.k_max: must be >= 1");
        c.get(js, "$.sweep", "delta0_frac", cfg.sweep.delta0_frac);
        c.require(cfg.sweep.delta0_frac > 0, "$.sweep.delta0_frac: must be > 0");
        c.get(js, "$.sweep", "post_delta0_frac", cfg.sweep.post_delta0_frac);
        c.require(cfg.sweep.post_delta0_frac > 0, "$.sweep.post_delta0_frac: must be > 0");
        c.get(js, "$.sweep", "j_set", cfg.sweep.j_set);
        c.get(js, "$.sweep", "omega_set", cfg.sweep.omega_set);
        c.get(js, "$.sweep", "kappa", cfg.sweep.kappa);
        c.require(cfg.sweep.kappa >= 0, "$.sweep.kappa: must be >= 0");
        c.get(js, "$.sweep", "source_stride", cfg.sweep.source_stride);
        c.get(js, "$.sweep", "theta_classes", cfg.sweep.theta_classes);
        c.get(js, "$.sweep", "theta_nodes", cfg.sweep.theta_nodes);
        c.get(js, "$.sweep", "delta_a", cfg.sweep.delta_a);
        c.require(cfg.sweep.delta_a > 0, "$.sweep.delta_a: must be > 0");
        c.get(js, "$.sweep", "tail_rel_slack", cfg.sweep.tail_rel_slack);
    }
    if (j.contains("distance")) {
        const auto& jd = j["distance"];
        c.unknown_keys(jd, "$.distance", {"theta_nodes", "refine"});
        c.get(jd, "$.distance", "theta_nodes", cfg.distance.theta_nodes);
        c.require(cfg.distance.theta_nodes >= 8, "$.distance.theta_nodes: must be >= 8");
        c.get(jd, "$.distance", "refine", cfg.distance.refine);
        c.require(cfg.distance.refine >= 1, "$.distance.refine: must be >= 1");
    }
    if (j.contains("windows")) {
        const auto& jw = j["windows"];
        c.unknown_keys(jw, "$.windows", {"c1", "c2", "c3", "c4"});
        c.get(jw, "$.windows", "c1", cfg.windows.c1);
        c.get(jw, "$.windows", "c2", cfg.windows.c2);
        c.get(jw, "$.windows", "c3", cfg.windows.c3);
        c.get(jw, "$.windows", "c4", cfg.windows.c4);
    }
    if (!c.errors.empty()) throw ConfigError(c.errors);
    // cross-field validation through the component validators
    try {
        cfg.solver.validate();
        cfg.surgery.validate();
        cfg.sweep.validate();
    } catch (const std::exception& e) {
        throw ConfigError({e.what()});
    }
    return cfg;
}

// Canonical serialization: nlohmann objects iterate keys in sorted order.
inline std::string serialize(const RunConfig& cfg) {
    json j;
    j["n"] = cfg.n;
    j["initial_data"] = {{"family", cfg.initial.family},
                         {"bump", cfg.initial.bump},
                         {"neck_amp", cfg.initial.neck_amp},
                         {"neck_power", cfg.initial.neck_power},
                         {"radius", cfg.initial.radius}};
    j["solver"] = {{"nodes", cfg.solver.nodes},
                   {"safety", cfg.solver.safety},
                   {"reaction_safety", cfg.solver.reaction_safety},
                   {"psi_stop", cfg.solver.psi_stop},
                   {"max_steps", cfg.solver.max_steps},
                   {"periodic", cfg.solver.periodic},
                   {"pole_blend_cells", cfg.solver.pole_blend_cells},
                   {"fit_samples", cfg.solver.fit_samples},
                   {"fit_window", cfg.solver.fit_window}};
    j["surgery"] = {{"omega", cfg.surgery.omega},
                    {"rho_star", cfg.surgery.rho_star},
                    {"blend_exponent", cfg.surgery.blend_exponent},
                    {"cap_nodes", cfg.surgery.cap_nodes},
                    {"kappa", cfg.surgery.kappa}};
    j["sweep"] = {{"k_max", cfg.sweep.k_max},
                  {"delta0_frac", cfg.sweep.delta0_frac},
                  {"post_delta0_frac", cfg.sweep.post_delta0_frac},
                  {"j_set", cfg.sweep.j_set},
                  {"omega_set", cfg.sweep.omega_set},
                  {"kappa", cfg.sweep.kappa},
                  {"source_stride", cfg.sweep.source_stride},
                  {"theta_classes", cfg.sweep.theta_classes},
                  {"theta_nodes", cfg.sweep.theta_nodes},
                  {"delta_a", cfg.sweep.delta_a},
                  {"tail_rel_slack", cfg.sweep.tail_rel_slack}};
    j["distance"] = {{"theta_nodes", cfg.distance.theta_nodes}, {"refine", cfg.distance.refine}};
    j["windows"] = {{"c1", cfg.windows.c1},
                    {"c2", cfg.windows.c2},
                    {"c3", cfg.windows.c3},
                    {"c4", cfg.windows.c4}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

inline std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a(serialize(cfg))); }

// ---- profile files -----------------------------------------------------------

inline void write_profile(std::ostream& os, const WarpedProfile& p, const std::string& hash) {
    os << "# neckflow profile config=" << hash << "\n";
    os << "n " << p.n << "\n";
    os << "nodes " << p.size() << "\n";
    os << "poles " << (p.pole_lo ? 1 : 0) << " " << (p.pole_hi ? 1 : 0) << "\n";
    os << "# x phi psi\n";
    char buf[128];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x[i], p.phi[i], p.psi[i]);
        os << buf;
    }
}

inline WarpedProfile read_profile(std::istream& is) {
    WarpedProfile p;
    std::string line;
    std::size_t nodes = 0;
    bool have_n = false, have_nodes = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "n") {
            ls >> p.n;
            have_n = true;
        } else if (key == "nodes") {
            ls >> nodes;
            have_nodes = true;
        } else if (key == "poles") {
            int a = 1, b = 1;
            ls >> a >> b;
            p.pole_lo = a != 0;
            p.pole_hi = b != 0;
        } else {
            // data row: the key we just consumed is the x value
            double x = 0, phi = 0, psi = 0;
            try {
                x = std::stod(key);
            } catch (...) {
                throw std::runtime_error("read_profile: malformed row: " + line);
            }
            if (!(ls >> phi >> psi))
                throw std::runtime_error("read_profile: malformed row: " + line);
            p.x.push_back(x);
            p.phi.push_back(phi);
            p.psi.push_back(psi);
        }
    }
    if (!have_n || !have_nodes)
        throw std::runtime_error("read_profile: missing header");
    if (p.size() != nodes)
        throw std::runtime_error("read_profile: node count mismatch");
    p.validate();
    return p;
}

// ---- trajectory directory ------------------------------------------------------

inline std::string profile_filename(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "profile_%04zu.txt", k);
    return buf;
}

inline void write_trajectory(const std::filesystem::path& dir, const flow::Trajectory& traj,
                             const std::string& hash) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "neckflow-trajectory";
    manifest["config"] = hash;
    std::vector<double> times;
    std::vector<std::string> files;
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& st = traj.samples[k];
        const std::string name = profile_filename(k);
        std::ofstream os(dir / name);
        write_profile(os, st.profile, hash);
        times.push_back(st.t);
        files.push_back(name);
    }
    manifest["times"] = times;
    manifest["files"] = files;
    switch (traj.final_status.phase) {
        case flow::Phase::Smooth: manifest["status"] = "smooth"; break;
        case flow::Phase::PinchDetected: manifest["status"] = "pinch_detected"; break;
        case flow::Phase::Stopped: manifest["status"] = "stopped"; break;
    }
    manifest["t_hat"] = traj.t_hat;
    manifest["x_neck"] = traj.final_status.x_neck;
    manifest["diagnostic"] = traj.final_status.diagnostic;
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
}

// ---- sweep CSV -------------------------------------------------------------------

inline void write_sweep_csv(std::ostream& os, const std::vector<harness::SweepRow>& rows,
                            const std::string& hash) {
    os << "# neckflow sweep config=" << hash << "\n";
    os << "side,t,j_or_omega,eps,lambda,a,h,hbar,vol_terms,residuals,swif_bound,gh_bound,"
          "diameter,volume\n";
    char buf[512];
    for (const auto& r : rows) {
        const auto& rep = r.report;
        const double vol_terms = rep.vol_u1 + rep.vol_u2 + rep.area_b1 + rep.area_b2;
        const double residuals = rep.residual_1 + rep.residual_2;
        std::snprintf(buf, sizeof buf,
                      "%s,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                      "%.12g,%.12g\n",
                      r.side.c_str(), r.t, r.j_or_omega, rep.eps, rep.lambda, rep.a, rep.h,
                      rep.hbar, vol_terms, residuals, rep.swif_bound, rep.gh_bound, r.diameter,
                      r.volume);
        os << buf;
    }
}

struct SweepCsvRow {
    std::string side;
    double t, j_or_omega, eps, lambda, a, h, hbar, vol_terms, residuals, swif_bound, gh_bound,
        diameter, volume;
};

inline std::vector<SweepCsvRow> read_sweep_csv(std::istream& is) {
    std::vector<SweepCsvRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("side,", 0) == 0) continue;
        std::istringstream ls(line);
        SweepCsvRow r;
        std::string tok;
        std::getline(ls, r.side, ',');
        double* fields[] = {&r.t,       &r.j_or_omega, &r.eps,        &r.lambda,
                            &r.a,       &r.h,          &r.hbar,       &r.vol_terms,
                            &r.residuals, &r.swif_bound, &r.gh_bound, &r.diameter,
                            &r.volume};
        for (double* f : fields) {
            if (!std::getline(ls, tok, ',')) throw std::runtime_error("bad sweep CSV row");
            *f = std::stod(tok);
        }
        rows.push_back(r);
    }
    return rows;
}

// ---- density CSV --------------------------------------------------------------------

struct DensityRow {
    std::string point_class;
    double r = 0.0;
    double density = 0.0;
};

inline void write_density_csv(std::ostream& os, const std::vector<DensityRow>& rows,
                              const std::string& hash) {
    os << "# neckflow density config=" << hash << "\n";
    os << "point_class,r,density\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g\n", r.point_class.c_str(), r.r,
                      r.density);
        os << buf;
    }
}

inline std::vector<DensityRow> read_density_csv(std::istream& is) {
    std::vector<DensityRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("point_class,", 0) == 0) continue;
        std::istringstream ls(line);
        DensityRow r;
        std::string tok;
        std::getline(ls, r.point_class, ',');
        std::getline(ls, tok, ',');
        r.r = std::stod(tok);
        std::getline(ls, tok, ',');
        r.density = std::stod(tok);
        rows.push_back(r);
    }
    return rows;
}

// ---- surgery report -------------------------------------------------------------------

inline void write_surgery_report(std::ostream& os, const fwd::SurgeryReport& rep,
                                 const std::string& hash) {
    json j;
    j["format"] = "neckflow-surgery";
    j["config"] = hash;
    j["omega"] = rep.omega;
    j["rho_star"] = rep.rho_star;
    j["cap_radius"] = rep.cap_radius;
    j["cap_nodes"] = rep.cap_nodes;
    j["blend_exponent"] = rep.blend_exponent;
    j["extent_lo"] = rep.extent_lo;
    j["extent_hi"] = rep.extent_hi;
    j["volume_before"] = rep.volume_before;
    j["volume_after"] = rep.volume_after;
    j["closure_lo"] = rep.closure_lo;
    j["closure_hi"] = rep.closure_hi;
    os << j.dump(2) << "\n";
}

// Flat key-value record of one bound report.
inline void write_bound_report(std::ostream& os, const swif::SwifBoundReport& r,
                               const std::string& hash) {
    char buf[128];
    os << "# neckflow swif-bound config=" << hash << "\n";
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s %.12g\n", key, v);
        os << buf;
    };
    put("eps", r.eps);
    put("eps_formula", r.eps_formula);
    put("lambda", r.lambda);
    put("d_u1", r.d_u1);
    put("d_u2", r.d_u2);
    put("a", r.a);
    put("h", r.h);
    put("hbar", r.hbar);
    put("vol_u1", r.vol_u1);
    put("vol_u2", r.vol_u2);
    put("area_b1", r.area_b1);
    put("area_b2", r.area_b2);
    put("residual_1", r.residual_1);
    put("residual_2", r.residual_2);
    put("gap_1", r.gap_1);
    put("gap_2", r.gap_2);
    put("delta_a", r.delta_a);
    put("swif_bound", r.swif_bound);
    put("gh_bound", r.gh_bound);
}

}  // namespace neckflow::io
