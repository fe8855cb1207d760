// Command-line surface: simulate, surgery, swif-bound, continuity, density,
// plot. One JSON config drives everything; outputs are deterministic for a
// fixed config and seed and carry the config hash in their headers.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "neckflow/current.hpp"
#include "neckflow/flow.hpp"
#include "neckflow/forward.hpp"
#include "neckflow/harness.hpp"
#include "neckflow/io.hpp"
#include "neckflow/profile.hpp"
#include "neckflow/svg.hpp"

namespace fs = std::filesystem;
using namespace neckflow;

namespace {

io::RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return io::parse_config(ss.str());
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

int cmd_simulate(const std::string& config_path, const std::string& until, double until_time,
                 const std::string& out_dir) {
    const auto cfg = load_config(config_path);
    const std::string hash = io::config_hash(cfg);
    const auto initial = cfg.make_initial();
    flow::Trajectory traj;
    if (until == "pinch") {
        auto first = flow::run_until(flow::make_state(initial), cfg.solver,
                                     flow::StopSpec::at_pinch());
        if (first.final_status.phase != flow::Phase::PinchDetected)
            throw std::runtime_error("flow stopped without a pinch: " +
                                     first.final_status.diagnostic);
        traj = flow::run_until(flow::make_state(initial), cfg.solver,
                               flow::StopSpec::at_pinch(),
                               harness::schedule_pre(first.t_hat, cfg.sweep));
    } else {
        std::vector<double> samples;
        for (int k = 0; k <= cfg.sweep.k_max; ++k)
            samples.push_back(until_time * (k + 1) / (cfg.sweep.k_max + 1));
        traj = flow::run_until(flow::make_state(initial), cfg.solver,
                               flow::StopSpec::at_time(until_time), samples);
    }
    io::write_trajectory(out_dir, traj, hash);
    if (traj.final_status.phase == flow::Phase::PinchDetected) {
        const auto sp = flow::singular_profile(traj);
        std::ofstream os(fs::path(out_dir) / "singular.txt");
        io::write_profile(os, sp.profile, hash);
    }
    std::cout << "wrote trajectory to " << out_dir << " (" << traj.samples.size()
              << " samples, t_hat=" << traj.t_hat << ")\n";
    return 0;
}

int cmd_surgery(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = load_config(config_path);
    const std::string hash = io::config_hash(cfg);
    auto traj = flow::run_until(flow::make_state(cfg.make_initial()), cfg.solver,
                                flow::StopSpec::at_pinch());
    if (traj.final_status.phase != flow::Phase::PinchDetected)
        throw std::runtime_error("flow stopped without a pinch");
    const auto sp = flow::singular_profile(traj);
    if (!sp.valid) throw std::runtime_error("singular profile failed its validity checks");
    const auto sr = fwd::regularize(sp, cfg.surgery);
    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "singular.txt");
        io::write_profile(os, sp.profile, hash);
    }
    {
        std::ofstream os(fs::path(out_dir) / "sheet_lo.txt");
        io::write_profile(os, sr.sheet_lo, hash);
    }
    {
        std::ofstream os(fs::path(out_dir) / "sheet_hi.txt");
        io::write_profile(os, sr.sheet_hi, hash);
    }
    {
        std::ofstream os(fs::path(out_dir) / "surgery.json");
        io::write_surgery_report(os, sr.report, hash);
    }
    std::cout << "surgery at omega=" << sr.report.omega
              << ": volume " << sr.report.volume_before << " -> " << sr.report.volume_after
              << "\n";
    return 0;
}

int cmd_swif_bound(const std::string& config_path, const std::string& file_a,
                   const std::string& file_b, int band_j, const std::string& out_file) {
    const auto cfg = load_config(config_path);
    const std::string hash = io::config_hash(cfg);
    std::ifstream ia(file_a), ib(file_b);
    if (!ia) throw std::runtime_error("cannot open " + file_a);
    if (!ib) throw std::runtime_error("cannot open " + file_b);
    const auto pa = io::read_profile(ia);
    const auto pb = io::read_profile(ib);
    const auto region =
        band_j > 0 ? geom::RegionSpec::coord_band(band_j) : geom::RegionSpec::whole();
    const auto report = harness::compare_profiles(pa, pb, region, cfg.sweep);
    std::ostringstream ss;
    io::write_bound_report(ss, report, hash);
    if (out_file.empty())
        std::cout << ss.str();
    else
        write_text(out_file, ss.str());
    return 0;
}

int cmd_continuity(const std::string& config_path, const std::string& out_dir,
                   bool grid_study) {
    const auto cfg = load_config(config_path);
    const std::string hash = io::config_hash(cfg);
    const auto ex =
        harness::run_experiment(cfg.make_initial(), cfg.solver, cfg.surgery, cfg.sweep);
    fs::create_directories(out_dir);

    // the singular reference is an extrapolation; its effect on the final
    // bounds is reported across three grid resolutions
    nlohmann::json study = nlohmann::json::array();
    if (grid_study) {
        for (double frac : {0.5, 0.75, 1.0}) {
            io::RunConfig sub = cfg;
            sub.solver.nodes = std::max<std::size_t>(
                65, static_cast<std::size_t>(cfg.solver.nodes * frac)) | 1u;
            const auto sx = frac == 1.0
                                ? ex
                                : harness::run_experiment(sub.make_initial(), sub.solver,
                                                          cfg.surgery, cfg.sweep);
            study.push_back({{"nodes", sub.solver.nodes},
                             {"t_hat", sx.t_hat},
                             {"pre_final_bound", sx.pre_sweep.final_bound},
                             {"post_final_bound", sx.post_sweep.final_bound}});
        }
    }
    {
        std::vector<harness::SweepRow> all = ex.pre_sweep.rows;
        all.insert(all.end(), ex.post_sweep.rows.begin(), ex.post_sweep.rows.end());
        all.insert(all.end(), ex.postpost_sweep.rows.begin(), ex.postpost_sweep.rows.end());
        std::ofstream os(fs::path(out_dir) / "sweep.csv");
        io::write_sweep_csv(os, all, hash);
    }
    {
        std::ofstream os(fs::path(out_dir) / "singular.txt");
        io::write_profile(os, ex.singular.profile, hash);
    }
    {
        std::ofstream os(fs::path(out_dir) / "series.csv");
        os << "# neckflow series config=" << hash << "\n";
        os << "kind,t,value\n";
        char buf[128];
        for (const auto& p : ex.volumes.pre) {
            std::snprintf(buf, sizeof buf, "volume_pre,%.12g,%.12g\n", p.t, p.value);
            os << buf;
        }
        for (const auto& p : ex.volumes.post) {
            std::snprintf(buf, sizeof buf, "volume_post,%.12g,%.12g\n", p.t, p.value);
            os << buf;
        }
        for (const auto& p : ex.diameters.points) {
            std::snprintf(buf, sizeof buf, "diameter,%.12g,%.12g\n", p.t, p.value);
            os << buf;
        }
    }
    {
        nlohmann::json j;
        j["format"] = "neckflow-continuity";
        j["config"] = hash;
        j["t_hat"] = ex.t_hat;
        j["t0"] = ex.t0;
        j["pre_final_bound"] = ex.pre_sweep.final_bound;
        j["post_final_bound"] = ex.post_sweep.final_bound;
        j["postpost_final_bound"] = ex.postpost_sweep.final_bound;
        j["reference_volume"] = ex.pre_sweep.reference_volume;
        j["pre_tail_monotone"] = ex.pre_sweep.tail_monotone;
        j["post_tail_monotone"] = ex.post_sweep.tail_monotone;
        j["volume_two_sided_ok"] = ex.volumes.two_sided_ok;
        j["diameter_sup"] = ex.diameters.sup;
        j["diameter_hypothesis_ok"] = ex.diameters.hypothesis_ok;
        j["equatorial_only_pinching"] = harness::equatorial_only_pinching(ex.singular);
        if (!study.empty()) j["grid_study"] = study;
        std::ofstream os(fs::path(out_dir) / "continuity.json");
        os << j.dump(2) << "\n";
    }
    std::cout << "t_hat=" << ex.t_hat << " pre bound=" << ex.pre_sweep.final_bound
              << " post bound=" << ex.post_sweep.final_bound << "\n";
    if (!ex.diameters.hypothesis_ok)
        throw std::runtime_error("two-bump hypothesis violated along the run");
    if (!ex.pre_sweep.tail_monotone)
        throw std::runtime_error("pre-surgery bound tail is not monotone");
    if (!ex.post_sweep.tail_monotone)
        throw std::runtime_error("post-surgery bound tail is not monotone");
    return 0;
}

int cmd_density(const std::string& config_path, const std::string& out_file) {
    const auto cfg = load_config(config_path);
    const std::string hash = io::config_hash(cfg);
    auto traj = flow::run_until(flow::make_state(cfg.make_initial()), cfg.solver,
                                flow::StopSpec::at_pinch());
    if (traj.final_status.phase != flow::Phase::PinchDetected)
        throw std::runtime_error("flow stopped without a pinch");
    const auto sp = flow::singular_profile(traj);
    const auto refined = flow::cusp_refined_profile(sp);
    cur::MetricMeasureSpace space(refined, cfg.distance.theta_nodes);
    const auto arc = geom::arclength(refined);
    double s_pinch = 0.0;
    for (std::size_t i = 1; i + 1 < refined.size(); ++i)
        if (refined.psi[i] == 0.0) s_pinch = arc.s[i];

    std::vector<io::DensityRow> rows;
    std::vector<double> radii;
    for (int k = 0; k <= 20; ++k) radii.push_back(1e-2 * std::pow(2.0, -k / 1.5));
    const auto pinch_rep = cur::lower_density(space, s_pinch, radii);
    for (const auto& d : pinch_rep.sequence) rows.push_back({"pinch", d.r, d.value});
    for (double frac : {0.25, 0.5, 0.75}) {
        const double s = frac * arc.length();
        const auto rep = cur::lower_density(space, s, {0.12, 0.09, 0.06});
        for (const auto& d : rep.sequence) {
            char name[48];
            std::snprintf(name, sizeof name, "node_s%.3f", s);
            rows.push_back({name, d.r, d.value});
        }
    }
    // thread classes at the first post-surgery schedule time
    const auto sr = fwd::regularize(sp, cfg.surgery);
    const double t1 = sp.t_hat + cfg.sweep.delta0_frac * sp.t_hat *
                                     std::pow(2.0, -cfg.sweep.k_max);
    const double L = cfg.surgery.kappa * std::sqrt(t1 - sp.t_hat);
    cur::DoubleSphereSpace dspace(sr.sheet_lo, sr.sheet_hi, L, cfg.distance.theta_nodes);
    for (double frac : {0.25, 0.5, 0.75}) {
        cur::DoubleSphereSpace::Point p{0, frac * L, 0.0};
        const double rr = 0.4 * std::min(frac, 1.0 - frac) * L;
        const double dens =
            rr > 0 ? dspace.ball_volume(p, rr) /
                         (unit_ball_volume(dspace.dimension()) *
                          std::pow(rr, dspace.dimension()))
                   : 0.0;
        char name[32];
        std::snprintf(name, sizeof name, "thread_u%.2f", frac);
        rows.push_back({name, rr, dens});
    }
    std::ostringstream ss;
    io::write_density_csv(ss, rows, hash);
    if (out_file.empty())
        std::cout << ss.str();
    else
        write_text(out_file, ss.str());
    return 0;
}

std::string sniff_config_line(const fs::path& file) {
    std::ifstream is(file);
    std::string line;
    if (is && std::getline(is, line)) {
        const auto pos = line.find("config=");
        if (pos != std::string::npos) return line.substr(pos + 7);
    }
    return "unknown";
}

int cmd_plot(const std::string& in_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path in(in_path);
    std::vector<fs::path> csvs;
    if (fs::is_directory(in)) {
        for (const auto& e : fs::directory_iterator(in))
            if (e.path().extension() == ".csv" || e.path().filename() == "singular.txt")
                csvs.push_back(e.path());
        std::sort(csvs.begin(), csvs.end());
    } else {
        csvs.push_back(in);
    }
    int written = 0;
    for (const auto& file : csvs) {
        const std::string hash = sniff_config_line(file);
        std::ifstream is(file);
        std::string first;
        std::getline(is, first);
        is.seekg(0);
        if (first.find("neckflow sweep") != std::string::npos) {
            const auto rows = io::read_sweep_csv(is);
            for (const std::string side : {"pre", "post", "postpost"}) {
                svg::Series bound, gh;
                bound.name = "swif bound";
                gh.name = "gh bound";
                // per t keep the minimum over regions
                std::map<double, std::pair<double, double>> best;
                for (const auto& r : rows) {
                    if (r.side != side) continue;
                    auto it = best.find(r.t);
                    if (it == best.end() || r.swif_bound < it->second.first)
                        best[r.t] = {r.swif_bound, r.gh_bound};
                }
                for (const auto& [t, v] : best) {
                    bound.points.push_back({t, v.first});
                    gh.points.push_back({t, v.second});
                }
                if (bound.points.empty()) continue;
                svg::PlotSpec spec;
                spec.title = "minimized bound vs time (" + side + ")";
                spec.xlabel = "t";
                spec.ylabel = "bound";
                spec.logy = true;
                spec.comment = "config=" + hash;
                write_text(fs::path(out_dir) / ("bounds_" + side + ".svg"),
                           svg::render(spec, {bound, gh}));
                ++written;
            }
        } else if (first.find("neckflow density") != std::string::npos) {
            const auto rows = io::read_density_csv(is);
            std::map<std::string, svg::Series> by_class;
            for (const auto& r : rows) {
                auto& s = by_class[r.point_class];
                s.name = r.point_class;
                s.points.push_back({r.r, r.density});
            }
            std::vector<svg::Series> series;
            for (auto& [_, s] : by_class) series.push_back(s);
            svg::PlotSpec spec;
            spec.title = "lower density vs r";
            spec.xlabel = "r";
            spec.ylabel = "mu(B)/(beta_m r^m)";
            spec.logx = true;
            spec.comment = "config=" + hash;
            write_text(fs::path(out_dir) / "density_vs_r.svg", svg::render(spec, series));
            ++written;
        } else if (first.find("neckflow series") != std::string::npos) {
            std::string line;
            svg::Series vol_pre{"volume pre", {}}, vol_post{"volume post", {}},
                diam{"diameter", {}};
            while (std::getline(is, line)) {
                if (line.empty() || line[0] == '#' || line.rfind("kind,", 0) == 0) continue;
                std::istringstream ls(line);
                std::string kind, tok;
                std::getline(ls, kind, ',');
                std::getline(ls, tok, ',');
                const double t = std::stod(tok);
                std::getline(ls, tok, ',');
                const double v = std::stod(tok);
                if (kind == "volume_pre") vol_pre.points.push_back({t, v});
                if (kind == "volume_post") vol_post.points.push_back({t, v});
                if (kind == "diameter") diam.points.push_back({t, v});
            }
            svg::PlotSpec spec;
            spec.title = "volume series";
            spec.xlabel = "t";
            spec.ylabel = "volume";
            spec.comment = "config=" + hash;
            write_text(fs::path(out_dir) / "volume_series.svg",
                       svg::render(spec, {vol_pre, vol_post}));
            svg::PlotSpec dspec;
            dspec.title = "diameter series";
            dspec.xlabel = "t";
            dspec.ylabel = "diameter";
            dspec.comment = "config=" + hash;
            write_text(fs::path(out_dir) / "diameter_series.svg", svg::render(dspec, {diam}));
            written += 2;
        } else if (first.find("neckflow profile") != std::string::npos) {
            std::ifstream ps(file);
            const auto p = io::read_profile(ps);
            svg::Series s{"psi", {}};
            const auto arc = geom::arclength(p);
            for (std::size_t i = 0; i < p.size(); ++i)
                s.points.push_back({arc.s[i], p.psi[i]});
            svg::PlotSpec spec;
            spec.title = "profile " + file.stem().string();
            spec.xlabel = "s";
            spec.ylabel = "psi";
            spec.comment = "config=" + hash;
            write_text(fs::path(out_dir) / (file.stem().string() + ".svg"),
                       svg::render(spec, {s}));
            ++written;
        }
    }
    if (written == 0) throw std::runtime_error("no plottable inputs found in " + in_path);
    std::cout << "wrote " << written << " plots to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rotationally symmetric Ricci flow neckpinch laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_path, until = "pinch", file_a, file_b, in_path;
    double until_time = 0.0;
    int band_j = 0;

    auto* sim = app.add_subcommand("simulate", "evolve the configured initial data");
    sim->add_option("--config", config_path, "config file")->required();
    sim->add_option("--until", until, "pinch | time");
    sim->add_option("--time", until_time, "stop time when --until time");
    sim->add_option("--out", out_path, "output trajectory directory")->required();

    auto* sur = app.add_subcommand("surgery", "run to the pinch and regularize at scale omega");
    sur->add_option("--config", config_path, "config file")->required();
    sur->add_option("--out", out_path, "output directory")->required();

    auto* swb = app.add_subcommand("swif-bound", "bound between two stored profiles");
    swb->add_option("--config", config_path, "config file")->required();
    swb->add_option("--a", file_a, "first profile")->required();
    swb->add_option("--b", file_b, "second profile")->required();
    swb->add_option("--band", band_j, "restrict to the band |x| >= 1/j");
    swb->add_option("--out", out_path, "report file (stdout when omitted)");

    bool grid_study = false;
    auto* con = app.add_subcommand("continuity", "full experiment and sweep CSV");
    con->add_option("--config", config_path, "config file")->required();
    con->add_option("--out", out_path, "output directory")->required();
    con->add_flag("--grid-study", grid_study,
                  "rerun at half and three-quarter resolution and report the final bounds");

    auto* den = app.add_subcommand("density", "density report of the singular space");
    den->add_option("--config", config_path, "config file")->required();
    den->add_option("--out", out_path, "density CSV (stdout when omitted)");

    auto* plt = app.add_subcommand("plot", "render CSV outputs as SVG");
    plt->add_option("--in", in_path, "sweep/density CSV or output directory")->required();
    plt->add_option("--out", out_path, "plot directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(config_path, until, until_time, out_path);
        if (sur->parsed()) return cmd_surgery(config_path, out_path);
        if (swb->parsed()) return cmd_swif_bound(config_path, file_a, file_b, band_j, out_path);
        if (con->parsed()) return cmd_continuity(config_path, out_path, grid_study);
        if (den->parsed()) return cmd_density(config_path, out_path);
        if (plt->parsed()) return cmd_plot(in_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
