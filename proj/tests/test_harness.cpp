#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "neckflow/harness.hpp"
#include "testutil.hpp"

using namespace neckflow;
using namespace neckflow::harness;
using geom::make_neck_profile;
using geom::make_round_sphere;

namespace {

// one small end-to-end experiment shared across cases
const ExperimentResult& experiment() {
    static ExperimentResult* ex = [] {
        flow::SolverConfig solver;
        solver.nodes = 193;
        solver.psi_stop = 1e-7;
        fwd::SurgeryConfig surgery;
        surgery.omega = 1.0 / 256;
        SweepConfig sweep;
        sweep.k_max = 14;
        sweep.j_set = {2, 4, 8, 16};
        sweep.theta_nodes = 40;
        sweep.source_stride = 12;
        return new ExperimentResult(run_experiment(make_neck_profile(2, 193, 1.0, 0.8, 4),
                                                   solver, surgery, sweep));
    }();
    return *ex;
}

}  // namespace

TEST_CASE("schedules approach T_hat geometrically from both sides") {
    SweepConfig cfg;
    cfg.k_max = 5;
    const auto pre = schedule_pre(1.0, cfg);
    REQUIRE(pre.size() == 6);
    for (std::size_t i = 0; i < pre.size(); ++i) {
        CHECK(pre[i] < 1.0);
        CHECK(1.0 - pre[i] == doctest::Approx(0.1 * std::pow(2.0, -(double)i)).epsilon(1e-12));
    }
    const auto post = schedule_post(1.0, cfg);
    for (std::size_t i = 1; i < post.size(); ++i) CHECK(post[i] > post[i - 1]);
    CHECK(post.front() > 1.0);
}

TEST_CASE("compare_profiles: self comparison gives eps = lambda = 0, bound = residuals") {
    const auto p = make_neck_profile(2, 129, 1.0, 0.8, 4);
    SweepConfig cfg;
    cfg.theta_nodes = 40;
    const auto rep = compare_profiles(p, p, geom::RegionSpec::coord_band(4), cfg);
    CHECK(rep.eps == doctest::Approx(0.0));
    CHECK(rep.lambda == doctest::Approx(0.0));
    const double resid = rep.residual_1 + rep.residual_2;
    CHECK(rep.swif_bound ==
          doctest::Approx(resid + (2.0 * rep.hbar + rep.a) *
                                      (rep.vol_u1 + rep.vol_u2 + rep.area_b1 + rep.area_b2))
              .epsilon(1e-12));
    // with eps = lambda = 0 the width collapses to the margin
    CHECK(rep.a == doctest::Approx(0.0));
    CHECK(rep.hbar == doctest::Approx(0.0));
    CHECK(rep.swif_bound == doctest::Approx(resid).epsilon(1e-9));
}

TEST_CASE("compare_profiles: scaled spheres produce the uniform-scaling eps") {
    const auto p1 = make_round_sphere(2, 1.0, 129);
    const auto p2 = make_round_sphere(2, 1.25, 129);
    SweepConfig cfg;
    cfg.theta_nodes = 40;
    const auto rep = compare_profiles(p1, p2, geom::RegionSpec::whole(), cfg);
    CHECK(rep.eps == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(rep.lambda == doctest::Approx(0.25 * kPi).epsilon(0.03));
    CHECK(rep.swif_bound > 0.0);
}

TEST_CASE("pre-surgery sweep: bounds decay monotonically to below 5 percent") {
    const auto& ex = experiment();
    const auto& sw = ex.pre_sweep;
    REQUIRE(sw.selected.size() >= 8);
    CHECK(sw.tail_monotone);
    CHECK(sw.final_bound < 0.05 * sw.reference_volume);
    // every emitted report satisfies the exact formula identity
    for (const auto& row : sw.rows) {
        CHECK(swif::recompute_swif_bound(row.report) ==
              doctest::Approx(row.report.swif_bound).epsilon(1e-14));
        CHECK(swif::recompute_gh_bound(row.report) ==
              doctest::Approx(row.report.gh_bound).epsilon(1e-14));
    }
}

TEST_CASE("pre-surgery sweep: residual volumes shrink with j at fixed t") {
    const auto& ex = experiment();
    std::map<double, std::map<double, double>> resid;  // t -> j -> residual
    for (const auto& row : ex.pre_sweep.rows)
        resid[row.t][row.j_or_omega] = row.report.residual_1 + row.report.residual_2;
    int checked = 0;
    for (const auto& [t, per_j] : resid) {
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& [j, r] : per_j) {
            CHECK(r <= prev + 1e-12);
            prev = r;
            ++checked;
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("pre-surgery sweep: lambda decays like sqrt(T - t) on the tail") {
    const auto& ex = experiment();
    std::vector<double> dts, lams;
    for (const auto& row : ex.pre_sweep.selected) {
        const double dt = ex.t_hat - row.t;
        if (dt <= 0 || row.report.lambda <= 0) continue;
        dts.push_back(dt);
        lams.push_back(row.report.lambda);
    }
    REQUIRE(dts.size() >= 6);
    const double slope = loglog_slope(dts, lams);
    CHECK(slope >= 0.4);
    CHECK(slope <= 1.1);
}

TEST_CASE("post-surgery sweep: bound decays and the thread guard trips on bad schedules") {
    const auto& ex = experiment();
    CHECK(ex.post_sweep.tail_monotone);
    CHECK(ex.post_sweep.final_bound < 0.105 * ex.post_sweep.reference_volume);
    for (const auto& row : ex.post_sweep.rows) {
        CHECK(swif::recompute_swif_bound(row.report) ==
              doctest::Approx(row.report.swif_bound).epsilon(1e-14));
    }
    // degenerate thread schedule (constant length) is a violated hypothesis
    fwd::DoubleTrajectory bad = ex.post;
    bad.kappa = 0.0;
    SweepConfig cfg;
    CHECK_THROWS_AS((void)post_surgery_sweep(bad, ex.singular, ex.correspondence, 1.0, cfg),
                    std::invalid_argument);
}

TEST_CASE("post-post sweep: two-sided decay with symmetric samples close") {
    const auto& ex = experiment();
    const auto& sw = ex.postpost_sweep;
    CHECK(sw.tail_monotone);
    REQUIRE(sw.selected.size() >= 6);
    // the t = t0 self row sits at the very end with bound = residuals only
    const auto& last = sw.selected.back();
    CHECK(last.report.eps == doctest::Approx(0.0));
    CHECK(last.report.lambda == doctest::Approx(0.0));
    CHECK(last.report.swif_bound ==
          doctest::Approx(last.report.residual_1 + last.report.residual_2).epsilon(1e-9));
    // symmetric samples t0 +- delta agree within 10 percent
    std::map<long long, std::vector<const SweepRow*>> by_gap;
    for (const auto& row : sw.selected) {
        const long long key = static_cast<long long>(std::abs(row.t - ex.t0) * 1e13);
        if (key > 0) by_gap[key].push_back(&row);
    }
    int pairs = 0;
    for (const auto& [gap, rows] : by_gap) {
        if (rows.size() != 2) continue;
        const double b1 = rows[0]->report.swif_bound;
        const double b2 = rows[1]->report.swif_bound;
        CHECK(std::abs(b1 - b2) <= 0.10 * std::max(b1, b2));
        ++pairs;
    }
    CHECK(pairs >= 3);
    // bound-vs-delta log-log slope at least 0.45
    std::vector<double> gaps, bounds;
    for (const auto& row : sw.selected) {
        const double gap = std::abs(row.t - ex.t0);
        if (gap <= 0) continue;
        gaps.push_back(gap);
        bounds.push_back(row.report.swif_bound - (last.report.swif_bound));
    }
    std::vector<double> g2, b2;
    for (std::size_t i = 0; i < gaps.size(); ++i)
        if (bounds[i] > 0) {
            g2.push_back(gaps[i]);
            b2.push_back(bounds[i]);
        }
    REQUIRE(g2.size() >= 5);
    CHECK(loglog_slope(g2, b2) >= 0.45);
}

TEST_CASE("volume series: two-sided convergence and the control law") {
    const auto& ex = experiment();
    CHECK(ex.volumes.two_sided_ok);
    CHECK(ex.volumes.pre_alpha >= 0.45);
    CHECK(ex.volumes.pre_limit_gap < 0.02);
    CHECK(ex.volumes.post_limit_gap < 0.02);

    // round shrinking sphere control: Vol(t) = (r0^2 - 2 n t)^{(n+1)/2} Vol(S^{n+1})
    flow::SolverConfig cfg;
    cfg.nodes = 257;
    auto traj = flow::run_until(flow::make_state(make_round_sphere(2, 1.0, 257)), cfg,
                                flow::StopSpec::at_time(0.05), {0.02, 0.05});
    for (const auto& st : traj.samples) {
        if (st.t == 0.0) continue;
        const double expect = std::pow(1.0 - 4.0 * st.t, 1.5) * 2.0 * kPi * kPi;
        CHECK(std::abs(geom::volume(st.profile) - expect) / expect < 1e-3);
    }
}

TEST_CASE("diameter series: bounded, hypothesis checked, and the singular scan") {
    const auto& ex = experiment();
    CHECK(ex.diameters.bounded);
    CHECK(ex.diameters.hypothesis_ok);
    CHECK(ex.diameters.min_bump > 0.1);
    CHECK(ex.diameters.sup < 10.0);
    CHECK(std::isfinite(ex.diameters.c_fit));
    CHECK(equatorial_only_pinching(ex.singular));
}

TEST_CASE("post-surgery sweep: measured eps series decreases toward T") {
    const auto& ex = experiment();
    // per omega region, eps along the selected tail shrinks as t drops to T
    std::map<double, std::vector<std::pair<double, double>>> by_region;
    for (const auto& row : ex.post_sweep.rows)
        by_region[row.j_or_omega].push_back({row.t, row.report.eps});
    int checked = 0;
    for (auto& [omega, series] : by_region) {
        std::sort(series.begin(), series.end());
        if (series.size() < 6) continue;
        // compare the earliest-t (closest to T) against the latest
        CHECK(series.front().second < 0.5 * series.back().second + 1e-12);
        ++checked;
    }
    CHECK(checked >= 2);
}

TEST_CASE("diameter series: round sphere decreases smoothly") {
    flow::SolverConfig cfg;
    cfg.nodes = 129;
    std::vector<double> times;
    for (int k = 1; k <= 5; ++k) times.push_back(0.01 * k);
    auto traj = flow::run_until(flow::make_state(make_round_sphere(2, 1.0, 129)), cfg,
                                flow::StopSpec::at_time(0.05), times);
    SweepConfig sw;
    sw.theta_nodes = 40;
    const auto ds = diameter_series(traj, 0.25, sw);
    REQUIRE(ds.points.size() >= 5);
    for (std::size_t i = 1; i < ds.points.size(); ++i)
        CHECK(ds.points[i].value <= ds.points[i - 1].value + 1e-6);
    CHECK(ds.bounded);
}

TEST_CASE("sweeps reject missing prerequisites") {
    const auto& ex = experiment();
    flow::Trajectory smooth;  // no pinch detected
    smooth.final_status.phase = flow::Phase::Smooth;
    SweepConfig cfg;
    CHECK_THROWS_AS((void)pre_surgery_sweep(smooth, ex.singular, cfg), std::invalid_argument);
    CHECK_THROWS_AS((void)post_post_sweep(ex.post, ex.singular, ex.correspondence, 1.0,
                                          ex.post.t_surgery - 1.0, cfg),
                    std::invalid_argument);
}

TEST_CASE("sweep config validation") {
    SweepConfig cfg;
    cfg.j_set = {4, 2};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SweepConfig{};
    cfg.kappa = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SweepConfig{};
    cfg.omega_set = {0.1, 0.2};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
