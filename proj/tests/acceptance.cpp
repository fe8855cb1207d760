// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "neckflow/current.hpp"
#include "neckflow/flow.hpp"
#include "neckflow/forward.hpp"
#include "neckflow/geodesic.hpp"
#include "neckflow/harness.hpp"
#include "neckflow/profile.hpp"
#include "neckflow/swif.hpp"
#include "testutil.hpp"

using namespace neckflow;

namespace {

int failures = 0;

void report(int criterion, bool pass, const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char detail[512];
    std::vsnprintf(detail, sizeof detail, fmt, args);
    va_end(args);
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail);
    std::fflush(stdout);
    if (!pass) ++failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// ---- 1: shrinking-sphere radius law ------------------------------------------

void criterion_1() {
    const double t0 = now_seconds();
    double worst = 0.0;
    for (int n : {2, 3}) {
        flow::SolverConfig cfg;
        cfg.nodes = 512;
        auto st = flow::make_state(geom::make_round_sphere(n, 1.0, 512));
        const double t_end = 0.4 / (2.0 * n);
        std::vector<double> samples;
        for (int k = 1; k <= 4; ++k) samples.push_back(t_end * k / 4.0);
        const auto traj = flow::run_until(st, cfg, flow::StopSpec::at_time(t_end), samples);
        for (const auto& s : traj.samples) {
            if (s.t <= 0.0) continue;
            const double expect = std::sqrt(1.0 - 2.0 * n * s.t);
            const double got = *std::max_element(s.profile.psi.begin(), s.profile.psi.end());
            worst = std::max(worst, std::abs(got - expect) / expect);
        }
    }
    const double elapsed = now_seconds() - t0;
    report(1, worst < 1e-3 && elapsed < 10.0,
           "sphere radius law rel err %.2e (tol 1e-3), %.1f s (< 10 s), n in {2,3}, 512 nodes",
           worst, elapsed);
}

// ---- 2: cylinder neck law ------------------------------------------------------

void criterion_2() {
    double worst = 0.0;
    for (int n : {2, 3}) {
        flow::SolverConfig cfg;
        cfg.nodes = 128;
        cfg.periodic = true;
        auto st = flow::make_state(geom::make_cylinder_band(n, 1.0, 128));
        const double t_end = 0.3 / (2.0 * (n - 1));
        const auto traj =
            flow::run_until(st, cfg, flow::StopSpec::at_time(t_end), {t_end / 2, t_end});
        for (const auto& s : traj.samples) {
            if (s.t <= 0.0) continue;
            const double expect = std::sqrt(1.0 - 2.0 * (n - 1) * s.t);
            worst = std::max(worst, std::abs(s.profile.psi[13] - expect) / expect);
        }
    }
    report(2, worst < 1e-3, "cylinder neck law rel err %.2e (tol 1e-3)", worst);
}

// ---- 3: distance oracles --------------------------------------------------------

void criterion_3() {
    // (a) 100 round-sphere pairs against the closed form
    const auto sphere = geom::make_round_sphere(2, 1.0, 1025);
    geom::ProfileGeometry geo(sphere, 512);
    SplitMix64 rng(12345);
    double worst_abs = 0.0;
    for (int src = 0; src < 10; ++src) {
        const double s1 = rng.uniform(0.15, kPi - 0.15);
        const auto field = geo.field_from_row_uncached(geo.row_near(s1));
        const double s1s = geo.strip().s[geo.row_near(s1)];
        for (int q = 0; q < 10; ++q) {
            const double s2 = rng.uniform(0.15, kPi - 0.15);
            const double dth = rng.uniform(0.0, kPi);
            const double got = geo.solver().sample(field, s2, dth);
            const double exact = testutil::round_sphere_distance(1.0, s1s, s2, dth);
            worst_abs = std::max(worst_abs, std::abs(got - exact));
        }
    }

    // (b) neck profile against Dijkstra on a 2000 x 1000 graph
    const auto neck = geom::make_neck_profile(2, 501, 1.0, 0.8, 4);
    geom::ProfileGeometry ngeo(neck, 1000, 4);  // 2001 meridian rows x 1000 angles
    testutil::GridDijkstra oracle(ngeo.strip().s, ngeo.strip().psi, 1000);
    const std::size_t src = ngeo.row_near(0.4 * ngeo.length());
    const auto ref = oracle.solve(src);
    const auto field = ngeo.field_from_row_uncached(src);
    double worst_rel = 0.0;
    for (std::size_t i = 10; i + 10 < ngeo.strip().rows(); i += 37) {
        for (std::size_t j = 0; j < ngeo.strip().cols(); j += 53) {
            const double a = field[ngeo.strip().index(i, j)];
            const double b = ref[i * ngeo.strip().cols() + j];
            if (b > 0.3) worst_rel = std::max(worst_rel, std::abs(a - b) / b);
        }
    }
    report(3, worst_abs < 1e-2 && worst_rel < 1e-2,
           "sphere closed form abs err %.2e (tol 1e-2) over 100 pairs; "
           "Dijkstra 2000x1000 rel err %.2e (tol 1e-2)",
           worst_abs, worst_rel);
}

// ---- shared AK-class experiment -------------------------------------------------

struct AcceptanceLab {
    harness::ExperimentResult ex;
    flow::SolverConfig solver;
    harness::SweepConfig sweep;
    double experiment_seconds = 0.0;
};

const AcceptanceLab& lab() {
    static AcceptanceLab* L = [] {
        auto* out = new AcceptanceLab;
        out->solver.nodes = 513;  // 512 meridian cells; an odd node count keeps
                                  // the reflection-symmetric pinch on a node
        out->solver.psi_stop = 1e-7;
        out->sweep.k_max = 22;
        out->sweep.j_set = {2, 3, 4, 6, 8, 16, 32};
        out->sweep.theta_nodes = 64;
        out->sweep.source_stride = 4;
        out->sweep.kappa = 1.0;  // L(t) = sqrt(t - T)
        fwd::SurgeryConfig surgery;
        surgery.omega = std::pow(2.0, -8);
        const double t0 = now_seconds();
        out->ex = harness::run_experiment(geom::make_neck_profile(2, 513, 1.0, 0.8, 4),
                                          out->solver, surgery, out->sweep);
        out->experiment_seconds = now_seconds() - t0;
        return out;
    }();
    return *L;
}

// ---- 4: neckpinch formation ------------------------------------------------------

void criterion_4() {
    // dedicated run: the ratio over the final decade of T_hat - t needs the
    // last samples inside double-precision territory
    flow::SolverConfig cfg;
    cfg.nodes = 513;
    cfg.psi_stop = 1e-6;
    const auto traj = flow::run_until(
        flow::make_state(geom::make_neck_profile(2, 513, 1.0, 0.8, 4)), cfg,
        flow::StopSpec::at_pinch());
    const double T = traj.t_hat;
    const bool finite = traj.final_status.phase == flow::Phase::PinchDetected &&
                        std::isfinite(T) && T > 0.0;

    double ratio_lo = 1e9, ratio_hi = -1e9;
    const auto& hist = traj.pinch_history;
    const double dt_end = std::max(T - hist.back().first, 1e-300);
    int counted = 0;
    for (const auto& [t, pm] : hist) {
        const double dt = T - t;
        if (dt < dt_end || dt > 10.0 * dt_end) continue;
        const double ratio = pm / std::sqrt(2.0 * (2 - 1) * dt);
        ratio_lo = std::min(ratio_lo, ratio);
        ratio_hi = std::max(ratio_hi, ratio);
        ++counted;
    }

    // AK upper-bound profile: psi <= cyl + C sigma^2 / (-log(T-t) sqrt(T-t))
    // over |sigma| <= 2 sqrt((T-t) log(1/(T-t))), on schedule states whose
    // sigma window spans at least four neck cells. The fitted C is the
    // smallest constant making the inequality hold over every tested (sigma,
    // t); the content of the check is that this C is a modest O(1) constant.
    double c_fit = 0.0;
    int tested_pairs = 0, tested_states = 0;
    const auto& ex = lab().ex;
    for (const auto& st : ex.pre.samples) {
        const double dt = ex.t_hat - st.t;
        if (dt <= 0.0 || dt > 3e-3 || -std::log(dt) <= 1.0) continue;
        const auto arc = geom::arclength(st.profile);
        const std::size_t neck = st.min_index;
        double ds_neck = 0.0;
        for (std::size_t i = std::max<std::size_t>(neck, 3) - 3;
             i + 3 < arc.s.size() && i <= neck + 3; ++i)
            ds_neck = std::max(ds_neck, arc.s[i + 1] - arc.s[i]);
        const double cyl = std::sqrt(2.0 * (2 - 1) * dt);
        const double window = 2.0 * std::sqrt(dt * std::log(1.0 / dt));
        if (window < 4.0 * ds_neck) continue;  // below grid resolution
        const double denom = std::log(1.0 / dt) * std::sqrt(dt);
        int here = 0;
        for (std::size_t i = 1; i + 1 < arc.s.size(); ++i) {
            const double sigma = arc.s[i] - arc.s[neck];
            if (std::abs(sigma) > window || sigma == 0.0) continue;
            const double excess = arc.psi[i] - cyl;
            if (excess > 0.0) c_fit = std::max(c_fit, excess * denom / (sigma * sigma));
            ++here;
        }
        tested_pairs += here;
        if (here > 0) ++tested_states;
    }

    const bool ratio_ok = counted >= 5 && ratio_lo > 0.8 && ratio_hi < 1.25;
    const bool profile_ok =
        std::isfinite(c_fit) && c_fit > 0.0 && c_fit < 10.0 && tested_states >= 3;
    report(4, finite && ratio_ok && profile_ok && tested_pairs >= 20,
           "T_hat = %.5f; neck ratio in [%.3f, %.3f] over the final decade "
           "(need [0.8, 1.25]); AK profile bound holds with fitted C = %.2f "
           "over %d window samples in %d states",
           T, ratio_lo, ratio_hi, c_fit, tested_pairs, tested_states);
}

// ---- 5: distortion law -------------------------------------------------------------

void criterion_5() {
    const auto& ex = lab().ex;
    const auto& cfg = lab().sweep;
    // sup-sampled |d_t - d_T| at fixed j = 8, k = 3..10 of the schedule
    std::map<long long, double> lam;  // t key -> lambda at j = 8
    for (const auto& row : ex.pre_sweep.rows)
        if (row.j_or_omega == 8) lam[static_cast<long long>(row.t * 1e12)] = row.report.lambda;
    const double d0 = cfg.delta0_frac * ex.t_hat;
    std::vector<double> dts, lams;
    for (int k = 3; k <= 10; ++k) {
        const double t = ex.t_hat - d0 * std::pow(2.0, -k);
        // nearest recorded row
        double best_gap = 1e300, best_lam = 0.0;
        for (const auto& [key, l] : lam) {
            const double gap = std::abs(key * 1e-12 - t);
            if (gap < best_gap) {
                best_gap = gap;
                best_lam = l;
            }
        }
        if (best_lam > 0.0) {
            dts.push_back(ex.t_hat - t);
            lams.push_back(best_lam);
        }
    }
    bool ok = dts.size() >= 7;
    double slope = 0.0;
    if (ok) {
        slope = loglog_slope(dts, lams);
        ok = slope >= 0.45;
    }
    report(5, ok, "sup-sampled distortion log-log slope %.3f over k = 3..10 (need >= 0.45)",
           slope);
}

// ---- 6 and 7: pre- and post-surgery continuity ---------------------------------------

void criterion_6() {
    const auto& L = lab();
    const auto& sw = L.ex.pre_sweep;
    const double target = 0.05 * sw.reference_volume;
    const bool ok = sw.tail_monotone && sw.final_bound < target &&
                    L.experiment_seconds < 600.0;
    report(6, ok,
           "pre-surgery minimized bound: tail monotone = %d, final %.4f < %.4f "
           "(5%% of Vol(T)); experiment %.0f s (< 600 s), 512 cells",
           (int)sw.tail_monotone, sw.final_bound, target, L.experiment_seconds);
}

void criterion_7() {
    const auto& sw = lab().ex.post_sweep;
    const double target = 0.05 * sw.reference_volume;
    const bool ok = sw.tail_monotone && sw.final_bound < target;
    report(7, ok,
           "post-surgery (omega = 2^-8, L = sqrt(t-T)) bound: tail monotone = %d, "
           "final %.4f < %.4f",
           (int)sw.tail_monotone, sw.final_bound, target);
}

// ---- 8: densities -----------------------------------------------------------------

void criterion_8() {
    const auto& ex = lab().ex;
    const auto refined = flow::cusp_refined_profile(ex.singular);
    cur::MetricMeasureSpace space(refined, 64);
    const auto arc = geom::arclength(refined);
    double s_pinch = 0.0;
    for (std::size_t i = 1; i + 1 < refined.size(); ++i)
        if (refined.psi[i] == 0.0) s_pinch = arc.s[i];

    std::vector<double> radii;
    for (int k = 0; k <= 10; ++k) radii.push_back(1e-2 * std::pow(4.0, -0.6 * k));
    const auto pinch = cur::lower_density(space, s_pinch, radii);
    bool decreasing = true;
    for (std::size_t i = 1; i < pinch.sequence.size(); ++i)
        decreasing = decreasing && pinch.sequence[i].value < pinch.sequence[i - 1].value;
    const double final_pinch = pinch.sequence.back().value;

    double smooth_worst = 0.0;
    for (double frac : {0.2, 0.35, 0.65, 0.8}) {
        const auto rep = cur::lower_density(space, frac * arc.length(), {0.1, 0.08, 0.06});
        for (const auto& d : rep.sequence)
            if (d.reliable) smooth_worst = std::max(smooth_worst, std::abs(d.value - 1.0));
    }

    // thread interior point on the post-surgery double space
    const double t1 = ex.post.sheet_lo.samples.front().t;
    const double Lth = ex.post.thread_length(std::max(t1, ex.t_hat + 1e-8));
    cur::DoubleSphereSpace X(ex.surgery.sheet_lo, ex.surgery.sheet_hi, std::max(Lth, 1e-4), 48);
    const double r_th = 0.2 * std::max(Lth, 1e-4);
    const double beta = unit_ball_volume(X.dimension());
    const double thread_density =
        X.ball_volume({0, 0.5 * std::max(Lth, 1e-4), 0.0}, r_th) /
        (beta * std::pow(r_th, X.dimension()));

    const bool ok = decreasing && final_pinch < 0.05 && smooth_worst < 0.05 &&
                    thread_density < 1e-9;
    report(8, ok,
           "pinch density strictly decreasing = %d, final %.4f (< 0.05); smooth "
           "|density - 1| max %.4f (< 0.05); thread density %.1e (-> 0)",
           (int)decreasing, final_pinch, smooth_worst, thread_density);
}

// ---- 9: volume convergence -----------------------------------------------------------

void criterion_9() {
    const auto& v = lab().ex.volumes;
    const bool ok = v.pre_limit_gap < 0.02 && v.post_limit_gap < 0.02 && v.pre_alpha >= 0.45;
    report(9, ok,
           "two-sided volume gaps %.4f / %.4f (tol 0.02 each); pre-side power fit "
           "alpha = %.2f (>= 0.45)",
           v.pre_limit_gap, v.post_limit_gap, v.pre_alpha);
}

// ---- 10: formula identity fuzz --------------------------------------------------------

namespace oracle {
constexpr long double kPiL = 3.14159265358979323846264338328L;
long double width_a(long double eps, long double maxd, long double delta) {
    return (1.0L + delta) * acosl(1.0L / (1.0L + eps)) / kPiL * maxd;
}
long double height_h(long double lam, long double maxd) {
    return sqrtl(lam * (maxd + lam / 4.0L));
}
long double height_hbar(long double h, long double eps, long double d1, long double d2) {
    const long double e = sqrtl(eps * eps + 2.0L * eps);
    return std::max({h, e * d1, e * d2});
}
long double smooth_time(long double C, int n, long double t1, long double t2, long double d1,
                        long double d2) {
    const long double arg = sqrtl(expl(sqrtl((long double)n) * C * (t1 - t2)));
    return acosl(std::min(arg, 1.0L)) / kPiL * std::max(d1, d2);
}
long double squeeze(long double eps, long double d1, long double d2, long double v1,
                    long double v2, long double a1, long double a2, long double delta) {
    const long double w = acosl(1.0L / (1.0L + eps)) / kPiL;
    return std::max((1.0L + delta) * w * d2, (1.0L + delta) * w * d1) * (v1 + v2 + a1 + a2);
}
}  // namespace oracle

void criterion_10() {
    SplitMix64 rng(987654);
    double worst_id = 0.0;
    bool mono_ok = true, scale_ok = true;
    for (int k = 0; k < 1000; ++k) {
        const double eps = rng.uniform(0.0, 0.6);
        const double lam = rng.uniform(0.0, 0.4);
        const double d1 = rng.uniform(0.05, 4.0), d2 = rng.uniform(0.05, 4.0);
        const double v1 = rng.uniform(0.0, 40.0), v2 = rng.uniform(0.0, 40.0);
        const double a1 = rng.uniform(0.0, 6.0), a2 = rng.uniform(0.0, 6.0);
        const double r1 = rng.uniform(0.0, 3.0), r2 = rng.uniform(0.0, 3.0);
        const double g1 = rng.uniform(0.0, 1.5), g2 = rng.uniform(0.0, 1.5);
        const auto rep =
            swif::swif_bound(eps, lam, d1, d2, v1, v2, a1, a2, r1, r2, g1, g2, 1e-6);
        const long double a = oracle::width_a(eps, std::max(d1, d2), 1e-6L);
        const long double h = oracle::height_h(lam, std::max(d1, d2));
        const long double hb = oracle::height_hbar(h, eps, d1, d2);
        const long double sw = (2.0L * hb + a) * (v1 + v2 + a1 + a2) + r1 + r2;
        const long double gh = a + 2.0L * hb + std::max(g1, g2);
        worst_id = std::max(worst_id, std::abs(rep.swif_bound - (double)sw) /
                                          (1.0 + std::abs((double)sw)));
        worst_id = std::max(worst_id, std::abs(rep.gh_bound - (double)gh) /
                                          (1.0 + std::abs((double)gh)));

        const double st = swif::smooth_time_bound(eps, 3, 0.0, lam + 1e-6, d1, d2);
        const long double sto = oracle::smooth_time(eps, 3, 0.0L, lam + 1e-6, d1, d2);
        worst_id = std::max(worst_id,
                            std::abs(st - (double)sto) / (1.0 + std::abs((double)sto)));
        const double sq = swif::squeeze_bound(eps, d1, d2, v1, v2, a1, a2, 1e-6);
        const long double sqo = oracle::squeeze(eps, d1, d2, v1, v2, a1, a2, 1e-6L);
        worst_id = std::max(worst_id,
                            std::abs(sq - (double)sqo) / (1.0 + std::abs((double)sqo)));

        // monotonicity
        const auto up =
            swif::swif_bound(eps + 0.01, lam + 0.01, d1, d2, v1 + 1.0, v2, a1, a2, r1 + 0.1,
                             r2, g1, g2, 1e-6);
        mono_ok = mono_ok && up.swif_bound >= rep.swif_bound - 1e-12;

        // scaling: the metric scaled by c^2 maps lambda, diameters, gaps by c,
        // m-volumes by c^3, boundary areas by c^2
        const double c = rng.uniform(1.05, 2.5);
        const auto sc = swif::swif_bound(eps, c * lam, c * d1, c * d2, c * c * c * v1,
                                         c * c * c * v2, c * c * a1, c * c * a2,
                                         c * c * c * r1, c * c * c * r2, c * g1, c * g2, 1e-6);
        const long double ac = oracle::width_a(eps, c * std::max(d1, d2), 1e-6L);
        const long double hc = oracle::height_h(c * lam, c * std::max(d1, d2));
        const long double hbc = oracle::height_hbar(hc, eps, c * d1, c * d2);
        const long double full =
            (2.0L * hbc + ac) * (c * c * c * v1 + c * c * c * v2 + c * c * a1 + c * c * a2) +
            c * c * c * r1 + c * c * c * r2;
        scale_ok = scale_ok && std::abs(sc.swif_bound - (double)full) <=
                                   1e-12 * (1.0 + std::abs((double)full));
    }
    const bool ok = worst_id < 1e-12 && mono_ok && scale_ok;
    report(10, ok,
           "1000-case fuzz: identity err %.1e (tol 1e-12), monotonicity %s, scaling %s",
           worst_id, mono_ok ? "ok" : "VIOLATED", scale_ok ? "ok" : "VIOLATED");
}

// ---- 11: triangle fuzz on D(t) ----------------------------------------------------------

void criterion_11() {
    const auto& ex = lab().ex;
    // evolved double space midway through the post schedule
    const auto& lo = ex.post.sheet_lo.samples;
    const auto& hi = ex.post.sheet_hi.samples;
    const std::size_t mid = lo.size() / 2;
    const double t = lo[mid].t;
    cur::DoubleSphereSpace X(lo[mid].profile, hi[mid].profile, ex.post.thread_length(t), 48);
    const double tol = 2.0 * std::max(X.sheet1().geometry().tolerance(),
                                      X.sheet2().geometry().tolerance());
    X.sheet1().geometry().set_cache_limit(320);
    X.sheet2().geometry().set_cache_limit(320);
    SplitMix64 rng(5150);
    using P = cur::DoubleSphereSpace::Point;
    // points drawn from a fixed set of meridian rows per sheet so the field
    // cache carries the load
    auto random_point = [&](int which) -> P {
        const auto& geo = which == 1 ? X.sheet1().geometry() : X.sheet2().geometry();
        const std::size_t rows = geo.strip().rows();
        const std::size_t row = 2 + 16 * rng.uniform_int(0, (int)((rows - 5) / 16));
        return {which, geo.strip().s[row], rng.uniform(0.0, kPi)};
    };
    int violations = 0;
    for (int k = 0; k < 10000; ++k) {
        const P a = random_point(rng.uniform_int(1, 2));
        const P b = random_point(rng.uniform_int(1, 2));
        const P c = random_point(rng.uniform_int(1, 2));
        const double ab = X.metric(a, b);
        const double bc = X.metric(b, c);
        const double ac = X.metric(a, c);
        if (ac > ab + bc + tol) ++violations;
        if (std::abs(X.metric(b, a) - ab) > tol) ++violations;
    }
    report(11, violations == 0,
           "D(t) triangle fuzz on 10^4 triples: %d violations beyond tolerance %.3f",
           violations, tol);
}

// ---- 12: v-coordinate cross-checks --------------------------------------------------------

void criterion_12() {
    // roundtrip on smooth monotone caps
    double roundtrip = 0.0;
    for (double s_max : {0.7, 1.2}) {
        geom::ArclengthProfile cap;
        for (int i = 0; i < 801; ++i) {
            cap.s.push_back(s_max * i / 800.0);
            cap.psi.push_back(std::sin(cap.s.back()));
        }
        const auto vp = fwd::to_v(cap, 2);
        const auto back = fwd::from_v(vp);
        for (std::size_t i = 0; i < cap.s.size(); ++i) {
            roundtrip = std::max(roundtrip, std::abs(back.s[i] - cap.s[i]));
            roundtrip = std::max(roundtrip, std::abs(back.psi[i] - cap.psi[i]));
        }
    }

    // v(0) = 1 on every generated cap
    const auto& ex = lab().ex;
    double closure_err = 0.0;
    for (int k = 6; k <= 9; ++k) {
        fwd::SurgeryConfig cfg;
        cfg.omega = std::pow(2.0, -k);
        const auto sr = fwd::regularize(ex.singular, cfg);
        for (const bool hi_cap : {true, false}) {
            const auto& sheet = hi_cap ? sr.sheet_lo : sr.sheet_hi;
            const auto vm = fwd::measure_v_near_pole(sheet, hi_cap, 0.9 * cfg.cap_radius());
            closure_err =
                std::max(closure_err, std::abs(fwd::smooth_closure_value(vm) - 1.0));
        }
    }

    // outer-region asymptotic comparison at t - T = 1e-3; omega sized so the
    // capped flow lives past the comparison time
    fwd::SurgeryConfig cfg;
    cfg.omega = std::pow(2.0, -6);
    const auto sr = fwd::regularize(ex.singular, cfg);
    flow::SolverConfig solver = lab().solver;
    const std::vector<double> times = {ex.t_hat + 1e-3};
    const auto dtraj =
        fwd::evolve_double(sr.sheet_lo, sr.sheet_hi, ex.t_hat, solver, cfg, times);
    double median_err = 1e9;
    for (const auto& st : dtraj.sheet_lo.samples) {
        if (st.t - ex.t_hat < 0.9e-3) continue;
        const auto cmp = fwd::compare_asymptotics(st.profile, true, st.t, ex.t_hat, true,
                                                  1.3 * cfg.cap_radius());
        if (cmp.applicable) median_err = cmp.median_outer_error;
        break;
    }

    const bool ok = roundtrip <= 1e-8 && closure_err <= 1e-3 && median_err < 0.5;
    report(12, ok,
           "to_v/from_v roundtrip %.1e (tol 1e-8); cap closure |v(0)-1| %.1e (tol 1e-3); "
           "outer-window median err %.3f at t-T = 1e-3 (tol 0.5)",
           roundtrip, closure_err, median_err);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
