#pragma once

// Ricci flow of a rotationally symmetric profile, reduced by symmetry to
//
//     psi_t = psi_ss - (n-1)(1 - psi_s^2)/psi,      phi_t = n (psi_ss/psi) phi,
//
// with s-derivatives taken through phi on the fixed x grid. Explicit Euler
// under a parabolic CFL on the arclength spacing, plus a reaction-limited cap
// so the neck collapse stays resolved in time. Includes pinch detection, the
// singular-time fit, and extrapolation of the singular profile.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "neckflow/grid.hpp"
#include "neckflow/profile.hpp"

namespace neckflow::flow {

using geom::ArclengthProfile;
using geom::WarpedProfile;

enum class Phase { Smooth, PinchDetected, Stopped };

struct FlowStatus {
    Phase phase = Phase::Smooth;
    double t_hat = 0.0;   // singular-time estimate, valid once PinchDetected
    double x_neck = 0.0;  // neck location, valid once PinchDetected
    std::string diagnostic;
};

struct SolverConfig {
    std::size_t nodes = 513;
    double safety = 0.4;           // explicit step <= safety * min(ds)^2 / 2
    double reaction_safety = 0.05; // extra cap: dt <= rs * psi_min^2 / (2(n-1))
    double psi_stop = 1e-6;        // pinch threshold
    long max_steps = 200000000;
    bool periodic = false;         // cylinder test harness; no poles
    std::size_t pole_blend_cells = 6;  // nodes near a pole using the regularized closure
    int fit_samples = 20;          // T_hat fit uses this many samples ...
    double fit_window = 10.0;      // ... spread over psi_min below the fit ceiling,
                                   // max(fit_window * psi_stop, 0.05 * initial neck)

    void validate() const {
        if (!(safety > 0.0 && safety <= 0.5))
            throw std::invalid_argument("SolverConfig: safety must lie in (0, 0.5]");
        if (!(psi_stop > 0.0)) throw std::invalid_argument("SolverConfig: psi_stop must be > 0");
        if (!(reaction_safety > 0.0 && reaction_safety <= 0.5))
            throw std::invalid_argument("SolverConfig: reaction_safety must lie in (0, 0.5]");
        if (nodes < 17) throw std::invalid_argument("SolverConfig: need >= 17 nodes");
    }
};

struct FlowState {
    double t = 0.0;
    WarpedProfile profile;
    FlowStatus status;
    double psi_min = 0.0;      // interior minimum (excluding poles)
    std::size_t min_index = 0;
};

struct PinchInfo {
    double x_neck = 0.0;
    double psi_min = 0.0;
    double t_hat = 0.0;
};

namespace detail {

inline void interior_min(const WarpedProfile& p, bool periodic, double& value,
                         std::size_t& index) {
    value = std::numeric_limits<double>::infinity();
    index = 0;
    const std::size_t lo = periodic ? 0 : 1;
    const std::size_t hi = periodic ? p.size() : p.size() - 1;
    for (std::size_t i = lo; i < hi; ++i) {
        if (p.psi[i] < value) {
            value = p.psi[i];
            index = i;
        }
    }
}

struct Derivatives {
    std::vector<double> psi_s, psi_ss, q;  // q = psi_ss / psi with pole limit
};

// Compact conservative stencil through the arclength map: ds_{i+1/2} is the
// trapezoid arclength of one x-cell.
inline Derivatives s_derivatives(const WarpedProfile& p, bool periodic) {
    const std::size_t n = p.size();
    Derivatives d;
    d.psi_s.assign(n, 0.0);
    d.psi_ss.assign(n, 0.0);
    d.q.assign(n, 0.0);
    auto ds_half = [&](std::size_t i) {  // arclength of cell [i, i+1]
        return 0.5 * (p.phi[i] + p.phi[i + 1]) * (p.x[i + 1] - p.x[i]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        double hm, hp, psim, psip;
        if (i == 0) {
            if (!periodic) continue;
            hm = ds_half(n - 2);
            hp = ds_half(0);
            psim = p.psi[n - 2];
            psip = p.psi[1];
        } else if (i == n - 1) {
            if (!periodic) continue;
            hm = ds_half(n - 2);
            hp = ds_half(0);
            psim = p.psi[n - 2];
            psip = p.psi[1];
        } else {
            hm = ds_half(i - 1);
            hp = ds_half(i);
            psim = p.psi[i - 1];
            psip = p.psi[i + 1];
        }
        const double psi0 = p.psi[i];
        d.psi_s[i] = (hm * hm * psip - hp * hp * psim + (hp * hp - hm * hm) * psi0) /
                     (hp * hm * (hp + hm));
        d.psi_ss[i] = 2.0 * ((psip - psi0) / hp - (psi0 - psim) / hm) / (hp + hm);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (p.psi[i] > 0.0) {
            d.q[i] = d.psi_ss[i] / p.psi[i];
        }
    }
    if (!periodic) {
        // pole limit of psi_ss / psi from the adjacent interior node
        d.q[0] = d.q[1];
        d.q[n - 1] = d.q[n - 2];
        d.psi_s[0] = 1.0;
        d.psi_s[n - 1] = -1.0;
    }
    return d;
}

inline double min_ds(const WarpedProfile& p) {
    double out = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        out = std::min(out, 0.5 * (p.phi[i] + p.phi[i + 1]) * (p.x[i + 1] - p.x[i]));
    return out;
}

// Near smooth poles the reaction (1 - psi_s^2)/psi cancels catastrophically;
// those nodes use the limit form instead and carry no 1/psi stiffness.
inline bool near_pole(const WarpedProfile& p, bool periodic, std::size_t blend, std::size_t i) {
    if (periodic) return false;
    return (p.pole_lo && i <= blend) || (p.pole_hi && i + blend + 1 >= p.size());
}

// Smallest psi among nodes evolved with the direct reaction term.
inline double reaction_floor(const WarpedProfile& p, bool periodic, std::size_t blend) {
    double out = std::numeric_limits<double>::infinity();
    const std::size_t lo = periodic ? 0 : 1;
    const std::size_t hi = periodic ? p.size() : p.size() - 1;
    for (std::size_t i = lo; i < hi; ++i) {
        if (near_pole(p, periodic, blend, i)) continue;
        out = std::min(out, p.psi[i]);
    }
    return out;
}

}  // namespace detail

inline double stable_dt(const FlowState& st, const SolverConfig& cfg) {
    const double h = detail::min_ds(st.profile);
    double dt = cfg.safety * h * h / 2.0;
    const double floor =
        detail::reaction_floor(st.profile, cfg.periodic, cfg.pole_blend_cells);
    if (std::isfinite(floor) && floor > 0.0 && st.profile.n > 1) {
        dt = std::min(dt, cfg.reaction_safety * floor * floor / (2.0 * (st.profile.n - 1)));
    }
    return dt;
}

// One explicit step, optionally capped so a sample or stop time is hit
// exactly. Poles stay at psi = 0; a NaN or nonpositive interior psi flags the
// state Stopped with a diagnostic instead of throwing.
inline FlowState step(const FlowState& state, const SolverConfig& cfg,
                      double dt_cap = std::numeric_limits<double>::infinity()) {
    cfg.validate();
    if (state.status.phase == Phase::Stopped)
        throw std::logic_error("step: flow already stopped");
    const WarpedProfile& p = state.profile;
    const std::size_t n = p.size();
    const double nn = p.n;
    const auto d = detail::s_derivatives(p, cfg.periodic);
    const double dt = std::min(stable_dt(state, cfg), std::max(dt_cap, 0.0));

    FlowState out = state;
    out.t = state.t + dt;
    WarpedProfile& q = out.profile;
    bool bad = false;
    const std::size_t lo = cfg.periodic ? 0 : 1;
    const std::size_t hi = cfg.periodic ? n : n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        double dpsi = 0.0;
        if (i >= lo && i < hi && p.psi[i] > 0.0) {
            const double react =
                detail::near_pole(p, cfg.periodic, cfg.pole_blend_cells, i)
                    ? -d.psi_ss[i]
                    : (1.0 - d.psi_s[i] * d.psi_s[i]) / p.psi[i];
            dpsi = d.psi_ss[i] - (nn - 1.0) * react;
        }
        q.psi[i] = p.psi[i] + dt * dpsi;
        q.phi[i] = p.phi[i] * (1.0 + dt * nn * d.q[i]);
        if (!std::isfinite(q.psi[i]) || !std::isfinite(q.phi[i]) || q.phi[i] <= 0.0) bad = true;
        if (i >= lo && i < hi && q.psi[i] <= 0.0) bad = true;
    }
    if (cfg.periodic && n > 1) {
        q.psi[n - 1] = q.psi[0];
        q.phi[n - 1] = q.phi[0];
    }
    if (bad) {
        out.status.phase = Phase::Stopped;
        out.status.diagnostic = "step produced NaN or nonpositive psi/phi";
        return out;
    }
    detail::interior_min(q, cfg.periodic, out.psi_min, out.min_index);
    return out;
}

namespace detail {

inline std::optional<double> zero_crossing_fit(const std::deque<std::pair<double, double>>& hist,
                                               double ceiling, std::size_t want) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < hist.size(); ++i)
        if (hist[i].second < ceiling) idx.push_back(i);
    if (idx.size() < 5) return std::nullopt;
    std::vector<double> ts, ys;
    const std::size_t stride = std::max<std::size_t>(1, idx.size() / std::max<std::size_t>(want, 5));
    for (std::size_t q = 0; q < idx.size(); q += stride) {
        ts.push_back(hist[idx[q]].first);
        ys.push_back(hist[idx[q]].second * hist[idx[q]].second);
    }
    ts.push_back(hist[idx.back()].first);
    ys.push_back(hist[idx.back()].second * hist[idx.back()].second);
    const LinearFit f = fit_line(ts, ys);
    if (!(f.slope < 0.0)) return std::nullopt;
    return -f.intercept / f.slope;
}

}  // namespace detail

// T_hat as the extrapolated zero of psi_min^2 against t. A wide-window fit
// pins the scale robustly; a second fit over the deepest decades then removes
// the shallow-end bias, which would otherwise dominate the final decade of
// T_hat - t.
inline std::optional<double> fit_singular_time(const std::deque<std::pair<double, double>>& hist,
                                               const SolverConfig& cfg, double ceiling) {
    const auto want = static_cast<std::size_t>(std::max(cfg.fit_samples, 5));
    const auto wide = detail::zero_crossing_fit(hist, ceiling, want);
    if (!wide) return std::nullopt;
    const double t_last = hist.back().first;
    const double psi_last = hist.back().second;
    // the deepest octave: there the discrete tip follows the soliton law to
    // a part in 10^3, so the zero crossing carries almost no bias
    const auto deep = detail::zero_crossing_fit(hist, 8.0 * psi_last, want);
    if (deep && *deep > t_last && *deep < *wide + 10.0 * (*wide - t_last)) return deep;
    return wide;
}

// Pinch test on the current state: an interior local minimum of psi that has
// dropped below psi_stop. Needs the psi_min history for the T_hat fit.
inline std::optional<PinchInfo> detect_pinch(const FlowState& st, const SolverConfig& cfg,
                                             const std::deque<std::pair<double, double>>& hist,
                                             double fit_ceiling = 0.0) {
    const WarpedProfile& p = st.profile;
    if (st.psi_min >= cfg.psi_stop) return std::nullopt;
    const std::size_t i = st.min_index;
    if (!cfg.periodic) {
        // require a genuine interior local minimum, not a pole approach
        if (i == 0 || i + 1 >= p.size()) return std::nullopt;
        if (!(p.psi[i] <= p.psi[i - 1] && p.psi[i] <= p.psi[i + 1])) return std::nullopt;
        if (p.psi[i] > 0.5 * *std::max_element(p.psi.begin(), p.psi.end())) return std::nullopt;
    }
    PinchInfo info;
    info.x_neck = p.x[i];
    info.psi_min = st.psi_min;
    if (fit_ceiling <= 0.0) fit_ceiling = cfg.fit_window * cfg.psi_stop;
    const auto t_hat = fit_singular_time(hist, cfg, fit_ceiling);
    info.t_hat = t_hat.value_or(st.t);
    return info;
}

// Metric sandwich factor of the Lipschitz distance estimate under a curvature
// bound K: g(t1) <= e^{sqrt(n) K (t2 - t1)} g(t2) and symmetrically.
inline double lipschitz_factor(double K, int n, double t1, double t2) {
    if (t1 > t2) throw std::invalid_argument("lipschitz_factor: t1 must be <= t2");
    if (K < 0.0) throw std::invalid_argument("lipschitz_factor: K must be >= 0");
    return std::exp(std::sqrt(static_cast<double>(n)) * K * (t2 - t1));
}

struct StopSpec {
    enum class Kind { Time, Pinch };
    Kind kind = Kind::Pinch;
    double time = 0.0;
    bool stop_on_pinch = true;  // in Time mode, also stop on a detected pinch
    static StopSpec at_time(double t, bool stop_on_pinch = true) {
        return {Kind::Time, t, stop_on_pinch};
    }
    static StopSpec at_pinch() { return {Kind::Pinch, 0.0, true}; }
};

struct Trajectory {
    std::vector<FlowState> samples;             // states at requested times
    std::vector<FlowState> tail;                // late states kept for extrapolation
    std::deque<std::pair<double, double>> pinch_history;  // (t, psi_min)
    FlowStatus final_status;
    double t_hat = 0.0;
    std::size_t neck_index = 0;
    double t_end = 0.0;

    const FlowState& last() const {
        if (!tail.empty()) return tail.back();
        if (!samples.empty()) return samples.back();
        throw std::logic_error("Trajectory: empty");
    }
};

// Drive the flow until the stop condition, storing states at the requested
// sample times (hit within one step) plus a geometric tail of snapshots as
// psi_min crosses decades, for the singular-profile fit.
inline Trajectory run_until(const FlowState& initial, const SolverConfig& cfg, StopSpec stop,
                            std::vector<double> sample_times = {}) {
    cfg.validate();
    std::sort(sample_times.begin(), sample_times.end());
    Trajectory traj;
    FlowState st = initial;
    detail::interior_min(st.profile, cfg.periodic, st.psi_min, st.min_index);
    const double fit_ceiling =
        std::max(cfg.fit_window * cfg.psi_stop, 0.05 * st.psi_min);
    std::size_t next_sample = 0;
    while (next_sample < sample_times.size() && sample_times[next_sample] <= st.t) {
        traj.samples.push_back(st);
        ++next_sample;
    }
    traj.pinch_history.emplace_back(st.t, st.psi_min);

    // snapshot thresholds: psi_min crossing psi_stop * 2^k, k = 12 .. 0
    std::vector<double> thresholds;
    for (int k = 12; k >= 0; --k) thresholds.push_back(cfg.psi_stop * std::pow(2.0, k));
    std::size_t next_threshold = 0;
    while (next_threshold < thresholds.size() && st.psi_min < thresholds[next_threshold])
        ++next_threshold;

    long steps = 0;
    while (true) {
        if (steps++ > cfg.max_steps) {
            traj.final_status.phase = Phase::Stopped;
            traj.final_status.diagnostic = "max_steps exceeded";
            break;
        }
        if (stop.kind == StopSpec::Kind::Time && st.t >= stop.time) {
            traj.final_status.phase = st.status.phase;
            break;
        }
        double dt_cap = std::numeric_limits<double>::infinity();
        if (next_sample < sample_times.size())
            dt_cap = std::min(dt_cap, sample_times[next_sample] - st.t);
        if (stop.kind == StopSpec::Kind::Time) dt_cap = std::min(dt_cap, stop.time - st.t);
        if (!(dt_cap > 1e-300)) dt_cap = std::numeric_limits<double>::infinity();
        FlowState nx = step(st, cfg, dt_cap);
        if (nx.status.phase == Phase::Stopped) {
            traj.final_status = nx.status;
            traj.tail.push_back(st);
            break;
        }
        while (next_sample < sample_times.size() && nx.t >= sample_times[next_sample]) {
            traj.samples.push_back(nx);
            ++next_sample;
        }
        // keep the psi_min history thinned: always record while below the fit
        // ceiling, else every 16th step
        if (nx.psi_min < fit_ceiling || steps % 16 == 0)
            traj.pinch_history.emplace_back(nx.t, nx.psi_min);
        if (traj.pinch_history.size() > 65536) traj.pinch_history.pop_front();
        while (next_threshold < thresholds.size() && nx.psi_min < thresholds[next_threshold]) {
            traj.tail.push_back(nx);
            ++next_threshold;
        }
        if (st.status.phase != Phase::PinchDetected) {
            const auto pinch = detect_pinch(nx, cfg, traj.pinch_history, fit_ceiling);
            if (pinch) {
                nx.status.phase = Phase::PinchDetected;
                nx.status.t_hat = pinch->t_hat;
                nx.status.x_neck = pinch->x_neck;
                traj.t_hat = pinch->t_hat;
                traj.neck_index = nx.min_index;
                if (traj.tail.empty() || traj.tail.back().t < nx.t) traj.tail.push_back(nx);
                traj.final_status = nx.status;
                st = std::move(nx);
                if (stop.kind == StopSpec::Kind::Pinch || stop.stop_on_pinch) break;
                continue;
            }
        } else {
            nx.status = st.status;  // status is monotone along a trajectory
        }
        st = std::move(nx);
    }
    traj.t_end = st.t;
    if (traj.samples.empty() || traj.samples.back().t < st.t) traj.samples.push_back(st);
    if (traj.final_status.phase == Phase::Smooth) traj.final_status = st.status;
    return traj;
}

// ---- singular profile ------------------------------------------------------

// Flags (M1)-(M8) for one sheet of the singular profile, s measured from the
// pinch, pole at s = l.
struct SheetChecks {
    bool m1_positive_interior = false;
    bool m2_zero_ends = false;
    bool m3_pole_slope = false;
    bool m4_cusp_square = false;   // psi^2 ~ ((n-1)/4) s^2 / (-log s), factor-2 window
    bool m5_cusp_product = false;  // psi psi' ~ ((n-1)/4) s / (-log s), factor-2 window
    bool m6_slope_bound = false;   // |psi'| <= 1 + tol
    bool m7_monotone_small = false;
    bool m8_bounded_a = false;
    double cusp_coeff = 0.0;   // fitted c in psi = c s (-log s)^{-1/2}
    double a_bound = 0.0;      // measured sup |a_T|, a_T = psi psi'' - psi'^2 + 1
    double r_sharp = 0.0;      // monotonicity scale of (M7)
    double pole_slope = 0.0;
    double max_abs_slope = 0.0;
};

struct SingularProfile {
    WarpedProfile profile;       // extrapolated (phi_T, psi_T) on the x grid
    ArclengthProfile arc;        // derived arclength profile
    std::size_t pinch_index = 0;
    double t_hat = 0.0;
    double extrapolation_rms = 0.0;  // residual of the sqrt-law fit
    SheetChecks sheet_lo;        // x < x_neck, s measured from the pinch
    SheetChecks sheet_hi;        // x > x_neck
    bool valid = false;          // (M1),(M2),(M3),(M6),(M7) on both sheets
    bool degenerate = false;     // psi_T == 0 on a whole band (cylinder harness)
};

namespace detail {

inline SheetChecks check_sheet(const std::vector<double>& s, const std::vector<double>& psi,
                               int n) {
    SheetChecks c;
    if (s.size() < 8) return c;
    const double l = s.back();
    c.m2_zero_ends = (std::abs(psi.front()) < 1e-8 * l) && (std::abs(psi.back()) < 1e-3 * l);
    const auto dpsi = derivative_nonuniform(s, psi);
    const auto ddpsi = second_derivative_nonuniform(s, psi);
    c.pole_slope = dpsi.back();
    c.m3_pole_slope = std::abs(std::abs(c.pole_slope) - 1.0) < 0.08;
    double max_slope = 0.0, max_a = 0.0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        max_slope = std::max(max_slope, std::abs(dpsi[i]));
        const double a = psi[i] * ddpsi[i] - dpsi[i] * dpsi[i] + 1.0;
        max_a = std::max(max_a, std::abs(a));
    }
    c.max_abs_slope = max_slope;
    c.a_bound = max_a;
    c.m6_slope_bound = max_slope <= 1.0 + 0.05;
    c.m8_bounded_a = std::isfinite(max_a);

    bool interior_pos = true;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) interior_pos = interior_pos && psi[i] > 0.0;
    c.m1_positive_interior = interior_pos;

    // (M7): smallest interior critical value; psi' must be nonzero below it
    double crit_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 2 < s.size(); ++i) {
        if ((dpsi[i] > 0) != (dpsi[i + 1] > 0)) crit_min = std::min(crit_min, psi[i]);
    }
    if (!std::isfinite(crit_min)) crit_min = *std::max_element(psi.begin(), psi.end());
    c.r_sharp = 0.5 * crit_min;
    c.m7_monotone_small = c.r_sharp > 0.0;

    // cusp fits over the resolved window: skip the innermost nodes, stay
    // well below the bump scale
    const double smin = 3.0 * (s[1] - s[0]);
    const double smax = 0.25 * l;
    std::vector<double> coeffs, prods;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] < smin || s[i] > smax || s[i] >= 1.0) continue;
        const double logf = -std::log(s[i]);
        if (logf <= 0.0) continue;
        if (psi[i] > 0.0) coeffs.push_back(psi[i] * std::sqrt(logf) / s[i]);
        prods.push_back(psi[i] * dpsi[i] * logf / s[i]);
    }
    const double target = std::sqrt((n - 1) / 4.0);
    if (!coeffs.empty()) {
        std::nth_element(coeffs.begin(), coeffs.begin() + coeffs.size() / 2, coeffs.end());
        c.cusp_coeff = coeffs[coeffs.size() / 2];
        c.m4_cusp_square = c.cusp_coeff > 0.5 * target && c.cusp_coeff < 2.0 * target;
    }
    if (!prods.empty()) {
        std::nth_element(prods.begin(), prods.begin() + prods.size() / 2, prods.end());
        const double med = prods[prods.size() / 2];
        const double ptarget = (n - 1) / 4.0;
        c.m5_cusp_product = med > 0.5 * ptarget && med < 2.0 * ptarget;
    }
    return c;
}

}  // namespace detail

// Pointwise extrapolation of (psi, phi) to T_hat: outside the neck both vary
// Lipschitz in sqrt(T - t), so each node gets a linear fit in sqrt(T_hat - t)
// over the trailing snapshots.
inline SingularProfile singular_profile(const Trajectory& traj) {
    if (traj.final_status.phase != Phase::PinchDetected)
        throw std::invalid_argument("singular_profile: trajectory did not pinch");
    if (traj.tail.size() < 3)
        throw std::invalid_argument("singular_profile: too few tail snapshots");
    const double T = traj.t_hat;
    const auto& states = traj.tail;
    const std::size_t nn = states.front().profile.size();

    SingularProfile out;
    out.t_hat = T;
    out.profile = states.back().profile;
    out.pinch_index = traj.neck_index;

    std::vector<double> xs, ys;
    double rms = 0.0;
    std::size_t rms_count = 0;
    for (std::size_t i = 0; i < nn; ++i) {
        xs.clear();
        ys.clear();
        for (const auto& st : states) {
            const double dt = T - st.t;
            if (dt <= 0.0) continue;
            xs.push_back(std::sqrt(dt));
            ys.push_back(st.profile.psi[i]);
        }
        double psi_T;
        if (xs.size() >= 3) {
            const auto f = fit_line(xs, ys);
            psi_T = f.intercept;
            rms += f.residual_rms * f.residual_rms;
            ++rms_count;
        } else {
            psi_T = states.back().profile.psi[i];
        }
        out.profile.psi[i] = std::max(psi_T, 0.0);

        xs.clear();
        ys.clear();
        for (const auto& st : states) {
            const double dt = T - st.t;
            if (dt <= 0.0) continue;
            xs.push_back(std::sqrt(dt));
            ys.push_back(st.profile.phi[i]);
        }
        if (xs.size() >= 3) {
            const auto f = fit_line(xs, ys);
            out.profile.phi[i] = f.intercept > 0.0 ? f.intercept : states.back().profile.phi[i];
        }
    }
    out.extrapolation_rms = rms_count ? std::sqrt(rms / rms_count) : 0.0;
    const double scale = *std::max_element(out.profile.psi.begin(), out.profile.psi.end());
    if (scale > 0.0 && out.extrapolation_rms > 0.02 * scale)
        throw std::runtime_error("singular_profile: extrapolation residual too large");
    out.profile.psi[out.pinch_index] = 0.0;
    out.profile.psi.front() = 0.0;
    out.profile.psi.back() = 0.0;
    out.arc = geom::arclength(out.profile);

    // degenerate outcome: psi_T vanishes on a band, not a point (cylinder)
    std::size_t zeroes = 0;
    for (std::size_t i = 1; i + 1 < nn; ++i)
        if (out.profile.psi[i] < 1e-10) ++zeroes;
    out.degenerate = zeroes > 2;

    // sheet views with s measured from the pinch
    const std::size_t k = out.pinch_index;
    std::vector<double> s_lo, psi_lo, s_hi, psi_hi;
    for (std::size_t i = k + 1; i-- > 0;) {
        s_lo.push_back(out.arc.s[k] - out.arc.s[i]);
        psi_lo.push_back(out.arc.psi[i]);
    }
    for (std::size_t i = k; i < nn; ++i) {
        s_hi.push_back(out.arc.s[i] - out.arc.s[k]);
        psi_hi.push_back(out.arc.psi[i]);
    }
    const int n_dim = out.profile.n;
    out.sheet_lo = detail::check_sheet(s_lo, psi_lo, n_dim);
    out.sheet_hi = detail::check_sheet(s_hi, psi_hi, n_dim);
    out.valid = !out.degenerate && out.sheet_lo.m1_positive_interior &&
                out.sheet_hi.m1_positive_interior && out.sheet_lo.m2_zero_ends &&
                out.sheet_hi.m2_zero_ends && out.sheet_lo.m3_pole_slope &&
                out.sheet_hi.m3_pole_slope && out.sheet_lo.m6_slope_bound &&
                out.sheet_hi.m6_slope_bound && out.sheet_lo.m7_monotone_small &&
                out.sheet_hi.m7_monotone_small;
    return out;
}

// Refine the singular profile near the pinch with geometrically spaced nodes
// following the fitted cusp law psi = c s (-log s)^{-1/2}, down to
// extra_levels halvings of the first node spacing. The law is anchored so the
// refined values join the measured neighbor node continuously; this is the
// grid density sweeps need to resolve the vanishing lower density at the
// pinch.
inline WarpedProfile cusp_refined_profile(const SingularProfile& sp, int extra_levels = 28,
                                          int per_level = 4) {
    const WarpedProfile& p = sp.profile;
    const std::size_t k = sp.pinch_index;
    if (k == 0 || k + 1 >= p.size())
        throw std::invalid_argument("cusp_refined_profile: pinch at the boundary");
    auto law = [&](double s, double c_anchor, double s_anchor) {
        // scale-matched cusp: psi(s_anchor) agrees with the measured node
        const double base = s * std::pow(-std::log(std::min(s, 0.5)), -0.5);
        const double base_anchor =
            s_anchor * std::pow(-std::log(std::min(s_anchor, 0.5)), -0.5);
        return c_anchor * base / base_anchor;
    };
    const int steps = extra_levels * per_level;
    WarpedProfile out;
    out.n = p.n;
    out.pole_lo = p.pole_lo;
    out.pole_hi = p.pole_hi;
    auto push = [&](double x, double phi, double psi) {
        out.x.push_back(x);
        out.phi.push_back(phi);
        out.psi.push_back(psi);
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i == k) {
            // descending wing: nodes between x[k-1] and x[k]
            const double dx = p.x[k] - p.x[k - 1];
            const double phi_loc = 0.5 * (p.phi[k - 1] + p.phi[k]);
            const double s1 = dx * phi_loc;  // arclength of the cell
            for (int q = 1; q < steps; ++q) {
                const double frac = std::pow(2.0, -static_cast<double>(q) / per_level);
                push(p.x[k] - dx * frac, phi_loc, law(s1 * frac, p.psi[k - 1], s1));
            }
            push(p.x[k], p.phi[k], 0.0);
            // ascending wing: nodes between x[k] and x[k+1]
            const double dxp = p.x[k + 1] - p.x[k];
            const double phi_p = 0.5 * (p.phi[k] + p.phi[k + 1]);
            const double s2 = dxp * phi_p;
            for (int q = steps - 1; q >= 1; --q) {
                const double frac = std::pow(2.0, -static_cast<double>(q) / per_level);
                push(p.x[k] + dxp * frac, phi_p, law(s2 * frac, p.psi[k + 1], s2));
            }
        } else {
            push(p.x[i], p.phi[i], p.psi[i]);
        }
    }
    out.validate();
    return out;
}

inline FlowState make_state(const WarpedProfile& p, double t = 0.0) {
    FlowState st;
    st.t = t;
    st.profile = p;
    detail::interior_min(st.profile, !(p.pole_lo || p.pole_hi), st.psi_min, st.min_index);
    return st;
}

}  // namespace neckflow::flow
