#pragma once

// Smooth forward evolution out of the neckpinch: the v-coordinate picture
//
//     g = dr^2 / v(r) + r^2 g_can,     r = psi(s),  v = (psi_s)^2,
//
// surgery at scale omega on the singular profile (caps blended in v so that
// v(0) = 1, the smooth-closure condition), the resulting pair of spheres, the
// quasilinear v-PDE stepper, and the emergent asymptotic profiles.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "neckflow/flow.hpp"
#include "neckflow/grid.hpp"
#include "neckflow/profile.hpp"

namespace neckflow::fwd {

using geom::ArclengthProfile;
using geom::WarpedProfile;

struct VProfile {
    int n = 2;
    std::vector<double> r;  // increasing radii in (0, r_*]
    std::vector<double> v;  // v in (0, 1] on smooth closed caps

    void validate() const {
        if (r.size() != v.size() || r.size() < 2)
            throw std::invalid_argument("VProfile: need matching arrays with >= 2 nodes");
        if (!strictly_increasing(r) || !(r.front() > 0.0))
            throw std::invalid_argument("VProfile: radii must be positive and increasing");
        for (double w : v)
            if (!(w > 0.0)) throw std::invalid_argument("VProfile: v must be positive");
    }
};

struct SurgeryConfig {
    double omega = 1.0 / 256.0;  // surgery scale
    double rho_star = 1.0;       // neck-width constant; cap covers psi_T < rho_star sqrt(omega)
    double blend_exponent = 1.0; // warp of the blend variable
    std::size_t cap_nodes = 48;  // radial resolution of the replacement cap
    double kappa = 1.0;          // thread schedule L(t) = kappa sqrt(t - T)

    double cap_radius() const { return rho_star * std::sqrt(omega); }
    void validate() const {
        if (!(omega > 0.0)) throw std::invalid_argument("SurgeryConfig: omega must be > 0");
        if (!(rho_star > 0.0)) throw std::invalid_argument("SurgeryConfig: rho_star must be > 0");
        if (!(blend_exponent > 0.0))
            throw std::invalid_argument("SurgeryConfig: blend_exponent must be > 0");
        if (cap_nodes < 8) throw std::invalid_argument("SurgeryConfig: cap_nodes must be >= 8");
        if (!(kappa >= 0.0)) throw std::invalid_argument("SurgeryConfig: kappa must be >= 0");
    }
};

// Scaled variables of the emergent-profile regions for t > T.
struct ScaledVars {
    double rho = 0.0;    // r / sqrt(t - T)
    double tau = 0.0;    // log(t - T)
    double sigma = 0.0;  // sqrt(-tau) * rho

    static ScaledVars at(double r, double t, double T) {
        if (!(t > T)) throw std::invalid_argument("ScaledVars: requires t > T");
        ScaledVars sv;
        sv.rho = r / std::sqrt(t - T);
        sv.tau = std::log(t - T);
        sv.sigma = std::sqrt(std::max(-sv.tau, 0.0)) * sv.rho;
        return sv;
    }
};

// Change of variable on a monotone cap: r_k = psi_k and v reconstructed so
// that from_v inverts it exactly at the nodes. The first cell fixes
// v_1 = (r_1/s_1)^2; later nodes follow the trapezoid-consistent recursion
// 1/sqrt(v_k) = 2 ds_k/dr_k - 1/sqrt(v_{k-1}).
inline VProfile to_v(const ArclengthProfile& cap, int n) {
    const std::size_t m = cap.s.size();
    if (m < 3) throw std::invalid_argument("to_v: need >= 3 nodes");
    if (std::abs(cap.s.front()) > 1e-12 || std::abs(cap.psi.front()) > 1e-12)
        throw std::invalid_argument("to_v: cap must start at s = 0 with psi = 0");
    for (std::size_t i = 1; i < m; ++i)
        if (!(cap.psi[i] > cap.psi[i - 1]))
            throw std::invalid_argument("to_v: psi must be strictly monotone on the cap");
    VProfile vp;
    vp.n = n;
    vp.r.resize(m - 1);
    vp.v.resize(m - 1);
    double inv_sqrt_prev = cap.s[1] / cap.psi[1];
    vp.r[0] = cap.psi[1];
    vp.v[0] = 1.0 / (inv_sqrt_prev * inv_sqrt_prev);
    for (std::size_t k = 2; k < m; ++k) {
        const double slope = (cap.s[k] - cap.s[k - 1]) / (cap.psi[k] - cap.psi[k - 1]);
        const double inv_sqrt = 2.0 * slope - inv_sqrt_prev;
        if (!(inv_sqrt > 0.0))
            throw std::invalid_argument("to_v: reconstruction left the v > 0 range");
        vp.r[k - 1] = cap.psi[k];
        vp.v[k - 1] = 1.0 / (inv_sqrt * inv_sqrt);
        inv_sqrt_prev = inv_sqrt;
    }
    return vp;
}

// Robust variant for analysis of rough (discrete-cusp) data: v from centered
// slopes, no reconstruction recursion, not invertible. The exact-inverse
// to_v stays the primary map; this one feeds the cap builder.
inline VProfile to_v_centered(const ArclengthProfile& cap, int n) {
    const std::size_t m = cap.s.size();
    if (m < 3) throw std::invalid_argument("to_v_centered: need >= 3 nodes");
    for (std::size_t i = 1; i < m; ++i)
        if (!(cap.psi[i] > cap.psi[i - 1]))
            throw std::invalid_argument("to_v_centered: psi must be strictly monotone");
    VProfile vp;
    vp.n = n;
    vp.r.resize(m - 1);
    vp.v.resize(m - 1);
    for (std::size_t k = 1; k < m; ++k) {
        const std::size_t lo = k - 1;
        const std::size_t hi = std::min(k + 1, m - 1);
        const double slope = (cap.psi[hi] - cap.psi[lo]) / (cap.s[hi] - cap.s[lo]);
        vp.r[k - 1] = cap.psi[k];
        vp.v[k - 1] = slope * slope;
    }
    return vp;
}

// Inverse map: s(r) = int_0^r dr / sqrt(v), trapezoid in 1/sqrt(v), with the
// first cell integrated against v_1 alone so to_v(from_v) is exact.
inline ArclengthProfile from_v(const VProfile& vp) {
    vp.validate();
    const std::size_t m = vp.r.size();
    ArclengthProfile cap;
    cap.s.resize(m + 1);
    cap.psi.resize(m + 1);
    cap.s[0] = 0.0;
    cap.psi[0] = 0.0;
    cap.s[1] = vp.r[0] / std::sqrt(vp.v[0]);
    cap.psi[1] = vp.r[0];
    for (std::size_t k = 1; k < m; ++k) {
        const double step = (vp.r[k] - vp.r[k - 1]) * 0.5 *
                            (1.0 / std::sqrt(vp.v[k - 1]) + 1.0 / std::sqrt(vp.v[k]));
        cap.s[k + 1] = cap.s[k] + step;
        cap.psi[k + 1] = vp.r[k];
    }
    return cap;
}

// Quadratic-in-r extrapolation of v to the axis; equals 1 on a smooth cap.
inline double smooth_closure_value(const VProfile& vp) {
    vp.validate();
    const double r0 = vp.r[0], r1 = vp.r[1];
    return vp.v[0] + (vp.v[0] - vp.v[1]) * r0 * r0 / (r1 * r1 - r0 * r0);
}

// Singular initial datum of the forward evolution, v0(r) = (n-1)/(4 (-log r)).
inline double v_initial(double r, int n) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("v_initial: requires 0 < r < 1");
    return 0.25 * (n - 1) / (-std::log(r));
}

// ---- surgery ----------------------------------------------------------------

struct SheetGeometry {
    ArclengthProfile arc;     // s from the outer pole toward the new cap pole
    std::size_t glue_index;   // first node of the cap region in arc
    double cap_length;        // meridian extent of the replaced region
    std::size_t outer_nodes;  // nodes copied verbatim from psi_T
};

struct SurgeryReport {
    double omega = 0.0;
    double rho_star = 0.0;
    double cap_radius = 0.0;
    std::size_t cap_nodes = 0;
    double blend_exponent = 0.0;
    double extent_lo = 0.0;  // meridian extent of N_omega on each sheet
    double extent_hi = 0.0;
    double volume_before = 0.0;  // volume of the singular profile
    double volume_after = 0.0;   // sheet volume sum after capping
    double closure_lo = 0.0;     // v(0) of each generated cap
    double closure_hi = 0.0;
};

namespace detail {

// Quintic Hermite h(u) on [0,1] with endpoint data (f, f', f'').
inline double quintic_hermite(double u, double f0, double d0, double c0, double f1, double d1,
                              double c1) {
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    const double h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double h1 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double h2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
    const double k0 = 10 * u3 - 15 * u4 + 6 * u5;
    const double k1 = -4 * u3 + 7 * u4 - 3 * u5;
    const double k2 = 0.5 * u3 - u4 + 0.5 * u5;
    return f0 * h0 + d0 * h1 + c0 * h2 + f1 * k0 + d1 * k1 + c1 * k2;
}

struct CapBlend {
    VProfile v;        // cap v-profile on (0, r_glue]
    double closure;    // v extrapolated to the axis
};

// Build the replacement cap in v-space: v(0) = 1 with zero slope and
// curvature, matching value and slope of the singular sheet at the gluing
// radius. The discrete v of a cusp sheet carries an alternating
// reconstruction mode, so value and slope come from a least-squares line over
// a window around r_glue rather than pointwise stencils.
//
// When target_length > 0 the blend is deepened by a bump factor
// v -> v (1 - lam B(u)), B = 16 u^2 (1-u)^2, with lam chosen so the cap
// meridian length int dr/sqrt(v) equals the length of the replaced cusp
// piece. Without this the capped sphere is strictly shorter pole-to-glue than
// the singular sphere, and cross-sheet distances through the thread keep an
// omega-sized offset from through-pinch distances for all t > T. The factor
// vanishes to second order at both ends, so v(0) = 1 and the C^1 gluing
// survive.
inline CapBlend build_cap(const VProfile& v_sheet, double r_glue, const SurgeryConfig& cfg,
                          double target_length = 0.0) {
    const std::size_t m = v_sheet.r.size();
    std::vector<double> rw, vw;
    for (std::size_t i = 0; i < m; ++i) {
        if (v_sheet.r[i] >= 0.7 * r_glue) {
            rw.push_back(v_sheet.r[i]);
            vw.push_back(v_sheet.v[i]);
        }
    }
    double vg, dg;
    if (rw.size() >= 3) {
        const LinearFit f = fit_line(rw, vw);
        vg = f.intercept + f.slope * r_glue;
        dg = f.slope;
    } else {
        vg = interp_linear(v_sheet.r, v_sheet.v, r_glue);
        dg = 0.0;
    }
    if (!(vg > 0.0))
        throw std::runtime_error("build_cap: nonpositive matched value; omega too large");
    CapBlend out;
    out.v.n = v_sheet.n;
    out.v.r.resize(cfg.cap_nodes);
    out.v.v.resize(cfg.cap_nodes);
    std::vector<double> base(cfg.cap_nodes), bump(cfg.cap_nodes);
    for (std::size_t k = 0; k < cfg.cap_nodes; ++k) {
        const double u_lin = static_cast<double>(k + 1) / cfg.cap_nodes;
        const double u = std::pow(u_lin, cfg.blend_exponent);
        out.v.r[k] = u_lin * r_glue;
        base[k] = quintic_hermite(u, 1.0, 0.0, 0.0, vg, dg * r_glue, 0.0);
        bump[k] = 16.0 * u_lin * u_lin * (1.0 - u_lin) * (1.0 - u_lin);
        if (!(base[k] > 0.0))
            throw std::runtime_error("build_cap: blend left v <= 0; omega too large");
    }
    out.v.r.back() = r_glue;
    auto apply = [&](double lam) {
        for (std::size_t k = 0; k < cfg.cap_nodes; ++k)
            out.v.v[k] = base[k] * (1.0 - lam * bump[k]);
    };
    apply(0.0);
    if (target_length > 0.0) {
        if (from_v(out.v).length() < target_length) {
            double lo = 0.0, hi = 1.0 - 1e-12;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                apply(mid);
                (from_v(out.v).length() < target_length ? lo : hi) = mid;
            }
            apply(hi);
        }
    }
    out.closure = 1.0;  // v(0) is an interpolation endpoint of the blend
    return out;
}

}  // namespace detail

struct SurgeryResult {
    WarpedProfile sheet_lo;  // x < x_neck side; cap pole (future of p) at x = +1
    WarpedProfile sheet_hi;  // x > x_neck side; cap pole at x = -1
    SurgeryReport report;
    std::vector<std::ptrdiff_t> map_lo;  // singular node -> sheet_lo node, -1 if replaced
    std::vector<std::ptrdiff_t> map_hi;
};

// Zero-scale-limit surgery at scale omega: keep the metric unchanged outside
// N_omega = {psi_T < rho_star sqrt(omega)} around the pinch, replace the
// inside with smooth caps, and return the two closed sphere profiles plus the
// node maps of the untouched region.
inline SurgeryResult regularize(const flow::SingularProfile& sp, const SurgeryConfig& cfg) {
    cfg.validate();
    if (sp.degenerate)
        throw std::invalid_argument("regularize: degenerate singular profile (cylinder limit)");
    const double r_glue = cfg.cap_radius();
    const auto& arc = sp.arc;
    const std::size_t k = sp.pinch_index;
    const std::size_t nn = arc.s.size();

    SurgeryResult out;
    out.map_lo.assign(nn, -1);
    out.map_hi.assign(nn, -1);
    out.report.omega = cfg.omega;
    out.report.rho_star = cfg.rho_star;
    out.report.cap_radius = r_glue;
    out.report.cap_nodes = cfg.cap_nodes;
    out.report.blend_exponent = cfg.blend_exponent;
    out.report.volume_before = geom::volume(sp.profile);

    auto build_sheet = [&](bool low_side) -> WarpedProfile {
        // (s from pinch, psi, singular index) moving away from the pinch
        std::vector<double> s_c, psi_c;
        std::vector<std::size_t> orig;
        if (low_side) {
            for (std::size_t i = k + 1; i-- > 0;) {
                s_c.push_back(arc.s[k] - arc.s[i]);
                psi_c.push_back(arc.psi[i]);
                orig.push_back(i);
            }
        } else {
            for (std::size_t i = k; i < nn; ++i) {
                s_c.push_back(arc.s[i] - arc.s[k]);
                psi_c.push_back(arc.psi[i]);
                orig.push_back(i);
            }
        }
        // the monotone run adjacent to the pinch must cross r_glue (M7)
        std::size_t glue = 0;
        for (std::size_t i = 1; i < s_c.size(); ++i) {
            if (!(psi_c[i] > psi_c[i - 1]))
                throw std::invalid_argument(
                    "regularize: psi_T not monotone below the cap radius; omega too large");
            if (psi_c[i] >= r_glue) {
                glue = i;
                break;
            }
        }
        if (glue == 0)
            throw std::invalid_argument("regularize: cap radius beyond the monotone neck");

        // v-picture of the monotone piece, extended a few nodes past r_glue
        // so slope and curvature at the gluing radius are well formed. Nodes
        // whose radius sits far below the surgery scale are discretization
        // residue of the pinch and are skipped; the cap replaces them anyway.
        const std::size_t ext = std::min(glue + 4, s_c.size() - 1);
        ArclengthProfile piece;
        piece.s.push_back(0.0);
        piece.psi.push_back(0.0);
        for (std::size_t q = 1; q <= ext; ++q) {
            if (psi_c[q] < 1e-3 * r_glue) continue;
            if (psi_c[q] <= piece.psi.back()) break;
            piece.s.push_back(s_c[q]);
            piece.psi.push_back(psi_c[q]);
        }
        const VProfile v_sheet = to_v_centered(piece, sp.profile.n);
        // exact s where psi_T crosses r_glue; the cap is length-matched to it
        const double t = (r_glue - psi_c[glue - 1]) / (psi_c[glue] - psi_c[glue - 1]);
        const double s_glue = s_c[glue - 1] + t * (s_c[glue] - s_c[glue - 1]);
        const auto cap = detail::build_cap(v_sheet, r_glue, cfg, s_glue);
        const ArclengthProfile cap_arc = from_v(cap.v);
        const double cap_len = cap_arc.length();

        // sheet nodes from the new pole outward: cap, then untouched outer
        std::vector<double> s_out, psi_out;
        std::vector<std::ptrdiff_t> orig_out;
        for (std::size_t i = 0; i < cap_arc.s.size(); ++i) {
            s_out.push_back(cap_arc.s[i]);
            psi_out.push_back(cap_arc.psi[i]);
            orig_out.push_back(-1);
        }
        const double shift = cap_len - s_glue;
        for (std::size_t i = glue; i < s_c.size(); ++i) {
            if (s_c[i] <= s_glue) continue;
            s_out.push_back(s_c[i] + shift);
            psi_out.push_back(psi_c[i]);
            orig_out.push_back(static_cast<std::ptrdiff_t>(orig[i]));
        }
        // orientation: the cap pole sits at x = +1 on the low sheet and
        // x = -1 on the high sheet
        WarpedProfile sheet;
        sheet.n = sp.profile.n;
        const std::size_t m = s_out.size();
        const double l = s_out.back();
        sheet.x.resize(m);
        sheet.phi.assign(m, l / 2.0);
        sheet.psi.resize(m);
        auto& map = low_side ? out.map_lo : out.map_hi;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t src = low_side ? m - 1 - i : i;
            sheet.x[i] = -1.0 + 2.0 * (low_side ? (l - s_out[src]) : s_out[src]) / l;
            sheet.psi[i] = psi_out[src];
            if (orig_out[src] >= 0) map[static_cast<std::size_t>(orig_out[src])] =
                static_cast<std::ptrdiff_t>(i);
        }
        sheet.psi.front() = 0.0;
        sheet.psi.back() = 0.0;
        sheet.validate();
        (low_side ? out.report.extent_lo : out.report.extent_hi) = s_glue;
        (low_side ? out.report.closure_lo : out.report.closure_hi) = cap.closure;
        return sheet;
    };

    out.sheet_lo = build_sheet(true);
    out.sheet_hi = build_sheet(false);
    out.report.volume_after = geom::volume(out.sheet_lo) + geom::volume(out.sheet_hi);
    return out;
}

// ---- v-PDE ------------------------------------------------------------------

struct VPdeOptions {
    bool literal_quadratic = false;  // the printed -v^2/2 reading; default is -v_r^2/2
    double inner_value = 1.0;        // cap boundary datum v(0) = 1
    std::optional<double> outer_value;  // Dirichlet at r_*; default holds the last node
};

// One explicit step of v_t = v v_rr - (1/2) v_r^2 + ((n-1-v)/r) v_r
//                            + (2(n-1)/r^2)(v - v^2).
// The cap datum v(0) = inner_value enters through a ghost node at r = 0; the
// outer end is Dirichlet (held, or set from the unchanged region).
inline VProfile v_pde_step(const VProfile& vp, double dt, const VPdeOptions& opt = {}) {
    vp.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("v_pde_step: dt must be > 0");
    const std::size_t m = vp.r.size();
    const int n = vp.n;
    std::vector<double> re(m + 1), ve(m + 1);
    re[0] = 0.0;
    ve[0] = opt.inner_value;
    for (std::size_t i = 0; i < m; ++i) {
        re[i + 1] = vp.r[i];
        ve[i + 1] = vp.v[i];
    }
    const auto d1 = derivative_nonuniform(re, ve);
    const auto d2 = second_derivative_nonuniform(re, ve);
    VProfile out = vp;
    for (std::size_t i = 1; i < m; ++i) {  // extended index; skips the outer node
        const double r = re[i], v = ve[i];
        const double quad = opt.literal_quadratic ? v * v : d1[i] * d1[i];
        const double rhs = v * d2[i] - 0.5 * quad + ((n - 1 - v) / r) * d1[i] +
                           (2.0 * (n - 1) / (r * r)) * (v - v * v);
        out.v[i - 1] = v + dt * rhs;
        if (!std::isfinite(out.v[i - 1]) || out.v[i - 1] <= 0.0 || out.v[i - 1] > 50.0)
            throw std::runtime_error("v_pde_step: blowup or loss of positivity");
    }
    if (opt.outer_value) out.v[m - 1] = *opt.outer_value;
    return out;
}

inline double v_pde_stable_dt(const VProfile& vp, double safety = 0.4) {
    double dt = std::numeric_limits<double>::infinity();
    double vmax = 0.0;
    for (double v : vp.v) vmax = std::max(vmax, v);
    for (std::size_t i = 1; i < vp.r.size(); ++i) {
        const double h = vp.r[i] - vp.r[i - 1];
        dt = std::min(dt, h * h / (2.0 * std::max(vmax, 1e-12)));
    }
    // reaction scale 2(n-1)/r^2 at the innermost node
    const double r0 = vp.r.front();
    dt = std::min(dt, r0 * r0 / (2.0 * (vp.n - 1) * 4.0));
    return safety * dt;
}

// ---- asymptotic profiles ---------------------------------------------------

// Validity-window edges; the theory leaves the constants unspecified, so they
// are configuration. The outer default sits well above the parabolic scale.
struct AsymptoticWindows {
    double c1 = 8.0;   // outer window: c1 sqrt(t-T) < r < c2
    double c2 = 0.35;
    double c3 = 2.0;   // parabolic window: c3 / sqrt(-tau) < rho < c4
    double c4 = 2.0;
};

struct AsymptoticValue {
    double value = 0.0;
    bool in_window = false;  // outside the stated validity window = extrapolation
};

// Outer region: v = (n-1)/(-4 log r) [1 + 2(n-1)(t-T)/r^2].
inline AsymptoticValue asymptotic_outer(double r, double t, double T, int n,
                                        const AsymptoticWindows& w = {}) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("asymptotic_outer: requires 0 < r < 1");
    if (!(t >= T)) throw std::domain_error("asymptotic_outer: requires t >= T");
    AsymptoticValue out;
    out.value = (n - 1) / (-4.0 * std::log(r)) * (1.0 + 2.0 * (n - 1) * (t - T) / (r * r));
    out.in_window = (r > w.c1 * std::sqrt(t - T)) && (r < w.c2);
    return out;
}

// Parabolic region: v = (n-1)/(-2 tau) [1 + 2(n-1)/rho^2].
inline AsymptoticValue asymptotic_parabolic(double rho, double tau, int n,
                                            const AsymptoticWindows& w = {}) {
    if (!(rho > 0.0)) throw std::domain_error("asymptotic_parabolic: requires rho > 0");
    if (!(tau < 0.0)) throw std::domain_error("asymptotic_parabolic: requires tau < 0");
    AsymptoticValue out;
    out.value = (n - 1) / (-2.0 * tau) * (1.0 + 2.0 * (n - 1) / (rho * rho));
    out.in_window = rho > w.c3 / std::sqrt(-tau) && rho < w.c4;
    return out;
}

// Extract the measured v(r) near the cap pole of an evolved sheet. The cap
// pole is x = +1 when `pole_hi_is_cap`, else x = -1.
inline VProfile measure_v_near_pole(const WarpedProfile& sheet, bool pole_hi_is_cap,
                                    double r_max) {
    const auto arc = geom::arclength(sheet);
    const std::size_t nn = arc.s.size();
    std::vector<double> s_c, psi_c;
    if (pole_hi_is_cap) {
        for (std::size_t i = nn; i-- > 0;) {
            s_c.push_back(arc.s.back() - arc.s[i]);
            psi_c.push_back(arc.psi[i]);
        }
    } else {
        s_c = arc.s;
        psi_c = arc.psi;
    }
    // monotone run from the pole, clipped at r_max
    std::size_t stop = 1;
    while (stop + 1 < s_c.size() && psi_c[stop + 1] > psi_c[stop] &&
           psi_c[stop + 1] <= r_max)
        ++stop;
    ArclengthProfile piece;
    piece.s.assign(s_c.begin(), s_c.begin() + stop + 1);
    piece.psi.assign(psi_c.begin(), psi_c.begin() + stop + 1);
    return to_v(piece, sheet.n);
}

struct AsymptoticComparison {
    bool applicable = false;
    double median_outer_error = 0.0;   // median |v_num / v_pred - 1| over the outer window
    std::size_t outer_count = 0;
};

// Window-wise relative error of an evolved post-surgery sheet against the
// outer asymptotic profile at time t (t slightly above T). Nodes inside the
// surgically replaced region (r below r_min) are not part of the continued
// solution at fixed omega and are excluded.
inline AsymptoticComparison compare_asymptotics(const WarpedProfile& sheet, bool pole_hi_is_cap,
                                                double t, double T, bool from_surgery,
                                                double r_min = 0.0,
                                                const AsymptoticWindows& w = {}) {
    AsymptoticComparison out;
    if (!from_surgery) return out;  // no singular history, nothing to compare
    if (!(t > T)) throw std::invalid_argument("compare_asymptotics: requires t > T");
    const VProfile vm = measure_v_near_pole(sheet, pole_hi_is_cap, 0.9);
    std::vector<double> errs;
    for (std::size_t i = 0; i < vm.r.size(); ++i) {
        const double r = vm.r[i];
        if (!(r > r_min && r < 1.0)) continue;
        const auto pred = asymptotic_outer(r, t, T, vm.n, w);
        if (!pred.in_window) continue;
        errs.push_back(std::abs(vm.v[i] / pred.value - 1.0));
    }
    if (errs.empty()) return out;
    out.applicable = true;
    out.outer_count = errs.size();
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    out.median_outer_error = errs[errs.size() / 2];
    return out;
}

// ---- post-surgery evolution --------------------------------------------------

struct DoubleTrajectory {
    flow::Trajectory sheet_lo;
    flow::Trajectory sheet_hi;
    double t_surgery = 0.0;  // flow time of the singular profile (T_hat)
    double kappa = 1.0;

    double thread_length(double t) const {
        return t > t_surgery ? kappa * std::sqrt(t - t_surgery) : 0.0;
    }
};

// Evolve the two regularized sheets independently; sample times are absolute
// (>= t_surgery).
inline DoubleTrajectory evolve_double(const WarpedProfile& sheet_lo,
                                      const WarpedProfile& sheet_hi, double t_surgery,
                                      const flow::SolverConfig& cfg, const SurgeryConfig& scfg,
                                      const std::vector<double>& sample_times) {
    DoubleTrajectory out;
    out.t_surgery = t_surgery;
    out.kappa = scfg.kappa;
    double t_stop = t_surgery;
    for (double t : sample_times) t_stop = std::max(t_stop, t);
    out.sheet_lo = flow::run_until(flow::make_state(sheet_lo, t_surgery), cfg,
                                   flow::StopSpec::at_time(t_stop), sample_times);
    out.sheet_hi = flow::run_until(flow::make_state(sheet_hi, t_surgery), cfg,
                                   flow::StopSpec::at_time(t_stop), sample_times);
    return out;
}

}  // namespace neckflow::fwd
