#pragma once

// Rotationally symmetric metrics on S^{n+1}, discretized as warped products
//
//     g = phi(x)^2 dx^2 + psi(x)^2 g_can   on  [-1,1] x S^n,
//
// together with their curvature, volumes and region bookkeeping. psi is the
// fiber-sphere radius, phi the radial coefficient; poles carry psi = 0.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "neckflow/grid.hpp"

namespace neckflow::geom {

struct WarpedProfile {
    int n = 2;                    // fiber sphere dimension, >= 2
    std::vector<double> x;        // strictly increasing, spans [-1, 1]
    std::vector<double> phi;      // > 0 everywhere
    std::vector<double> psi;      // >= 0; zero exactly at flagged poles / pinch nodes
    bool pole_lo = true;          // psi vanishes at x = -1
    bool pole_hi = true;          // psi vanishes at x = +1

    std::size_t size() const { return x.size(); }

    void validate() const {
        if (n < 2) throw std::invalid_argument("WarpedProfile: n must be >= 2");
        if (x.size() < 5 || phi.size() != x.size() || psi.size() != x.size())
            throw std::invalid_argument("WarpedProfile: inconsistent arrays");
        if (!strictly_increasing(x))
            throw std::invalid_argument("WarpedProfile: x grid not strictly increasing");
        for (double p : phi)
            if (!(p > 0.0) || !std::isfinite(p))
                throw std::invalid_argument("WarpedProfile: phi must be positive and finite");
        for (double p : psi)
            if (p < 0.0 || !std::isfinite(p))
                throw std::invalid_argument("WarpedProfile: psi must be nonnegative and finite");
        if (pole_lo && psi.front() != 0.0)
            throw std::invalid_argument("WarpedProfile: flagged pole with psi != 0 at x = -1");
        if (pole_hi && psi.back() != 0.0)
            throw std::invalid_argument("WarpedProfile: flagged pole with psi != 0 at x = +1");
    }
};

struct ArclengthProfile {
    std::vector<double> s;    // s[0] = 0, strictly increasing
    std::vector<double> psi;  // fiber radius per node
    double length() const { return s.empty() ? 0.0 : s.back(); }
};

// A region on the profile: the whole manifold, the coordinate band
// {|x| >= 1/j}, or a superlevel set {psi >= c}.
struct RegionSpec {
    enum class Kind { Whole, CoordBand, PsiSuperlevel };
    Kind kind = Kind::Whole;
    int j = 2;           // CoordBand parameter
    double level = 0.0;  // PsiSuperlevel parameter

    static RegionSpec whole() { return {}; }
    static RegionSpec coord_band(int j) {
        if (j < 1) throw std::invalid_argument("RegionSpec: band parameter j must be >= 1");
        RegionSpec r;
        r.kind = Kind::CoordBand;
        r.j = j;
        return r;
    }
    static RegionSpec psi_superlevel(double c) {
        if (!(c >= 0)) throw std::invalid_argument("RegionSpec: superlevel must be >= 0");
        RegionSpec r;
        r.kind = Kind::PsiSuperlevel;
        r.level = c;
        return r;
    }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(hi > lo); }
};

// Resolve a region to x-intervals on the profile grid.
inline std::vector<Interval> resolve_region(const WarpedProfile& p, const RegionSpec& r) {
    const double a = p.x.front(), b = p.x.back();
    switch (r.kind) {
        case RegionSpec::Kind::Whole:
            return {{a, b}};
        case RegionSpec::Kind::CoordBand: {
            const double c = 1.0 / r.j;
            std::vector<Interval> out;
            if (-c > a) out.push_back({a, -c});
            if (b > c) out.push_back({c, b});
            if (out.empty()) out.push_back({a, b});
            return out;
        }
        case RegionSpec::Kind::PsiSuperlevel: {
            std::vector<Interval> out;
            const std::size_t n = p.size();
            bool inside = p.psi[0] >= r.level;
            double start = a;
            for (std::size_t i = 1; i < n; ++i) {
                const bool now = p.psi[i] >= r.level;
                if (now == inside) continue;
                // linear crossing between nodes i-1 and i
                const double t = (r.level - p.psi[i - 1]) / (p.psi[i] - p.psi[i - 1]);
                const double xc = p.x[i - 1] + t * (p.x[i] - p.x[i - 1]);
                if (inside)
                    out.push_back({start, xc});
                else
                    start = xc;
                inside = now;
            }
            if (inside) out.push_back({start, b});
            return out;
        }
    }
    return {};
}

// Meridian arclength s(x) = int phi dx (trapezoid), the coordinate used by
// every metric computation downstream.
inline ArclengthProfile arclength(const WarpedProfile& p) {
    p.validate();
    ArclengthProfile out;
    out.s = cumulative_trapezoid(p.x, p.phi);
    out.psi = p.psi;
    return out;
}

struct CurvatureField {
    std::vector<double> k_rad;    // sectional curvature of planes containing d/ds
    std::vector<double> k_sph;    // sectional curvature of planes tangent to the fiber
    std::vector<double> rm_norm;  // sqrt(2n K_rad^2 + n(n-1) K_sph^2), convention fixed here
    std::vector<bool> valid;      // false at psi = 0 nodes
};

// Warped-product sectional curvatures K_rad = -psi_ss / psi and
// K_sph = (1 - psi_s^2) / psi^2, with s-derivatives taken through the
// arclength map. Nodes at psi = 0 are flagged invalid. Near smooth poles the
// K_sph quotient cancels catastrophically; there the smooth-closure identity
// K_sph = K_rad + O(s^2) takes over.
inline CurvatureField curvature(const WarpedProfile& p) {
    const auto arc = arclength(p);
    const std::size_t n = p.size();
    const auto dpsi = derivative_nonuniform(arc.s, arc.psi);
    const auto ddpsi = second_derivative_nonuniform(arc.s, arc.psi);
    CurvatureField out;
    out.k_rad.resize(n, 0.0);
    out.k_sph.resize(n, 0.0);
    out.rm_norm.resize(n, 0.0);
    out.valid.resize(n, false);
    const double nn = p.n;
    for (std::size_t i = 0; i < n; ++i) {
        if (p.psi[i] <= 0.0) continue;
        out.k_rad[i] = -ddpsi[i] / arc.psi[i];
        const bool near_pole = (p.pole_lo && i <= 10) || (p.pole_hi && i + 11 >= n);
        out.k_sph[i] = near_pole
                           ? out.k_rad[i]
                           : (1.0 - dpsi[i] * dpsi[i]) / (arc.psi[i] * arc.psi[i]);
        out.rm_norm[i] = std::sqrt(2.0 * nn * out.k_rad[i] * out.k_rad[i] +
                                   nn * (nn - 1.0) * out.k_sph[i] * out.k_sph[i]);
        out.valid[i] = true;
    }
    return out;
}

// Curvature at one node; throws at a degenerate (psi = 0) node.
inline double rm_norm_at(const WarpedProfile& p, std::size_t i) {
    if (i >= p.size()) throw std::out_of_range("rm_norm_at: node index");
    if (p.psi[i] <= 0.0)
        throw std::domain_error("rm_norm_at: curvature evaluation at a psi = 0 node");
    return curvature(p).rm_norm[i];
}

namespace detail {
// Integrate the node data f over x-intervals with linear partial cells.
inline double integrate_intervals(const std::vector<double>& x, const std::vector<double>& f,
                                  const std::vector<Interval>& parts) {
    double acc = 0.0;
    for (const auto& iv : parts) {
        if (iv.empty()) continue;
        double prev_x = iv.lo;
        double prev_f = interp_linear(x, f, iv.lo);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] <= iv.lo) continue;
            if (x[i] >= iv.hi) break;
            acc += 0.5 * (prev_f + f[i]) * (x[i] - prev_x);
            prev_x = x[i];
            prev_f = f[i];
        }
        const double end_f = interp_linear(x, f, iv.hi);
        acc += 0.5 * (prev_f + end_f) * (iv.hi - prev_x);
    }
    return acc;
}
}  // namespace detail

// Riemannian volume over explicit x-intervals: omega_n * int psi^n phi dx.
inline double volume(const WarpedProfile& p, const std::vector<Interval>& parts) {
    p.validate();
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        f[i] = std::pow(p.psi[i], p.n) * p.phi[i];
    return unit_sphere_area(p.n) * detail::integrate_intervals(p.x, f, parts);
}

inline double volume(const WarpedProfile& p, const RegionSpec& r = RegionSpec::whole()) {
    return volume(p, resolve_region(p, r));
}

// Area of the region boundary: each boundary slice interior to (-1, 1) is a
// round S^n of radius psi, of area omega_n psi^n. The whole closed manifold
// has no boundary.
inline double boundary_area(const WarpedProfile& p, const std::vector<Interval>& parts) {
    p.validate();
    const double a = p.x.front(), b = p.x.back();
    const double eps = 1e-12 * (b - a);
    double acc = 0.0;
    for (const auto& iv : parts) {
        if (iv.empty()) continue;
        for (double xb : {iv.lo, iv.hi}) {
            if (xb - a < eps || b - xb < eps) continue;  // manifold end, not a boundary
            const double psi_b = interp_linear(p.x, p.psi, xb);
            acc += unit_sphere_area(p.n) * std::pow(psi_b, p.n);
        }
    }
    return acc;
}

inline double boundary_area(const WarpedProfile& p, const RegionSpec& r) {
    return boundary_area(p, resolve_region(p, r));
}

// ---- profile generators ----------------------------------------------------

// Round S^{n+1} of the given radius: s in [0, pi * radius], psi = radius sin(s/radius).
inline WarpedProfile make_round_sphere(int n, double radius, std::size_t nodes) {
    if (!(radius > 0)) throw std::invalid_argument("make_round_sphere: radius must be positive");
    if (nodes < 5) throw std::invalid_argument("make_round_sphere: need >= 5 nodes");
    WarpedProfile p;
    p.n = n;
    p.x.resize(nodes);
    p.phi.resize(nodes);
    p.psi.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / (nodes - 1);
        p.x[i] = x;
        p.phi[i] = radius * kPi / 2.0;
        p.psi[i] = radius * std::cos(kPi * x / 2.0);
    }
    p.psi.front() = 0.0;
    p.psi.back() = 0.0;
    return p;
}

// Dumbbell-type initial data: psi0(x) = bump * cos(pi x / 2) * (1 - A (1 - x^2)^p).
// A in [0,1) sets the neck depth, p its width. Smooth pole closure
// (|psi_s| = 1 at both ends) holds since the neck factor has zero slope at
// x = +-1.
inline WarpedProfile make_neck_profile(int n, std::size_t nodes, double bump, double neck_amp,
                                       int neck_power) {
    if (!(bump > 0)) throw std::invalid_argument("make_neck_profile: bump must be positive");
    if (!(neck_amp >= 0 && neck_amp < 1))
        throw std::invalid_argument("make_neck_profile: neck_amp must lie in [0, 1)");
    if (neck_power < 2) throw std::invalid_argument("make_neck_profile: neck_power must be >= 2");
    WarpedProfile p;
    p.n = n;
    p.x.resize(nodes);
    p.phi.resize(nodes);
    p.psi.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / (nodes - 1);
        const double w = 1.0 - neck_amp * std::pow(1.0 - x * x, neck_power);
        p.x[i] = x;
        p.phi[i] = bump * kPi / 2.0;
        p.psi[i] = bump * std::cos(kPi * x / 2.0) * w;
    }
    p.psi.front() = 0.0;
    p.psi.back() = 0.0;
    return p;
}

// Flat band psi == radius with phi == 1; poleless, used with the periodic
// solver mode as the shrinking-cylinder harness.
inline WarpedProfile make_cylinder_band(int n, double radius, std::size_t nodes) {
    if (!(radius > 0)) throw std::invalid_argument("make_cylinder_band: radius must be positive");
    WarpedProfile p;
    p.n = n;
    p.x.resize(nodes);
    p.phi.assign(nodes, 1.0);
    p.psi.assign(nodes, radius);
    for (std::size_t i = 0; i < nodes; ++i)
        p.x[i] = -1.0 + 2.0 * static_cast<double>(i) / (nodes - 1);
    p.pole_lo = false;
    p.pole_hi = false;
    return p;
}

}  // namespace neckflow::geom
