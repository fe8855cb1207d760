#pragma once

// Metric measure structure over a profile, the pre-/post-surgery spaces, and
// the thread-joined double sphere. The current structure of an oriented
// warped product is carried implicitly: an orientation flag plus the mass
// measure omega_n psi^n phi dx spread over fiber-angle bands. Thread cells
// carry distance but zero m-dimensional mass, so they are never settled.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "neckflow/geodesic.hpp"
#include "neckflow/grid.hpp"
#include "neckflow/profile.hpp"

namespace neckflow::cur {

using geom::ArclengthProfile;
using geom::DistanceField;
using geom::Interval;
using geom::ProfileGeometry;
using geom::RegionSpec;
using geom::WarpedProfile;

// Fraction of the fiber n-sphere at polar angle in [a, b]:
// int_a^b sin^{n-1} / int_0^pi sin^{n-1}.
inline double band_fraction(int n, double a, double b) {
    if (n == 1) return (b - a) / kPi;  // circle fiber: uniform in angle
    if (n == 2) return 0.5 * (std::cos(a) - std::cos(b));
    // generic: composite Simpson, plenty for n <= 8
    auto f = [n](double t) { return std::pow(std::sin(t), n - 1); };
    auto simpson = [&](double lo, double hi) {
        const int k = 32;
        double acc = 0.0;
        const double h = (hi - lo) / k;
        for (int i = 0; i < k; ++i) {
            const double x0 = lo + i * h;
            acc += (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h)) * h / 6.0;
        }
        return acc;
    };
    return simpson(a, b) / simpson(0.0, kPi);
}

struct MassCell {
    std::size_t row;    // meridian cell [row, row+1]
    std::size_t band;   // angular band [band, band+1]
    double mass;        // omega_n * meridian slice mass * band fraction
};

// One sheet (or the singular sphere) as a metric measure space over the
// eikonal strip. Dimension m = n + 1.
class MetricMeasureSpace {
  public:
    MetricMeasureSpace(const WarpedProfile& p, std::size_t theta_nodes = 96, int refine = 1)
        : geo_(std::make_unique<ProfileGeometry>(p, theta_nodes, refine)) {
        build_cells();
    }

    explicit MetricMeasureSpace(std::unique_ptr<ProfileGeometry> geo) : geo_(std::move(geo)) {
        build_cells();
    }

    int dimension() const { return geo_->profile().n + 1; }
    const ProfileGeometry& geometry() const { return *geo_; }
    double total_mass() const { return total_mass_; }

    // Mass below distance r in a precomputed field. Partial cells enter with
    // the linear fraction of their radial extent below r.
    double ball_volume_in_field(const DistanceField& field, double r) const {
        if (!(r > 0.0)) throw std::invalid_argument("ball_volume: r must be > 0");
        const auto& g = geo_->strip();
        double acc = 0.0;
        for (const auto& c : cells_) {
            const double d00 = field[g.index(c.row, c.band)];
            const double d01 = field[g.index(c.row, c.band + 1)];
            const double d10 = field[g.index(c.row + 1, c.band)];
            const double d11 = field[g.index(c.row + 1, c.band + 1)];
            const double dmin = std::min(std::min(d00, d01), std::min(d10, d11));
            const double dmax = std::max(std::max(d00, d01), std::max(d10, d11));
            if (dmin >= r) continue;
            if (dmax <= r) {
                acc += c.mass;
            } else {
                acc += c.mass * (r - dmin) / (dmax - dmin);
            }
        }
        return acc;
    }

    // Mass of the metric ball B((s_p, theta = 0), r).
    double ball_volume(double s_p, double r) const {
        const auto field = geo_->field_from_row_uncached(geo_->row_near(s_p));
        return ball_volume_in_field(field, r);
    }

    // Mass restricted to s-intervals (bands); exact partial meridian cells.
    double mass_in(const std::vector<Interval>& s_parts) const {
        const auto& g = geo_->strip();
        double acc = 0.0;
        for (const auto& c : cells_) {
            const double lo = g.s[c.row], hi = g.s[c.row + 1];
            for (const auto& iv : s_parts) {
                const double olo = std::max(lo, iv.lo), ohi = std::min(hi, iv.hi);
                if (ohi > olo) acc += c.mass * (ohi - olo) / (hi - lo);
            }
        }
        return acc;
    }

  private:
    void build_cells() {
        const auto& p = geo_->profile();
        const auto& g = geo_->strip();
        const int n = p.n;
        const double omega_n = unit_sphere_area(n);
        // meridian slice mass per strip cell, from the x-space integrand so
        // the cell total reproduces volume() exactly
        std::vector<double> slice(g.rows() > 0 ? g.rows() - 1 : 0, 0.0);
        {
            // strip rows may be refined; rebuild the same trapezoid pieces
            const auto arcs = geo_->arc().s;
            const auto& px = p.x;
            const auto& pphi = p.phi;
            const auto& ppsi = p.psi;
            std::vector<double> f(px.size());
            for (std::size_t i = 0; i < px.size(); ++i)
                f[i] = std::pow(ppsi[i], n) * pphi[i];
            // map strip rows back to x by inverting the arclength table
            for (std::size_t i = 0; i + 1 < g.rows(); ++i) {
                const double x0 = interp_linear(arcs, px, g.s[i]);
                const double x1 = interp_linear(arcs, px, g.s[i + 1]);
                const double f0 = interp_linear(px, f, x0);
                const double f1 = interp_linear(px, f, x1);
                slice[i] = 0.5 * (f0 + f1) * (x1 - x0);
            }
        }
        cells_.clear();
        total_mass_ = 0.0;
        for (std::size_t i = 0; i + 1 < geo_->strip().rows(); ++i) {
            for (std::size_t j = 0; j + 1 < geo_->strip().cols(); ++j) {
                const double frac =
                    band_fraction(n, geo_->strip().theta[j], geo_->strip().theta[j + 1]);
                const double m = omega_n * slice[i] * frac;
                cells_.push_back({i, j, m});
                total_mass_ += m;
            }
        }
    }

    std::unique_ptr<ProfileGeometry> geo_;
    std::vector<MassCell> cells_;
    double total_mass_ = 0.0;
};

// ---- density and settled points ---------------------------------------------

struct DensityPoint {
    double r = 0.0;
    double value = 0.0;   // mu(B(p, r)) / (beta_m r^m)
    bool reliable = true; // false when r is under ~3 grid cells
};

struct DensityReport {
    std::vector<DensityPoint> sequence;  // at the requested radii, decreasing
    double liminf_estimate = 0.0;        // min over the reliable tail
};

// Lower-density estimates mu(B(p,r)) / (beta_m r^m) at decreasing radii.
// Normalization by the Euclidean unit-ball volume makes smooth points read 1.
inline DensityReport lower_density(const MetricMeasureSpace& space, double s_p,
                                   std::vector<double> radii) {
    if (radii.empty()) throw std::invalid_argument("lower_density: need radii");
    std::sort(radii.rbegin(), radii.rend());
    const std::size_t row = space.geometry().row_near(s_p);
    const auto field = space.geometry().field_from_row_uncached(row);
    const int m = space.dimension();
    const double beta = unit_ball_volume(m);
    const double cell = space.geometry().local_scale(row);
    DensityReport out;
    for (double r : radii) {
        DensityPoint dp;
        dp.r = r;
        dp.value = space.ball_volume_in_field(field, r) / (beta * std::pow(r, m));
        dp.reliable = r >= 3.0 * cell;
        out.sequence.push_back(dp);
    }
    double lim = std::numeric_limits<double>::infinity();
    for (const auto& dp : out.sequence)
        if (dp.reliable) lim = std::min(lim, dp.value);
    if (!std::isfinite(lim)) lim = out.sequence.back().value;
    out.liminf_estimate = lim;
    return out;
}

struct PointClass {
    std::string kind;   // "node", "pinch", "pole", "thread"
    double s = 0.0;     // meridian coordinate (or thread parameter)
    double density = 0.0;
    bool settled = false;
    bool reliable = true;  // false when no radius reaches the pointwise regime
};

// ---- double sphere ------------------------------------------------------------

// Two post-surgery spheres joined by a thread of length L between the new
// poles p1 (cap pole of sheet 1, x = +1) and p2 (cap pole of sheet 2,
// x = -1). The piecewise metric D is the within-sheet distance, or
// d1(x, p1) + L + d2(p2, y) across. The thread carries zero m-mass.
class DoubleSphereSpace {
  public:
    DoubleSphereSpace(const WarpedProfile& sheet1, const WarpedProfile& sheet2, double L,
                      std::size_t theta_nodes = 96)
        : s1_(sheet1, theta_nodes), s2_(sheet2, theta_nodes), L_(L) {
        if (!(L >= 0.0)) throw std::invalid_argument("DoubleSphereSpace: L must be >= 0");
        pole1_field_ = s1_.geometry().field_from_row_uncached(s1_.geometry().strip().rows() - 1);
        pole2_field_ = s2_.geometry().field_from_row_uncached(0);
    }

    struct Point {
        int sheet;      // 1 or 2; 0 = thread point with parameter u in [0, L]
        double s;       // meridian coordinate (sheet) or u (thread)
        double theta;   // fiber angle class
    };

    double thread_length() const { return L_; }
    const MetricMeasureSpace& sheet1() const { return s1_; }
    const MetricMeasureSpace& sheet2() const { return s2_; }
    double total_mass() const { return s1_.total_mass() + s2_.total_mass(); }
    int dimension() const { return s1_.dimension(); }

    double dist_to_pole1(double s, double theta) const {
        return s1_.geometry().solver().sample(pole1_field_, s, theta);
    }
    double dist_to_pole2(double s, double theta) const {
        return s2_.geometry().solver().sample(pole2_field_, s, theta);
    }

    // The piecewise metric D.
    double metric(const Point& a, const Point& b) const {
        if (a.sheet == b.sheet) {
            if (a.sheet == 0) return std::abs(a.s - b.s);
            const auto& g = a.sheet == 1 ? s1_.geometry() : s2_.geometry();
            return g.distance(a.s, b.s, std::abs(a.theta - b.theta));
        }
        if (a.sheet == 0 || b.sheet == 0) {
            const Point& th = a.sheet == 0 ? a : b;
            const Point& pt = a.sheet == 0 ? b : a;
            if (pt.sheet == 1) return th.s + dist_to_pole1(pt.s, pt.theta);
            return (L_ - th.s) + dist_to_pole2(pt.s, pt.theta);
        }
        const Point& x = a.sheet == 1 ? a : b;
        const Point& y = a.sheet == 1 ? b : a;
        return dist_to_pole1(x.s, x.theta) + L_ + dist_to_pole2(y.s, y.theta);
    }

    // Ball mass around a point of either sheet or of the thread.
    double ball_volume(const Point& p, double r) const {
        if (!(r > 0.0)) throw std::invalid_argument("ball_volume: r must be > 0");
        if (p.sheet == 0) {
            double acc = 0.0;
            const double r1 = r - p.s;        // reach past p1
            const double r2 = r - (L_ - p.s); // reach past p2
            if (r1 > 0.0) acc += s1_.ball_volume_in_field(pole1_field_, r1);
            if (r2 > 0.0) acc += s2_.ball_volume_in_field(pole2_field_, r2);
            return acc;
        }
        const MetricMeasureSpace& own = p.sheet == 1 ? s1_ : s2_;
        const MetricMeasureSpace& other = p.sheet == 1 ? s2_ : s1_;
        double acc = own.ball_volume(p.s, r);
        const double to_own_pole = p.sheet == 1 ? dist_to_pole1(p.s, p.theta)
                                                : dist_to_pole2(p.s, p.theta);
        const double reach = r - to_own_pole - L_;
        if (reach > 0.0) {
            if (p.sheet == 1)
                acc += other.ball_volume_in_field(pole2_field_, reach);
            else
                acc += other.ball_volume_in_field(pole1_field_, reach);
        }
        return acc;
    }

    // Density classification of representative classes: sheet interior nodes,
    // the two cap poles, and thread points.
    std::vector<PointClass> settled_points(double threshold, std::size_t stride = 8) const {
        std::vector<PointClass> out;
        const int m = dimension();
        const double beta = unit_ball_volume(m);
        auto classify_sheet = [&](const MetricMeasureSpace& sp, int which) {
            const auto& g = sp.geometry();
            for (std::size_t i = 1; i + 1 < g.strip().rows(); i += stride) {
                PointClass pc;
                pc.kind = "node";
                pc.s = g.strip().s[i];
                const double rr = std::max(6.0 * g.local_scale(i), 0.02 * g.length());
                pc.reliable = rr <= 0.75 * g.strip().psi[i] || i + 8 >= g.strip().rows() ||
                              i < 8;  // cap/pole neighborhoods are smooth centers
                pc.density = sp.ball_volume(pc.s, rr) / (beta * std::pow(rr, m));
                pc.settled = pc.density >= threshold;
                (void)which;
                out.push_back(pc);
            }
        };
        classify_sheet(s1_, 1);
        classify_sheet(s2_, 2);
        // thread interior points
        if (L_ > 0.0) {
            for (double frac : {0.25, 0.5, 0.75}) {
                PointClass pc;
                pc.kind = "thread";
                pc.s = frac * L_;
                const double rr = 0.4 * std::min(frac, 1.0 - frac) * L_;
                Point p{0, pc.s, 0.0};
                pc.density =
                    rr > 0.0 ? ball_volume(p, rr) / (beta * std::pow(rr, m)) : 0.0;
                pc.settled = pc.density >= threshold;
                out.push_back(pc);
            }
        }
        return out;
    }

  private:
    MetricMeasureSpace s1_, s2_;
    double L_;
    DistanceField pole1_field_, pole2_field_;
};

// Settled classification of a single (possibly singular) sphere: nodes with
// lower density above the threshold. The pinch class of a singular sphere
// fails the threshold; smooth classes pass.
inline std::vector<PointClass> settled_points(const MetricMeasureSpace& space, double threshold,
                                              std::size_t stride = 8) {
    std::vector<PointClass> out;
    const auto& g = space.geometry();
    const int m = space.dimension();
    const double beta = unit_ball_volume(m);
    for (std::size_t i = 0; i < g.strip().rows(); i += stride) {
        PointClass pc;
        const bool pole = (i == 0) || (i + 1 >= g.strip().rows());
        const bool pinch = g.strip().point_row[i] && !pole;
        pc.kind = pinch ? "pinch" : (pole ? "pole" : "node");
        pc.s = g.strip().s[i];
        double rr;
        if (pinch) {
            rr = 0.005 * g.length();
        } else {
            // density is a per-class limit: evaluate below the class's own
            // distance to any identified point so nearby singular mass
            // deficits do not leak in
            double to_point = g.length();
            for (std::size_t q = 0; q < g.strip().rows(); ++q)
                if (g.strip().point_row[q] && q != i)
                    to_point = std::min(to_point, std::abs(g.strip().s[q] - pc.s));
            rr = std::max(6.0 * g.local_scale(i), 0.01 * g.length());
            rr = std::min(rr, 0.6 * to_point);
        }
        if (!(rr > 0.0)) continue;
        // a node estimate only reflects the point itself once the ball sits
        // inside its fiber tube
        pc.reliable = pinch || pole || rr <= 0.75 * g.strip().psi[i];
        pc.density = space.ball_volume(pc.s, rr) / (beta * std::pow(rr, m));
        pc.settled = pc.density >= threshold;
        out.push_back(pc);
    }
    return out;
}

}  // namespace neckflow::cur
