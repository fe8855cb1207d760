#pragma once

// Geodesic distances on a rotationally symmetric profile. By O(n+1) symmetry
// a pair of points reduces to (s1, s2, dtheta) with dtheta in [0, pi], and
// distances solve the eikonal equation
//
//     u_s^2 + u_theta^2 / psi(s)^2 = 1
//
// on the half-strip [0, l] x [0, pi], swept by fast marching with upwind
// differences (second order where the stencil allows). Rows with psi = 0
// (poles and pinch points) are treated as single identified points, so fronts
// pass through a pinch.

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "neckflow/grid.hpp"
#include "neckflow/profile.hpp"

namespace neckflow::geom {

struct StripGrid {
    std::vector<double> s;        // meridian nodes, strictly increasing from 0
    std::vector<double> psi;      // fiber radius per meridian node
    std::vector<double> theta;    // uniform nodes spanning [0, pi]
    std::vector<bool> point_row;  // psi == 0 rows collapse to one point

    std::size_t rows() const { return s.size(); }
    std::size_t cols() const { return theta.size(); }
    std::size_t index(std::size_t i, std::size_t j) const { return i * cols() + j; }

    static StripGrid from_arclength(const ArclengthProfile& arc, std::size_t theta_nodes,
                                    int refine = 1) {
        if (theta_nodes < 8) throw std::invalid_argument("StripGrid: need >= 8 theta nodes");
        if (refine < 1) throw std::invalid_argument("StripGrid: refine must be >= 1");
        StripGrid g;
        if (refine == 1) {
            g.s = arc.s;
            g.psi = arc.psi;
        } else {
            for (std::size_t i = 0; i + 1 < arc.s.size(); ++i) {
                for (int k = 0; k < refine; ++k) {
                    const double w = static_cast<double>(k) / refine;
                    g.s.push_back(arc.s[i] + w * (arc.s[i + 1] - arc.s[i]));
                    g.psi.push_back(arc.psi[i] + w * (arc.psi[i + 1] - arc.psi[i]));
                }
            }
            g.s.push_back(arc.s.back());
            g.psi.push_back(arc.psi.back());
        }
        g.theta.resize(theta_nodes);
        for (std::size_t j = 0; j < theta_nodes; ++j)
            g.theta[j] = kPi * static_cast<double>(j) / (theta_nodes - 1);
        g.point_row.resize(g.s.size());
        for (std::size_t i = 0; i < g.s.size(); ++i) {
            // rows whose fiber circumference is below the local meridian cell
            // are indistinguishable from identified points on this grid; the
            // angular cost dropped is under the discretization tolerance
            double local = 0.0;
            if (i > 0) local = std::max(local, g.s[i] - g.s[i - 1]);
            if (i + 1 < g.s.size()) local = std::max(local, g.s[i + 1] - g.s[i]);
            g.point_row[i] = g.psi[i] <= 0.0 || kPi * g.psi[i] < local;
        }
        return g;
    }
};

// One distance field on the strip, indexed (row, col). Point rows hold the
// same value in every column.
using DistanceField = std::vector<double>;

class EikonalSolver {
  public:
    explicit EikonalSolver(const StripGrid& grid) : g_(grid) {
        if (g_.rows() < 3) throw std::invalid_argument("EikonalSolver: need >= 3 meridian rows");
        for (double v : g_.psi)
            if (!std::isfinite(v)) throw std::invalid_argument("EikonalSolver: non-finite psi");
    }

    // Distance field from the point (s = s[source_row], theta = 0).
    DistanceField solve_from_row(std::size_t source_row) const {
        std::vector<double> u(g_.rows() * g_.cols(), kInf);
        std::vector<State> st(u.size(), State::Far);
        Heap heap;
        seed_point_source(source_row, u, st, heap);
        march(u, st, heap);
        return u;
    }

    // Distance-to-set field: every node whose meridian coordinate lies in one
    // of the s-intervals starts at zero.
    DistanceField solve_from_set(const std::vector<Interval>& s_intervals) const {
        std::vector<double> u(g_.rows() * g_.cols(), kInf);
        std::vector<State> st(u.size(), State::Far);
        Heap heap;
        for (std::size_t i = 0; i < g_.rows(); ++i) {
            bool inside = false;
            for (const auto& iv : s_intervals)
                if (g_.s[i] >= iv.lo && g_.s[i] <= iv.hi) inside = true;
            if (!inside) continue;
            for (std::size_t j = 0; j < g_.cols(); ++j) {
                const std::size_t id = g_.index(i, j);
                u[id] = 0.0;
                st[id] = State::Accepted;
            }
        }
        for (std::size_t i = 0; i < g_.rows(); ++i)
            for (std::size_t j = 0; j < g_.cols(); ++j)
                if (st[g_.index(i, j)] == State::Accepted) push_neighbors(i, j, u, st, heap);
        march(u, st, heap);
        return u;
    }

    // Field lookup with bilinear interpolation in (s, theta).
    double sample(const DistanceField& u, double s, double theta) const {
        const auto& sv = g_.s;
        if (s < sv.front() - 1e-9 || s > sv.back() + 1e-9)
            throw std::domain_error("EikonalSolver: s outside [0, l]");
        s = std::min(std::max(s, sv.front()), sv.back());
        theta = std::min(std::abs(theta), kPi);
        std::size_t i = 0;
        while (i + 2 < sv.size() && sv[i + 1] <= s) ++i;
        const double ws = (s - sv[i]) / (sv[i + 1] - sv[i]);
        const double dth = g_.theta[1] - g_.theta[0];
        std::size_t j = std::min(static_cast<std::size_t>(theta / dth), g_.cols() - 2);
        const double wt = (theta - g_.theta[j]) / dth;
        auto at = [&](std::size_t r, std::size_t c) { return u[g_.index(r, c)]; };
        const double lo = (1 - wt) * at(i, j) + wt * at(i, j + 1);
        const double hi = (1 - wt) * at(i + 1, j) + wt * at(i + 1, j + 1);
        return (1 - ws) * lo + ws * hi;
    }

    const StripGrid& grid() const { return g_; }

    // Worst-case discretization scale of the marched fields; callers use it
    // as the metric-axiom tolerance.
    double tolerance() const {
        double hs = 0.0, pmax = 0.0;
        for (std::size_t i = 1; i < g_.rows(); ++i) hs = std::max(hs, g_.s[i] - g_.s[i - 1]);
        for (double v : g_.psi) pmax = std::max(pmax, v);
        const double ht = (g_.theta[1] - g_.theta[0]) * pmax;
        return 2.0 * (hs + ht);
    }

  private:
    enum class State : unsigned char { Far, Trial, Accepted };
    struct HeapNode {
        double value;
        std::size_t id;
        bool operator>(const HeapNode& o) const { return value > o.value; }
    };
    using Heap = std::priority_queue<HeapNode, std::vector<HeapNode>, std::greater<HeapNode>>;
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    const StripGrid& g_;

    void seed_point_source(std::size_t src, std::vector<double>& u, std::vector<State>& st,
                           Heap& heap) const {
        // Exact local initialization on a small index-local patch (3 rows and
        // 3 angular cells around the source) keeps the marcher's first-order
        // error away from the singular center. The patch never extends past
        // an identified point, where the flat-metric distance fails; the
        // identified row itself joins with its meridian distance.
        const std::size_t cols = g_.cols();
        const long rows = static_cast<long>(g_.rows());
        const long srcl = static_cast<long>(src);
        const bool src_point = g_.point_row[src];
        auto seed_row = [&](long i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const double ds = g_.s[ui] - g_.s[src];
            if (g_.point_row[ui] || src_point) {
                for (std::size_t jj = 0; jj < cols; ++jj) {
                    const std::size_t id = g_.index(ui, jj);
                    u[id] = std::abs(ds);
                    st[id] = State::Accepted;
                }
                return;
            }
            const double pm = 0.5 * (g_.psi[ui] + g_.psi[src]);
            for (std::size_t j = 0; j < std::min<std::size_t>(4, cols); ++j) {
                const std::size_t id = g_.index(ui, j);
                u[id] = std::hypot(ds, pm * g_.theta[j]);
                st[id] = State::Accepted;
            }
        };
        seed_row(srcl);
        for (int dir : {-1, +1}) {
            for (long step = 1; step <= 3; ++step) {
                const long i = srcl + dir * step;
                if (i < 0 || i >= rows) break;
                seed_row(i);
                if (g_.point_row[static_cast<std::size_t>(i)]) break;
            }
        }
        for (long i = std::max(srcl - 3, 0l); i <= std::min(srcl + 3, rows - 1); ++i)
            for (std::size_t j = 0; j < cols; ++j)
                if (st[g_.index(static_cast<std::size_t>(i), j)] == State::Accepted)
                    push_neighbors(static_cast<std::size_t>(i), j, u, st, heap);
    }

    void march(std::vector<double>& u, std::vector<State>& st, Heap& heap) const {
        while (!heap.empty()) {
            const HeapNode top = heap.top();
            heap.pop();
            if (st[top.id] == State::Accepted) continue;
            if (top.value > u[top.id] * (1.0 + 1e-14) + 1e-300) continue;  // stale entry
            const std::size_t i = top.id / g_.cols();
            const std::size_t j = top.id % g_.cols();
            if (g_.point_row[i]) {
                for (std::size_t jj = 0; jj < g_.cols(); ++jj) {
                    const std::size_t id = g_.index(i, jj);
                    u[id] = u[top.id];
                    st[id] = State::Accepted;
                }
                for (std::size_t jj = 0; jj < g_.cols(); ++jj) push_neighbors(i, jj, u, st, heap);
            } else {
                st[top.id] = State::Accepted;
                push_neighbors(i, j, u, st, heap);
            }
        }
    }

    void push_neighbors(std::size_t i, std::size_t j, std::vector<double>& u,
                        std::vector<State>& st, Heap& heap) const {
        const long ii = static_cast<long>(i), jj = static_cast<long>(j);
        const long nbr[4][2] = {{ii - 1, jj}, {ii + 1, jj}, {ii, jj - 1}, {ii, jj + 1}};
        for (const auto& nb : nbr) {
            if (nb[0] < 0 || nb[0] >= static_cast<long>(g_.rows())) continue;
            if (nb[1] < 0 || nb[1] >= static_cast<long>(g_.cols())) continue;
            const std::size_t id = g_.index(static_cast<std::size_t>(nb[0]),
                                            static_cast<std::size_t>(nb[1]));
            if (st[id] == State::Accepted) continue;
            const double cand = update(static_cast<std::size_t>(nb[0]),
                                       static_cast<std::size_t>(nb[1]), u, st);
            if (cand < u[id]) {
                u[id] = cand;
                st[id] = State::Trial;
                heap.push({cand, id});
            }
        }
    }

    struct Upwind {
        double value = kInf;  // upwind value entering the quadratic
        double inv_h = 0.0;   // effective inverse step
        bool ok = false;
    };

    Upwind upwind_s(std::size_t i, std::size_t j, const std::vector<double>& u,
                    const std::vector<State>& st) const {
        Upwind best;
        double best_u1 = kInf;
        for (int dir : {-1, +1}) {
            const long i1 = static_cast<long>(i) + dir;
            if (i1 < 0 || i1 >= static_cast<long>(g_.rows())) continue;
            const std::size_t id1 = g_.index(static_cast<std::size_t>(i1), j);
            if (st[id1] != State::Accepted) continue;
            if (u[id1] >= best_u1) continue;
            best_u1 = u[id1];
            const double h1 = std::abs(g_.s[static_cast<std::size_t>(i1)] - g_.s[i]);
            best.value = u[id1];
            best.inv_h = 1.0 / h1;
            best.ok = true;
            const long i2 = static_cast<long>(i) + 2 * dir;
            if (i2 >= 0 && i2 < static_cast<long>(g_.rows()) &&
                !g_.point_row[static_cast<std::size_t>(i1)]) {
                const std::size_t id2 = g_.index(static_cast<std::size_t>(i2), j);
                const double h2 = std::abs(g_.s[static_cast<std::size_t>(i2)] -
                                           g_.s[static_cast<std::size_t>(i1)]);
                if (st[id2] == State::Accepted && u[id2] <= u[id1] &&
                    std::abs(h2 - h1) < 1e-9 * (h1 + h2)) {
                    best.value = (4.0 * u[id1] - u[id2]) / 3.0;
                    best.inv_h = 1.5 / h1;
                }
            }
        }
        return best;
    }

    Upwind upwind_theta(std::size_t i, std::size_t j, const std::vector<double>& u,
                        const std::vector<State>& st) const {
        Upwind best;
        const double h = (g_.theta[1] - g_.theta[0]) * g_.psi[i];
        if (!(h > 0)) return best;
        const long cols = static_cast<long>(g_.cols());
        double best_u1 = kInf;
        for (int dir : {-1, +1}) {
            long j1 = static_cast<long>(j) + dir;
            if (j1 < 0) j1 = 1;             // reflecting boundary at theta = 0
            if (j1 >= cols) j1 = cols - 2;  // reflecting boundary at theta = pi
            if (j1 == static_cast<long>(j)) continue;
            const std::size_t id1 = g_.index(i, static_cast<std::size_t>(j1));
            if (st[id1] != State::Accepted) continue;
            if (u[id1] >= best_u1) continue;
            best_u1 = u[id1];
            best.value = u[id1];
            best.inv_h = 1.0 / h;
            best.ok = true;
            long j2 = static_cast<long>(j) + 2 * dir;
            if (j2 < 0) j2 = -j2;
            if (j2 >= cols) j2 = 2 * (cols - 1) - j2;
            if (j2 != j1 && j2 != static_cast<long>(j)) {
                const std::size_t id2 = g_.index(i, static_cast<std::size_t>(j2));
                if (st[id2] == State::Accepted && u[id2] <= u[id1]) {
                    best.value = (4.0 * u[id1] - u[id2]) / 3.0;
                    best.inv_h = 1.5 / h;
                }
            }
        }
        return best;
    }

    double update(std::size_t i, std::size_t j, const std::vector<double>& u,
                  const std::vector<State>& st) const {
        if (g_.point_row[i]) {
            // identified point: best accepted neighbor-row value + meridian step
            double best = kInf;
            for (int dir : {-1, +1}) {
                const long i1 = static_cast<long>(i) + dir;
                if (i1 < 0 || i1 >= static_cast<long>(g_.rows())) continue;
                const double h = std::abs(g_.s[static_cast<std::size_t>(i1)] - g_.s[i]);
                for (std::size_t jj = 0; jj < g_.cols(); ++jj) {
                    const std::size_t id = g_.index(static_cast<std::size_t>(i1), jj);
                    if (st[id] == State::Accepted) best = std::min(best, u[id] + h);
                }
            }
            return best;
        }
        const Upwind a = upwind_s(i, j, u, st);
        const Upwind b = upwind_theta(i, j, u, st);
        double best = kInf;
        if (a.ok) best = std::min(best, a.value + 1.0 / a.inv_h);
        if (b.ok) best = std::min(best, b.value + 1.0 / b.inv_h);
        if (a.ok && b.ok) {
            // solve (x-a)^2 pa^2 + (x-b)^2 pb^2 = 1 for the larger root
            const double pa = a.inv_h, pb = b.inv_h;
            const double A = pa * pa + pb * pb;
            const double B = -2.0 * (a.value * pa * pa + b.value * pb * pb);
            const double C = a.value * a.value * pa * pa + b.value * b.value * pb * pb - 1.0;
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double x = (-B + std::sqrt(disc)) / (2.0 * A);
                if (x >= a.value && x >= b.value) best = std::min(best, x);
            }
        }
        return best;
    }
};

// Profile-level distance interface: owns the strip, answers point-to-point
// queries through a bounded per-row field cache, and exposes the sampled
// diameter / Hausdorff-gap computations.
class ProfileGeometry {
  public:
    ProfileGeometry(const WarpedProfile& profile, std::size_t theta_nodes = 96, int refine = 1)
        : profile_(profile),
          arc_(arclength(profile)),
          strip_(StripGrid::from_arclength(arc_, theta_nodes, refine)),
          solver_(strip_) {}

    ProfileGeometry(const ProfileGeometry&) = delete;
    ProfileGeometry& operator=(const ProfileGeometry&) = delete;

    const WarpedProfile& profile() const { return profile_; }
    const ArclengthProfile& arc() const { return arc_; }
    const StripGrid& strip() const { return strip_; }
    const EikonalSolver& solver() const { return solver_; }
    double length() const { return arc_.length(); }
    double tolerance() const { return solver_.tolerance(); }

    // Local grid scale around a row: the larger of the adjacent meridian
    // spacings and the local fiber arc per theta cell.
    double local_scale(std::size_t row) const {
        const auto& g = strip_;
        double hs = 0.0;
        if (row > 0) hs = std::max(hs, g.s[row] - g.s[row - 1]);
        if (row + 1 < g.rows()) hs = std::max(hs, g.s[row + 1] - g.s[row]);
        const double ht = (g.theta[1] - g.theta[0]) * g.psi[row];
        return std::max(hs, ht);
    }

    std::size_t row_near(double s) const {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < strip_.rows(); ++i) {
            const double d = std::abs(strip_.s[i] - s);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        return best;
    }

    DistanceField field_from_row_uncached(std::size_t row) const {
        if (row >= strip_.rows()) throw std::out_of_range("field_from_row_uncached: row");
        return solver_.solve_from_row(row);
    }

    // Geodesic distance between symmetry classes (s1, .) and (s2, dtheta).
    double distance(double s1, double s2, double dtheta) const {
        if (!std::isfinite(s1) || !std::isfinite(s2) || !std::isfinite(dtheta))
            throw std::domain_error("distance: non-finite arguments");
        const std::size_t row = row_near(s1);
        return solver_.sample(field_from_row(row), s2, dtheta);
    }

    // Extrinsic diameter of a region, per connected component, maximized over
    // components. Sources are sampled every `stride` meridian nodes; targets
    // sweep the full component.
    double region_diameter(const std::vector<Interval>& s_parts, std::size_t stride = 4) const {
        if (s_parts.empty()) throw std::invalid_argument("region_diameter: empty region");
        double out = 0.0;
        for (const auto& part : s_parts) {
            double comp = 0.0;
            for (std::size_t i = 0; i < strip_.rows(); i += stride) {
                if (strip_.s[i] < part.lo || strip_.s[i] > part.hi) continue;
                const DistanceField f = field_from_row_uncached(i);
                for (std::size_t k = 0; k < strip_.rows(); ++k) {
                    if (strip_.s[k] < part.lo || strip_.s[k] > part.hi) continue;
                    for (std::size_t j = 0; j < strip_.cols(); ++j)
                        comp = std::max(comp, f[strip_.index(k, j)]);
                }
            }
            out = std::max(out, comp);
        }
        return out;
    }

    double diameter(std::size_t stride = 4) const {
        return region_diameter({{0.0, length()}}, stride);
    }

    // Hausdorff gap sup_x d(x, U) via one multi-source sweep.
    double hausdorff_gap(const std::vector<Interval>& s_parts) const {
        bool nonempty = false;
        for (const auto& p : s_parts) nonempty = nonempty || !p.empty();
        if (!nonempty) throw std::invalid_argument("hausdorff_gap: empty region");
        const auto f = solver_.solve_from_set(s_parts);
        double out = 0.0;
        for (double v : f)
            if (std::isfinite(v)) out = std::max(out, v);
        return out;
    }

    // Map x-intervals of the profile to s-intervals of the strip.
    std::vector<Interval> to_s_intervals(const std::vector<Interval>& x_parts) const {
        std::vector<Interval> out;
        for (const auto& p : x_parts) {
            if (p.empty()) continue;
            out.push_back({interp_linear(profile_.x, arc_.s, p.lo),
                           interp_linear(profile_.x, arc_.s, p.hi)});
        }
        return out;
    }

    std::vector<Interval> region_s_intervals(const RegionSpec& r) const {
        return to_s_intervals(resolve_region(profile_, r));
    }

    void set_cache_limit(std::size_t n) const { max_cached_ = n; }

  private:
    // Bounded internal cache backing distance(); the reference stays valid
    // only until the next cache miss at capacity.
    const DistanceField& field_from_row(std::size_t row) const {
        auto it = cache_.find(row);
        if (it != cache_.end()) return it->second;
        if (cache_.size() >= max_cached_) cache_.clear();
        return cache_.emplace(row, solver_.solve_from_row(row)).first->second;
    }

    WarpedProfile profile_;
    ArclengthProfile arc_;
    StripGrid strip_;
    EikonalSolver solver_;
    mutable std::unordered_map<std::size_t, DistanceField> cache_;
    mutable std::size_t max_cached_ = 96;
};

}  // namespace neckflow::geom
