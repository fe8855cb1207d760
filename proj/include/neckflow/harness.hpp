#pragma once

// Full experiments: pre-surgery sweep t up to T, surgery, post-surgery sweep
// t down to T, post-post sweeps around an interior t0, and the volume /
// diameter series. Each (t, region) cell yields a SwifBoundReport; per t the
// minimizing region is selected and the tail of the selected bounds is
// checked for decay.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "neckflow/current.hpp"
#include "neckflow/flow.hpp"
#include "neckflow/forward.hpp"
#include "neckflow/geodesic.hpp"
#include "neckflow/grid.hpp"
#include "neckflow/profile.hpp"
#include "neckflow/swif.hpp"

namespace neckflow::harness {

using geom::ArclengthProfile;
using geom::Interval;
using geom::ProfileGeometry;
using geom::RegionSpec;
using geom::WarpedProfile;

struct SweepConfig {
    int k_max = 10;                 // t_k = T_hat -+ delta0 * 2^-k, k = 0..k_max
    double delta0_frac = 0.1;       // delta0 = delta0_frac * T_hat (pre side)
    double post_delta0_frac = 0.005;  // post side; capped sheets re-pinch on an
                                      // omega timescale, so the window is shorter
    std::vector<int> j_set = {2, 3, 4, 6, 8, 12, 16};
    std::vector<double> omega_set;  // post-surgery region scales; default 2^-2..2^-7
    double kappa = 1.0;             // thread schedule L(t) = kappa sqrt(t - T)
    std::size_t source_stride = 4;  // meridian stride of sampled pair sources
    std::size_t theta_classes = 9;
    std::size_t theta_nodes = 64;   // strip resolution of sweep distance fields
    double delta_a = 1e-6;
    double tail_rel_slack = 1e-3;   // slack for the monotone-tail assertion

    void validate() const {
        if (k_max < 1) throw std::invalid_argument("SweepConfig: k_max must be >= 1");
        if (!(delta0_frac > 0)) throw std::invalid_argument("SweepConfig: delta0_frac > 0");
        if (j_set.empty()) throw std::invalid_argument("SweepConfig: empty j set");
        for (std::size_t i = 1; i < j_set.size(); ++i)
            if (j_set[i] <= j_set[i - 1])
                throw std::invalid_argument("SweepConfig: j set must increase");
        for (std::size_t i = 1; i < omega_set.size(); ++i)
            if (omega_set[i] >= omega_set[i - 1])
                throw std::invalid_argument("SweepConfig: omega set must decrease");
        if (!(kappa >= 0)) throw std::invalid_argument("SweepConfig: kappa must be >= 0");
        if (theta_classes < 2) throw std::invalid_argument("SweepConfig: theta_classes >= 2");
    }

    std::vector<double> omegas() const {
        if (!omega_set.empty()) return omega_set;
        std::vector<double> out;
        for (int k = 2; k <= 7; ++k) out.push_back(std::pow(2.0, -k));
        return out;
    }
};

// Geometric approach schedules, both sides of T_hat.
inline std::vector<double> schedule_pre(double t_hat, const SweepConfig& cfg) {
    std::vector<double> out;
    const double d0 = cfg.delta0_frac * t_hat;
    for (int k = 0; k <= cfg.k_max; ++k) out.push_back(t_hat - d0 * std::pow(2.0, -k));
    return out;
}
inline std::vector<double> schedule_post(double t_hat, const SweepConfig& cfg) {
    std::vector<double> out;
    const double d0 = cfg.post_delta0_frac * t_hat;
    for (int k = cfg.k_max; k >= 0; --k) out.push_back(t_hat + d0 * std::pow(2.0, -k));
    return out;
}

struct SweepRow {
    std::string side;  // "pre", "post", "postpost"
    double t = 0.0;
    double j_or_omega = 0.0;
    swif::SwifBoundReport report;
    double diameter = 0.0;  // of the moving space
    double volume = 0.0;    // of the moving space
    bool selected = false;  // minimizing region for this t
};

struct SweepResult {
    std::vector<SweepRow> rows;      // all (t, region) cells, key-ordered
    std::vector<SweepRow> selected;  // one per t, ordered toward the limit
    bool tail_monotone = false;
    double final_bound = 0.0;
    double reference_volume = 0.0;
};

namespace detail {

// Distances between symmetry classes of one space, sampled as matrices
// d[source][class][theta_class]. Classes are (sheet, meridian node) pairs;
// a single space uses sheet = 0 throughout.
struct ClassSet {
    std::vector<int> sheet;
    std::vector<double> s;
    std::size_t size() const { return s.size(); }
};

class Sampler {
  public:
    virtual ~Sampler() = default;
    virtual std::vector<double> from(std::size_t k, const std::vector<double>& th) const = 0;
};

class ProfileSampler : public Sampler {
  public:
    ProfileSampler(const ProfileGeometry& geo, const ClassSet& cls) : geo_(geo), cls_(cls) {}
    std::vector<double> from(std::size_t k, const std::vector<double>& th) const override {
        const auto field = geo_.field_from_row_uncached(geo_.row_near(cls_.s[k]));
        std::vector<double> out(cls_.size() * th.size());
        for (std::size_t c = 0; c < cls_.size(); ++c)
            for (std::size_t q = 0; q < th.size(); ++q)
                out[c * th.size() + q] = geo_.solver().sample(field, cls_.s[c], th[q]);
        return out;
    }

  private:
    const ProfileGeometry& geo_;
    ClassSet cls_;
};

// Double space: within-sheet distances from a per-source field; cross-sheet
// through the thread, d1(x, p1) + L + d2(p2, y).
class DoubleSampler : public Sampler {
  public:
    DoubleSampler(const ProfileGeometry& lo, const ProfileGeometry& hi, double L,
                  const ClassSet& cls)
        : lo_(lo), hi_(hi), L_(L), cls_(cls) {
        pole_lo_ = lo_.field_from_row_uncached(lo_.strip().rows() - 1);  // cap pole x = +1
        pole_hi_ = hi_.field_from_row_uncached(0);                       // cap pole x = -1
    }

    std::vector<double> from(std::size_t k, const std::vector<double>& th) const override {
        const bool on_lo = cls_.sheet[k] == 1;
        const ProfileGeometry& own = on_lo ? lo_ : hi_;
        const ProfileGeometry& other = on_lo ? hi_ : lo_;
        const auto field = own.field_from_row_uncached(own.row_near(cls_.s[k]));
        const double to_pole = on_lo ? own.solver().sample(pole_lo_, cls_.s[k], 0.0)
                                     : own.solver().sample(pole_hi_, cls_.s[k], 0.0);
        const auto& other_pole = on_lo ? pole_hi_ : pole_lo_;
        std::vector<double> out(cls_.size() * th.size());
        for (std::size_t c = 0; c < cls_.size(); ++c) {
            const bool same = cls_.sheet[c] == cls_.sheet[k];
            for (std::size_t q = 0; q < th.size(); ++q) {
                if (same) {
                    out[c * th.size() + q] = own.solver().sample(field, cls_.s[c], th[q]);
                } else {
                    const double leg = other.solver().sample(other_pole, cls_.s[c], th[q]);
                    out[c * th.size() + q] = to_pole + L_ + leg;
                }
            }
        }
        return out;
    }

  private:
    const ProfileGeometry& lo_;
    const ProfileGeometry& hi_;
    double L_;
    ClassSet cls_;
    geom::DistanceField pole_lo_, pole_hi_;
};

struct Matrices {
    std::vector<std::size_t> sources;
    std::size_t thetas = 0;
    std::vector<double> d;

    double at(std::size_t source_pos, std::size_t cls, std::size_t q,
              std::size_t classes) const {
        return d[(source_pos * classes + cls) * thetas + q];
    }
};

inline Matrices build_matrices(const Sampler& sampler, const ClassSet& cls,
                               const std::vector<std::size_t>& sources,
                               std::size_t theta_classes) {
    Matrices m;
    m.sources = sources;
    m.thetas = theta_classes;
    std::vector<double> th(theta_classes);
    for (std::size_t q = 0; q < theta_classes; ++q)
        th[q] = kPi * static_cast<double>(q) / (theta_classes - 1);
    m.d.reserve(sources.size() * cls.size() * theta_classes);
    for (std::size_t sp = 0; sp < sources.size(); ++sp) {
        const auto row = sampler.from(sources[sp], th);
        m.d.insert(m.d.end(), row.begin(), row.end());
    }
    return m;
}

// lambda, per-component extrinsic diameters on both spaces and the moving
// space diameter, all from the same matrices.
struct PairStats {
    double lambda = 0.0;
    double mov_comp1 = 0.0, mov_comp2 = 0.0;
    double ref_comp1 = 0.0, ref_comp2 = 0.0;
    double diameter = 0.0;
    std::size_t arg_src = 0, arg_dst = 0, arg_theta = 0;  // attaining pair of lambda
};

inline PairStats pair_stats(const Matrices& ma, const Matrices& mb, const ClassSet& cls,
                            const std::vector<bool>& in_region,
                            const std::vector<int>& component) {
    const std::size_t n = cls.size();
    PairStats st;
    for (std::size_t sp = 0; sp < ma.sources.size(); ++sp) {
        const std::size_t src = ma.sources[sp];
        const bool src_in = in_region[src];
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t q = 0; q < ma.thetas; ++q) {
                const double da = ma.at(sp, c, q, n);
                st.diameter = std::max(st.diameter, da);
                if (!src_in || !in_region[c]) continue;
                const double db = mb.at(sp, c, q, n);
                if (std::abs(da - db) > st.lambda) {
                    st.lambda = std::abs(da - db);
                    st.arg_src = src;
                    st.arg_dst = c;
                    st.arg_theta = q;
                }
                if (component[src] == component[c]) {
                    if (component[src] == 1) {
                        st.mov_comp1 = std::max(st.mov_comp1, da);
                        st.ref_comp1 = std::max(st.ref_comp1, db);
                    } else if (component[src] == 2) {
                        st.mov_comp2 = std::max(st.mov_comp2, da);
                        st.ref_comp2 = std::max(st.ref_comp2, db);
                    }
                }
            }
        }
    }
    return st;
}

inline std::vector<std::size_t> pick_sources(std::size_t n, std::size_t stride,
                                             const std::vector<std::size_t>& extras) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < n; k += std::max<std::size_t>(stride, 1)) out.push_back(k);
    for (std::size_t k : extras)
        if (k < n) out.push_back(k);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// segment marks contiguous runs of the correspondence; radial increments
// never straddle a segment boundary.
inline std::vector<swif::MatchedNode> matched_nodes(const std::vector<double>& s_a,
                                                    const std::vector<double>& psi_a,
                                                    const std::vector<double>& s_b,
                                                    const std::vector<double>& psi_b,
                                                    const std::vector<int>& segment) {
    const std::size_t n = s_a.size();
    if (n != s_b.size() || n != segment.size() || n < 2)
        throw std::invalid_argument("matched_nodes: size mismatch");
    std::vector<swif::MatchedNode> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i, hi = i;
        if (i > 0 && segment[i - 1] == segment[i]) lo = i - 1;
        if (i + 1 < n && segment[i + 1] == segment[i]) hi = i + 1;
        if (hi == lo)
            throw std::invalid_argument("matched_nodes: isolated node in a segment");
        out[i].ds_a = (s_a[hi] - s_a[lo]) / (hi - lo);
        out[i].ds_b = (s_b[hi] - s_b[lo]) / (hi - lo);
        out[i].psi_a = psi_a[i];
        out[i].psi_b = psi_b[i];
    }
    return out;
}

inline bool tail_nonincreasing(const std::vector<double>& v, double rel_slack) {
    if (v.size() < 4) return true;
    bool ok = true;
    for (std::size_t i = v.size() / 2; i + 1 < v.size(); ++i)
        ok = ok && v[i + 1] <= v[i] * (1.0 + rel_slack);
    return ok;
}

// A region cell is usable when each of its components carries enough matched
// nodes to sample.
inline bool region_usable(const std::vector<bool>& in_region,
                          const std::vector<int>& component) {
    std::size_t c1 = 0, c2 = 0;
    for (std::size_t i = 0; i < in_region.size(); ++i) {
        if (!in_region[i]) continue;
        if (component[i] == 1) ++c1;
        if (component[i] == 2) ++c2;
    }
    return c1 >= 3 && c2 >= 3;
}

// Distance-to-region data on one sheet: the Hausdorff gap and the value at
// the cap pole (for thread points).
struct SetDistance {
    double gap = 0.0;
    double at_cap_pole = 0.0;
};

inline SetDistance set_distance(const ProfileGeometry& geo, const std::vector<Interval>& x_parts,
                                bool cap_at_high_end) {
    const auto field = geo.solver().solve_from_set(geo.to_s_intervals(x_parts));
    SetDistance out;
    for (double v : field)
        if (std::isfinite(v)) out.gap = std::max(out.gap, v);
    const auto& g = geo.strip();
    const std::size_t pole_row = cap_at_high_end ? g.rows() - 1 : 0;
    out.at_cap_pole = field[g.index(pole_row, 0)];
    return out;
}

}  // namespace detail

// x-intervals of the singular sphere minus the pinch neighborhood
// {psi_T < level} around the pinch (poles stay included).
inline std::vector<Interval> complement_of_pinch_band(const flow::SingularProfile& sp,
                                                      double level) {
    const auto& x = sp.profile.x;
    const auto& psi = sp.profile.psi;
    const std::size_t k = sp.pinch_index;
    std::size_t left = k, right = k;
    while (left > 0 && psi[left] < level) --left;
    while (right + 1 < x.size() && psi[right] < level) ++right;
    std::vector<Interval> out;
    if (left > 0 || psi[left] >= level) out.push_back({x.front(), x[left]});
    if (right + 1 < x.size() || psi[right] >= level) out.push_back({x[right], x.back()});
    return out;
}

// ---- pre-surgery sweep -------------------------------------------------------

inline SweepResult pre_surgery_sweep(const flow::Trajectory& traj,
                                     const flow::SingularProfile& sp, const SweepConfig& cfg) {
    cfg.validate();
    if (traj.final_status.phase != flow::Phase::PinchDetected)
        throw std::invalid_argument("pre_surgery_sweep: trajectory lacks a detected pinch");

    SweepResult res;
    const ProfileGeometry ref_geo(sp.profile, cfg.theta_nodes);
    res.reference_volume = geom::volume(sp.profile);
    const auto& ref_arc = ref_geo.arc();

    const std::size_t nn = sp.profile.size();
    detail::ClassSet base_cls;
    base_cls.sheet.assign(nn, 0);
    base_cls.s.resize(nn);

    std::vector<std::vector<bool>> in_region(cfg.j_set.size(), std::vector<bool>(nn, false));
    std::vector<int> component(nn, 0);
    std::vector<std::size_t> edge_sources;
    for (std::size_t i = 0; i < nn; ++i)
        component[i] = sp.profile.x[i] < 0 ? 1 : 2;
    for (std::size_t ji = 0; ji < cfg.j_set.size(); ++ji) {
        const double c = 1.0 / cfg.j_set[ji];
        std::size_t last_lo = 0, first_hi = nn;
        for (std::size_t i = 0; i < nn; ++i) {
            const double x = sp.profile.x[i];
            if (x <= -c) {
                in_region[ji][i] = true;
                last_lo = i;
            } else if (x >= c) {
                in_region[ji][i] = true;
                if (first_hi == nn) first_hi = i;
            }
        }
        edge_sources.push_back(last_lo);
        if (first_hi < nn) edge_sources.push_back(first_hi);
    }

    detail::ClassSet ref_cls = base_cls;
    for (std::size_t i = 0; i < nn; ++i) ref_cls.s[i] = ref_arc.s[i];
    const auto sources = detail::pick_sources(nn, cfg.source_stride, edge_sources);
    const detail::ProfileSampler ref_sampler(ref_geo, ref_cls);
    const auto ref_m = detail::build_matrices(ref_sampler, ref_cls, sources, cfg.theta_classes);
    const auto ref_curv = geom::curvature(sp.profile);

    std::map<std::pair<long long, int>, SweepRow> ordered;
    for (const auto& state : traj.samples) {
        if (state.t >= sp.t_hat) continue;
        const WarpedProfile& prof = state.profile;
        const ProfileGeometry geo(prof, cfg.theta_nodes);
        const auto& arc = geo.arc();
        detail::ClassSet mov_cls = base_cls;
        for (std::size_t i = 0; i < nn; ++i) mov_cls.s[i] = arc.s[i];
        const detail::ProfileSampler sampler(geo, mov_cls);
        const auto mov_m = detail::build_matrices(sampler, mov_cls, sources, cfg.theta_classes);
        const auto curv = geom::curvature(prof);
        const double vol_t = geom::volume(prof);

        for (std::size_t ji = 0; ji < cfg.j_set.size(); ++ji) {
            const int j = cfg.j_set[ji];
            if (!detail::region_usable(in_region[ji], component)) continue;
            const RegionSpec region = RegionSpec::coord_band(j);
            const auto x_parts = geom::resolve_region(prof, region);

            std::vector<double> sa, pa, sb, pb;
            std::vector<int> seg;
            for (std::size_t i = 0; i < nn; ++i) {
                if (!in_region[ji][i]) continue;
                sa.push_back(arc.s[i]);
                pa.push_back(arc.psi[i]);
                sb.push_back(ref_arc.s[i]);
                pb.push_back(ref_arc.psi[i]);
                seg.push_back(component[i]);
            }
            const double eps = swif::metric_eps(detail::matched_nodes(sa, pa, sb, pb, seg));

            double c_j = 0.0;
            for (std::size_t i = 0; i < nn; ++i) {
                if (!in_region[ji][i]) continue;
                if (curv.valid[i]) c_j = std::max(c_j, curv.rm_norm[i]);
                if (ref_curv.valid[i]) c_j = std::max(c_j, ref_curv.rm_norm[i]);
            }
            const double eps_formula =
                flow::lipschitz_factor(c_j, prof.n, state.t, sp.t_hat) - 1.0;

            const auto st = detail::pair_stats(mov_m, ref_m, base_cls, in_region[ji], component);
            const double d_u_mov = std::max(st.mov_comp1, st.mov_comp2);
            const double d_u_ref = std::max(st.ref_comp1, st.ref_comp2);

            const double vol_u_t = geom::volume(prof, region);
            const double vol_u_T = geom::volume(sp.profile, region);
            const double area_t = geom::boundary_area(prof, region);
            const double area_T = geom::boundary_area(sp.profile, region);
            const double gap_t = geo.hausdorff_gap(geo.to_s_intervals(x_parts));
            const double gap_T = ref_geo.hausdorff_gap(
                ref_geo.to_s_intervals(geom::resolve_region(sp.profile, region)));

            SweepRow row;
            row.side = "pre";
            row.t = state.t;
            row.j_or_omega = j;
            row.report = swif::swif_bound(eps, st.lambda, d_u_mov, d_u_ref, vol_u_t, vol_u_T,
                                          area_t, area_T, vol_t - vol_u_t,
                                          res.reference_volume - vol_u_T, gap_t, gap_T,
                                          cfg.delta_a, eps_formula);
            row.diameter = st.diameter;
            row.volume = vol_t;
            ordered[{static_cast<long long>(state.t * 1e12), j}] = row;
        }
    }

    std::map<long long, std::size_t> best;
    for (auto& [key, row] : ordered) {
        res.rows.push_back(row);
        const std::size_t idx = res.rows.size() - 1;
        const auto it = best.find(key.first);
        if (it == best.end() ||
            res.rows[idx].report.swif_bound < res.rows[it->second].report.swif_bound)
            best[key.first] = idx;
    }
    std::vector<double> bounds;
    for (const auto& [tk, idx] : best) {
        res.rows[idx].selected = true;
        res.selected.push_back(res.rows[idx]);
        bounds.push_back(res.rows[idx].report.swif_bound);
    }
    res.tail_monotone = detail::tail_nonincreasing(bounds, cfg.tail_rel_slack);
    res.final_bound = bounds.empty() ? 0.0 : bounds.back();
    return res;
}

// ---- post-surgery sweep --------------------------------------------------------

// Node correspondence between the singular sphere and the two sheets,
// produced from the surgery index maps.
struct PostCorrespondence {
    std::vector<std::size_t> sing_index;
    std::vector<int> sheet;                // 1 = lo, 2 = hi
    std::vector<std::size_t> sheet_index;
};

inline PostCorrespondence build_post_correspondence(
    const std::vector<std::ptrdiff_t>& map_lo, const std::vector<std::ptrdiff_t>& map_hi) {
    PostCorrespondence pc;
    for (std::size_t i = 0; i < map_lo.size(); ++i)
        if (map_lo[i] >= 0) {
            pc.sing_index.push_back(i);
            pc.sheet.push_back(1);
            pc.sheet_index.push_back(static_cast<std::size_t>(map_lo[i]));
        }
    for (std::size_t i = 0; i < map_hi.size(); ++i)
        if (map_hi[i] >= 0) {
            pc.sing_index.push_back(i);
            pc.sheet.push_back(2);
            pc.sheet_index.push_back(static_cast<std::size_t>(map_hi[i]));
        }
    return pc;
}

namespace detail {

// Kept x-interval on one sheet: from the outer pole to the last matched node
// still inside the region.
inline std::vector<Interval> kept_interval(const WarpedProfile& sheet,
                                           const PostCorrespondence& pc, int which,
                                           const std::vector<bool>& in_region) {
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pc.sheet.size(); ++k) {
        if (pc.sheet[k] != which || !in_region[k]) continue;
        const double x = sheet.x[pc.sheet_index[k]];
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    if (!(xmax > xmin)) return {};
    // the region reaches the outer pole (x = -1 on sheet 1, x = +1 on sheet 2)
    if (which == 1) xmin = sheet.x.front();
    if (which == 2) xmax = sheet.x.back();
    return {{xmin, xmax}};
}

}  // namespace detail

inline SweepResult post_surgery_sweep(const fwd::DoubleTrajectory& dtraj,
                                      const flow::SingularProfile& sp,
                                      const PostCorrespondence& pc, double rho_star,
                                      const SweepConfig& cfg) {
    cfg.validate();
    if (!(dtraj.kappa > 0.0))
        throw std::invalid_argument(
            "post_surgery_sweep: thread schedule must vanish at T with positive rate");

    SweepResult res;
    const ProfileGeometry ref_geo(sp.profile, cfg.theta_nodes);
    res.reference_volume = geom::volume(sp.profile);
    const auto& ref_arc = ref_geo.arc();

    const std::size_t ncls = pc.sing_index.size();
    detail::ClassSet cls;
    cls.sheet = pc.sheet;
    cls.s.resize(ncls);

    detail::ClassSet ref_cls;
    ref_cls.sheet.assign(ncls, 0);
    ref_cls.s.resize(ncls);
    for (std::size_t k = 0; k < ncls; ++k) ref_cls.s[k] = ref_arc.s[pc.sing_index[k]];

    const auto omegas = cfg.omegas();
    std::vector<std::vector<bool>> in_region(omegas.size(), std::vector<bool>(ncls, false));
    std::vector<int> component(pc.sheet.begin(), pc.sheet.end());
    std::vector<std::size_t> edge_sources;
    for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
        const double level = rho_star * std::sqrt(omegas[oi]);
        std::optional<std::size_t> edge_lo, edge_hi;
        for (std::size_t k = 0; k < ncls; ++k) {
            if (ref_arc.psi[pc.sing_index[k]] >= level) {
                in_region[oi][k] = true;
                if (pc.sheet[k] == 1) edge_lo = k;
                if (pc.sheet[k] == 2 && !edge_hi) edge_hi = k;
            }
        }
        if (edge_lo) edge_sources.push_back(*edge_lo);
        if (edge_hi) edge_sources.push_back(*edge_hi);
    }

    const auto sources = detail::pick_sources(ncls, cfg.source_stride, edge_sources);
    const detail::ProfileSampler ref_sampler(ref_geo, ref_cls);
    const auto ref_m = detail::build_matrices(ref_sampler, ref_cls, sources, cfg.theta_classes);

    std::map<std::pair<long long, long long>, SweepRow> ordered;
    const auto& lo_samples = dtraj.sheet_lo.samples;
    const auto& hi_samples = dtraj.sheet_hi.samples;
    const std::size_t nt = std::min(lo_samples.size(), hi_samples.size());
    for (std::size_t ti = 0; ti < nt; ++ti) {
        const auto& st_lo = lo_samples[ti];
        const auto& st_hi = hi_samples[ti];
        if (st_lo.t <= dtraj.t_surgery) continue;
        const double t = st_lo.t;
        const double L = dtraj.thread_length(t);
        const ProfileGeometry geo_lo(st_lo.profile, cfg.theta_nodes);
        const ProfileGeometry geo_hi(st_hi.profile, cfg.theta_nodes);
        const auto& arc_lo = geo_lo.arc();
        const auto& arc_hi = geo_hi.arc();
        detail::ClassSet mov_cls = cls;
        for (std::size_t k = 0; k < ncls; ++k)
            mov_cls.s[k] = (pc.sheet[k] == 1 ? arc_lo.s[pc.sheet_index[k]]
                                             : arc_hi.s[pc.sheet_index[k]]);
        const detail::DoubleSampler sampler(geo_lo, geo_hi, L, mov_cls);
        const auto mov_m = detail::build_matrices(sampler, mov_cls, sources, cfg.theta_classes);
        const double vol_sheets = geom::volume(st_lo.profile) + geom::volume(st_hi.profile);

        for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
            const double level = rho_star * std::sqrt(omegas[oi]);
            if (!detail::region_usable(in_region[oi], component)) continue;

            std::vector<double> sa, pa, sb, pb;
            std::vector<int> seg;
            for (std::size_t k = 0; k < ncls; ++k) {
                if (!in_region[oi][k]) continue;
                sa.push_back(mov_cls.s[k]);
                pa.push_back(pc.sheet[k] == 1 ? arc_lo.psi[pc.sheet_index[k]]
                                              : arc_hi.psi[pc.sheet_index[k]]);
                sb.push_back(ref_cls.s[k]);
                pb.push_back(ref_arc.psi[pc.sing_index[k]]);
                seg.push_back(pc.sheet[k]);
            }
            const double eps = swif::metric_eps(detail::matched_nodes(sa, pa, sb, pb, seg));
            const auto st = detail::pair_stats(mov_m, ref_m, cls, in_region[oi], component);
            const double d_u_mov = std::max(st.mov_comp1, st.mov_comp2);
            const double d_u_ref = std::max(st.ref_comp1, st.ref_comp2);

            const auto sing_parts = complement_of_pinch_band(sp, level);
            const double vol_u_T = geom::volume(sp.profile, sing_parts);
            const double area_T = geom::boundary_area(sp.profile, sing_parts);
            const auto parts_lo = detail::kept_interval(st_lo.profile, pc, 1, in_region[oi]);
            const auto parts_hi = detail::kept_interval(st_hi.profile, pc, 2, in_region[oi]);
            const double vol_u_t = geom::volume(st_lo.profile, parts_lo) +
                                   geom::volume(st_hi.profile, parts_hi);
            const double area_t = geom::boundary_area(st_lo.profile, parts_lo) +
                                  geom::boundary_area(st_hi.profile, parts_hi);
            const double resid_t = vol_sheets - vol_u_t;  // thread carries zero mass

            const double gap_T =
                ref_geo.hausdorff_gap(ref_geo.to_s_intervals(sing_parts));
            const auto sd_lo = detail::set_distance(geo_lo, parts_lo, true);
            const auto sd_hi = detail::set_distance(geo_hi, parts_hi, false);
            const double g1 = sd_lo.at_cap_pole, g2 = sd_hi.at_cap_pole;
            const double thread_gap =
                L > 0 ? std::min(0.5 * (L + g1 + g2), L + std::min(g1, g2)) : 0.0;
            const double gap_t = std::max({sd_lo.gap, sd_hi.gap, thread_gap});

            SweepRow row;
            row.side = "post";
            row.t = t;
            row.j_or_omega = omegas[oi];
            row.report = swif::swif_bound(eps, st.lambda, d_u_mov, d_u_ref, vol_u_t, vol_u_T,
                                          area_t, area_T, resid_t,
                                          res.reference_volume - vol_u_T, gap_t, gap_T,
                                          cfg.delta_a, 0.0);
            row.diameter = st.diameter;
            row.volume = vol_sheets;
            ordered[{static_cast<long long>((t - dtraj.t_surgery) * 1e15),
                     static_cast<long long>(oi)}] = row;
        }
    }

    std::map<long long, std::size_t> best;
    for (auto& [key, row] : ordered) {
        res.rows.push_back(row);
        const std::size_t idx = res.rows.size() - 1;
        const auto it = best.find(key.first);
        if (it == best.end() ||
            res.rows[idx].report.swif_bound < res.rows[it->second].report.swif_bound)
            best[key.first] = idx;
    }
    std::vector<double> bounds;  // ordered toward t -> T from above
    for (auto it = best.rbegin(); it != best.rend(); ++it) {
        res.rows[it->second].selected = true;
        res.selected.push_back(res.rows[it->second]);
        bounds.push_back(res.rows[it->second].report.swif_bound);
    }
    res.tail_monotone = detail::tail_nonincreasing(bounds, cfg.tail_rel_slack);
    res.final_bound = bounds.empty() ? 0.0 : bounds.back();
    return res;
}

// ---- post-post sweep -----------------------------------------------------------

// Compare (X, D(t)) with (X, D(t0)) for samples on both sides of an interior
// t0; the correspondence is the identity on sheet nodes outside the caps.
inline SweepResult post_post_sweep(const fwd::DoubleTrajectory& dtraj,
                                   const flow::SingularProfile& sp,
                                   const PostCorrespondence& pc, double rho_star, double t0,
                                   const SweepConfig& cfg) {
    cfg.validate();
    const auto& lo_samples = dtraj.sheet_lo.samples;
    const auto& hi_samples = dtraj.sheet_hi.samples;
    const std::size_t nt = std::min(lo_samples.size(), hi_samples.size());
    if (!(t0 > dtraj.t_surgery))
        throw std::invalid_argument("post_post_sweep: t0 must be after the surgery time");

    // nearest sample to t0
    std::size_t i0 = nt;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nt; ++i) {
        const double d = std::abs(lo_samples[i].t - t0);
        if (lo_samples[i].t > dtraj.t_surgery && d < bd) {
            bd = d;
            i0 = i;
        }
    }
    if (i0 == nt) throw std::invalid_argument("post_post_sweep: no sample near t0");
    const double t_ref = lo_samples[i0].t;
    const double L0 = dtraj.thread_length(t_ref);

    SweepResult res;
    const ProfileGeometry geo_lo0(lo_samples[i0].profile, cfg.theta_nodes);
    const ProfileGeometry geo_hi0(hi_samples[i0].profile, cfg.theta_nodes);
    res.reference_volume =
        geom::volume(lo_samples[i0].profile) + geom::volume(hi_samples[i0].profile);

    const std::size_t ncls = pc.sing_index.size();
    detail::ClassSet cls;
    cls.sheet = pc.sheet;
    cls.s.resize(ncls);

    const auto omegas = cfg.omegas();
    std::vector<std::vector<bool>> in_region(omegas.size(), std::vector<bool>(ncls, false));
    std::vector<int> component(pc.sheet.begin(), pc.sheet.end());
    std::vector<std::size_t> edge_sources;
    for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
        const double level = rho_star * std::sqrt(omegas[oi]);
        for (std::size_t k = 0; k < ncls; ++k)
            if (sp.arc.psi[pc.sing_index[k]] >= level) in_region[oi][k] = true;
    }
    const auto sources = detail::pick_sources(ncls, cfg.source_stride, edge_sources);

    detail::ClassSet ref_cls = cls;
    const auto& arc_lo0 = geo_lo0.arc();
    const auto& arc_hi0 = geo_hi0.arc();
    for (std::size_t k = 0; k < ncls; ++k)
        ref_cls.s[k] = (pc.sheet[k] == 1 ? arc_lo0.s[pc.sheet_index[k]]
                                         : arc_hi0.s[pc.sheet_index[k]]);
    const detail::DoubleSampler ref_sampler(geo_lo0, geo_hi0, L0, ref_cls);
    const auto ref_m = detail::build_matrices(ref_sampler, ref_cls, sources, cfg.theta_classes);

    const auto curv_lo0 = geom::curvature(lo_samples[i0].profile);
    const auto curv_hi0 = geom::curvature(hi_samples[i0].profile);

    std::map<std::pair<long long, long long>, SweepRow> ordered;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        const auto& st_lo = lo_samples[ti];
        const auto& st_hi = hi_samples[ti];
        if (st_lo.t <= dtraj.t_surgery) continue;
        const double t = st_lo.t;
        const double L = dtraj.thread_length(t);
        const ProfileGeometry geo_lo(st_lo.profile, cfg.theta_nodes);
        const ProfileGeometry geo_hi(st_hi.profile, cfg.theta_nodes);
        const auto& arc_lo = geo_lo.arc();
        const auto& arc_hi = geo_hi.arc();
        detail::ClassSet mov_cls = cls;
        for (std::size_t k = 0; k < ncls; ++k)
            mov_cls.s[k] = (pc.sheet[k] == 1 ? arc_lo.s[pc.sheet_index[k]]
                                             : arc_hi.s[pc.sheet_index[k]]);
        const detail::DoubleSampler sampler(geo_lo, geo_hi, L, mov_cls);
        const auto mov_m = detail::build_matrices(sampler, mov_cls, sources, cfg.theta_classes);
        const double vol_mov = geom::volume(st_lo.profile) + geom::volume(st_hi.profile);
        const auto curv_lo = geom::curvature(st_lo.profile);
        const auto curv_hi = geom::curvature(st_hi.profile);

        for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
            if (!detail::region_usable(in_region[oi], component)) continue;
            std::vector<double> sa, pa, sb, pb;
            std::vector<int> seg;
            for (std::size_t k = 0; k < ncls; ++k) {
                if (!in_region[oi][k]) continue;
                sa.push_back(mov_cls.s[k]);
                pa.push_back(pc.sheet[k] == 1 ? arc_lo.psi[pc.sheet_index[k]]
                                              : arc_hi.psi[pc.sheet_index[k]]);
                sb.push_back(ref_cls.s[k]);
                pb.push_back(pc.sheet[k] == 1 ? arc_lo0.psi[pc.sheet_index[k]]
                                              : arc_hi0.psi[pc.sheet_index[k]]);
                seg.push_back(pc.sheet[k]);
            }
            const double eps = swif::metric_eps(detail::matched_nodes(sa, pa, sb, pb, seg));

            double c_bound = 0.0;
            for (std::size_t k = 0; k < ncls; ++k) {
                if (!in_region[oi][k]) continue;
                const auto& cv = pc.sheet[k] == 1 ? curv_lo : curv_hi;
                const auto& cv0 = pc.sheet[k] == 1 ? curv_lo0 : curv_hi0;
                const std::size_t i = pc.sheet_index[k];
                if (cv.valid[i]) c_bound = std::max(c_bound, cv.rm_norm[i]);
                if (cv0.valid[i]) c_bound = std::max(c_bound, cv0.rm_norm[i]);
            }
            const double eps_formula =
                std::sqrt(flow::lipschitz_factor(c_bound, st_lo.profile.n,
                                                 std::min(t, t_ref), std::max(t, t_ref))) -
                1.0;

            const auto st = detail::pair_stats(mov_m, ref_m, cls, in_region[oi], component);
            const double d_u_mov = std::max(st.mov_comp1, st.mov_comp2);
            const double d_u_ref = std::max(st.ref_comp1, st.ref_comp2);

            const auto parts_lo = detail::kept_interval(st_lo.profile, pc, 1, in_region[oi]);
            const auto parts_hi = detail::kept_interval(st_hi.profile, pc, 2, in_region[oi]);
            const auto parts_lo0 =
                detail::kept_interval(lo_samples[i0].profile, pc, 1, in_region[oi]);
            const auto parts_hi0 =
                detail::kept_interval(hi_samples[i0].profile, pc, 2, in_region[oi]);
            const double vol_u_t = geom::volume(st_lo.profile, parts_lo) +
                                   geom::volume(st_hi.profile, parts_hi);
            const double vol_u_0 = geom::volume(lo_samples[i0].profile, parts_lo0) +
                                   geom::volume(hi_samples[i0].profile, parts_hi0);
            const double area_t = geom::boundary_area(st_lo.profile, parts_lo) +
                                  geom::boundary_area(st_hi.profile, parts_hi);
            const double area_0 = geom::boundary_area(lo_samples[i0].profile, parts_lo0) +
                                  geom::boundary_area(hi_samples[i0].profile, parts_hi0);

            const auto sd_lo = detail::set_distance(geo_lo, parts_lo, true);
            const auto sd_hi = detail::set_distance(geo_hi, parts_hi, false);
            const auto sd_lo0 = detail::set_distance(geo_lo0, parts_lo0, true);
            const auto sd_hi0 = detail::set_distance(geo_hi0, parts_hi0, false);
            auto thread_gap = [](double L_, double g1, double g2) {
                return L_ > 0 ? std::min(0.5 * (L_ + g1 + g2), L_ + std::min(g1, g2)) : 0.0;
            };
            const double gap_t = std::max(
                {sd_lo.gap, sd_hi.gap, thread_gap(L, sd_lo.at_cap_pole, sd_hi.at_cap_pole)});
            const double gap_0 =
                std::max({sd_lo0.gap, sd_hi0.gap,
                          thread_gap(L0, sd_lo0.at_cap_pole, sd_hi0.at_cap_pole)});

            SweepRow row;
            row.side = "postpost";
            row.t = t;
            row.j_or_omega = omegas[oi];
            row.report = swif::swif_bound(eps, st.lambda, d_u_mov, d_u_ref, vol_u_t, vol_u_0,
                                          area_t, area_0, vol_mov - vol_u_t,
                                          res.reference_volume - vol_u_0, gap_t, gap_0,
                                          cfg.delta_a, eps_formula);
            row.diameter = st.diameter;
            row.volume = vol_mov;
            // key: gap first so the selected sequence approaches t0, with the
            // side bit keeping t0 - d and t0 + d as distinct rows
            const double dt0 = std::abs(t - t_ref);
            const long long key =
                2 * static_cast<long long>(dt0 * 1e15) + (t > t_ref ? 1 : 0);
            ordered[{key, static_cast<long long>(oi)}] = row;
        }
    }

    std::map<long long, std::size_t> best;
    for (auto& [key, row] : ordered) {
        res.rows.push_back(row);
        const std::size_t idx = res.rows.size() - 1;
        const auto it = best.find(key.first);
        if (it == best.end() ||
            res.rows[idx].report.swif_bound < res.rows[it->second].report.swif_bound)
            best[key.first] = idx;
    }
    std::vector<double> bounds;  // ordered by decreasing |t - t0|
    for (auto it = best.rbegin(); it != best.rend(); ++it) {
        res.rows[it->second].selected = true;
        res.selected.push_back(res.rows[it->second]);
        bounds.push_back(res.rows[it->second].report.swif_bound);
    }
    res.tail_monotone = detail::tail_nonincreasing(bounds, cfg.tail_rel_slack);
    res.final_bound = bounds.empty() ? 0.0 : bounds.back();
    return res;
}

// ---- series --------------------------------------------------------------------

struct SeriesPoint {
    double t = 0.0;
    double value = 0.0;
};

struct VolumeSeries {
    std::vector<SeriesPoint> pre;    // Vol(M, g(t))
    std::vector<SeriesPoint> post;   // Vol(M1) + Vol(M2)
    double vol_singular = 0.0;
    double pre_alpha = 0.0;          // fitted |Vol(t) - Vol(T)| ~ C (T-t)^alpha
    double pre_limit_gap = 0.0;      // |Vol(last pre) - Vol(T)| / Vol(T)
    double post_limit_gap = 0.0;     // |Vol(first post) - Vol(T)| / Vol(T)
    bool two_sided_ok = false;
};

inline VolumeSeries volume_series(const flow::Trajectory& pre,
                                  const fwd::DoubleTrajectory& post,
                                  const flow::SingularProfile& sp, double tolerance = 0.02) {
    VolumeSeries out;
    out.vol_singular = geom::volume(sp.profile);
    for (const auto& st : pre.samples)
        if (st.t < sp.t_hat) out.pre.push_back({st.t, geom::volume(st.profile)});
    const std::size_t nt =
        std::min(post.sheet_lo.samples.size(), post.sheet_hi.samples.size());
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& lo = post.sheet_lo.samples[i];
        const auto& hi = post.sheet_hi.samples[i];
        if (lo.t <= post.t_surgery) continue;
        out.post.push_back({lo.t, geom::volume(lo.profile) + geom::volume(hi.profile)});
    }
    std::vector<double> dts, dvs;
    for (const auto& p : out.pre) {
        const double dv = std::abs(p.value - out.vol_singular);
        const double dt = sp.t_hat - p.t;
        if (dv > 0 && dt > 0) {
            dts.push_back(dt);
            dvs.push_back(dv);
        }
    }
    if (dts.size() >= 3) out.pre_alpha = loglog_slope(dts, dvs);
    if (!out.pre.empty())
        out.pre_limit_gap = std::abs(out.pre.back().value - out.vol_singular) / out.vol_singular;
    if (!out.post.empty())
        out.post_limit_gap =
            std::abs(out.post.front().value - out.vol_singular) / out.vol_singular;
    out.two_sided_ok = !out.pre.empty() && !out.post.empty() &&
                       out.pre_limit_gap < tolerance && out.post_limit_gap < tolerance;
    return out;
}

struct DiameterSeries {
    std::vector<SeriesPoint> points;
    double sup = 0.0;
    double c_fit = 0.0;          // |d(t2)-d(t1)| <= C |sqrt(T-t1) - sqrt(T-t2)|
    bool hypothesis_ok = false;  // two bumps with psi >= c > 0 along the run
    double min_bump = 0.0;
    bool bounded = false;
};

inline DiameterSeries diameter_series(const flow::Trajectory& traj, double t_hat,
                                      const SweepConfig& cfg) {
    DiameterSeries out;
    double min_bump = std::numeric_limits<double>::infinity();
    std::size_t bump_count_initial = 0;
    bool first = true;
    for (const auto& st : traj.samples) {
        const ProfileGeometry geo(st.profile, cfg.theta_nodes);
        out.points.push_back({st.t, geo.diameter(cfg.source_stride)});
        // interior local maxima of psi (bumps)
        std::size_t bumps = 0;
        double bump_min_here = std::numeric_limits<double>::infinity();
        const auto& psi = st.profile.psi;
        for (std::size_t i = 1; i + 1 < psi.size(); ++i) {
            if (psi[i] >= psi[i - 1] && psi[i] >= psi[i + 1] && psi[i] > 0) {
                ++bumps;
                bump_min_here = std::min(bump_min_here, psi[i]);
            }
        }
        if (first) {
            bump_count_initial = bumps;
            first = false;
        }
        if (std::isfinite(bump_min_here)) min_bump = std::min(min_bump, bump_min_here);
    }
    out.min_bump = std::isfinite(min_bump) ? min_bump : 0.0;
    out.hypothesis_ok = bump_count_initial >= 2 && out.min_bump > 0.0;
    for (const auto& p : out.points) out.sup = std::max(out.sup, p.value);
    out.bounded = std::isfinite(out.sup);
    for (std::size_t i = 1; i < out.points.size(); ++i) {
        const double dd = std::abs(out.points[i].value - out.points[i - 1].value);
        const double ds = std::abs(std::sqrt(std::max(t_hat - out.points[i - 1].t, 0.0)) -
                                   std::sqrt(std::max(t_hat - out.points[i].t, 0.0)));
        if (ds > 1e-12) out.c_fit = std::max(out.c_fit, dd / ds);
    }
    return out;
}

// Equatorial-only pinching: psi_T vanishes at the pinch (and poles) only.
inline bool equatorial_only_pinching(const flow::SingularProfile& sp) {
    const auto& psi = sp.profile.psi;
    for (std::size_t i = 1; i + 1 < psi.size(); ++i) {
        if (i == sp.pinch_index) continue;
        if (!(psi[i] > 0.0)) return false;
    }
    return true;
}

// ---- one-off comparison ----------------------------------------------------------

// Bound report between two profiles sharing an x grid, identity
// correspondence on the region.
inline swif::SwifBoundReport compare_profiles(const WarpedProfile& a, const WarpedProfile& b,
                                              const RegionSpec& region,
                                              const SweepConfig& cfg) {
    if (a.size() != b.size() || a.n != b.n)
        throw std::invalid_argument("compare_profiles: profiles must share a grid");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a.x[i] - b.x[i]) > 1e-12)
            throw std::invalid_argument("compare_profiles: x grids differ");
    const std::size_t nn = a.size();
    const ProfileGeometry geo_a(a, cfg.theta_nodes);
    const ProfileGeometry geo_b(b, cfg.theta_nodes);
    const auto& arc_a = geo_a.arc();
    const auto& arc_b = geo_b.arc();

    std::vector<bool> in_region(nn, false);
    std::vector<int> component(nn, 0);
    const auto x_parts = geom::resolve_region(a, region);
    for (std::size_t i = 0; i < nn; ++i) {
        for (std::size_t c = 0; c < x_parts.size(); ++c) {
            if (a.x[i] >= x_parts[c].lo && a.x[i] <= x_parts[c].hi) {
                in_region[i] = true;
                component[i] = static_cast<int>(std::min<std::size_t>(c, 1)) + 1;
            }
        }
    }
    detail::ClassSet cls_a, cls_b;
    cls_a.sheet.assign(nn, 0);
    cls_b.sheet.assign(nn, 0);
    cls_a.s = arc_a.s;
    cls_b.s = arc_b.s;
    const auto sources = detail::pick_sources(nn, cfg.source_stride, {});
    const detail::ProfileSampler sampler_a(geo_a, cls_a);
    const detail::ProfileSampler sampler_b(geo_b, cls_b);
    const auto ma = detail::build_matrices(sampler_a, cls_a, sources, cfg.theta_classes);
    const auto mb = detail::build_matrices(sampler_b, cls_b, sources, cfg.theta_classes);

    std::vector<double> sa, pa, sb, pb;
    std::vector<int> seg;
    for (std::size_t i = 0; i < nn; ++i) {
        if (!in_region[i]) continue;
        sa.push_back(arc_a.s[i]);
        pa.push_back(arc_a.psi[i]);
        sb.push_back(arc_b.s[i]);
        pb.push_back(arc_b.psi[i]);
        seg.push_back(component[i]);
    }
    const double eps = swif::metric_eps(detail::matched_nodes(sa, pa, sb, pb, seg));
    const auto st = detail::pair_stats(ma, mb, cls_a, in_region, component);
    const double vol_a = geom::volume(a), vol_b = geom::volume(b);
    const double vol_ua = geom::volume(a, region), vol_ub = geom::volume(b, region);
    const double gap_a = geo_a.hausdorff_gap(geo_a.to_s_intervals(x_parts));
    const double gap_b = geo_b.hausdorff_gap(
        geo_b.to_s_intervals(geom::resolve_region(b, region)));
    return swif::swif_bound(eps, st.lambda, std::max(st.mov_comp1, st.mov_comp2),
                            std::max(st.ref_comp1, st.ref_comp2), vol_ua, vol_ub,
                            geom::boundary_area(a, region), geom::boundary_area(b, region),
                            vol_a - vol_ua, vol_b - vol_ub, gap_a, gap_b, cfg.delta_a, 0.0);
}

// ---- full experiment ---------------------------------------------------------------

struct ExperimentResult {
    flow::Trajectory pre;
    flow::SingularProfile singular;
    fwd::SurgeryResult surgery;
    fwd::DoubleTrajectory post;
    PostCorrespondence correspondence;
    SweepResult pre_sweep;
    SweepResult post_sweep;
    SweepResult postpost_sweep;
    VolumeSeries volumes;
    DiameterSeries diameters;
    double t_hat = 0.0;
    double t0 = 0.0;  // interior reference time of the post-post sweep
};

// The whole pipeline: pinch run, singular profile, pre sweep, surgery,
// post-surgery evolution with both sweep schedules, series.
inline ExperimentResult run_experiment(const WarpedProfile& initial,
                                       const flow::SolverConfig& solver_cfg,
                                       const fwd::SurgeryConfig& surgery_cfg,
                                       const SweepConfig& sweep_cfg) {
    ExperimentResult ex;
    // pass 1: locate the singular time
    auto first = flow::run_until(flow::make_state(initial), solver_cfg,
                                 flow::StopSpec::at_pinch());
    if (first.final_status.phase != flow::Phase::PinchDetected)
        throw std::runtime_error("run_experiment: initial data did not pinch");
    const double t_hat = first.t_hat;
    ex.t_hat = t_hat;
    // pass 2: identical dynamics, sampled on the schedule
    ex.pre = flow::run_until(flow::make_state(initial), solver_cfg,
                             flow::StopSpec::at_pinch(), schedule_pre(t_hat, sweep_cfg));
    ex.singular = flow::singular_profile(ex.pre);
    ex.pre_sweep = pre_surgery_sweep(ex.pre, ex.singular, sweep_cfg);

    fwd::SurgeryConfig scfg = surgery_cfg;
    scfg.kappa = sweep_cfg.kappa;
    ex.surgery = fwd::regularize(ex.singular, scfg);
    ex.correspondence = build_post_correspondence(ex.surgery.map_lo, ex.surgery.map_hi);

    const double d0 = sweep_cfg.post_delta0_frac * t_hat;
    ex.t0 = t_hat + d0;
    std::vector<double> times = schedule_post(t_hat, sweep_cfg);
    for (int k = 1; k <= sweep_cfg.k_max; ++k) {
        times.push_back(ex.t0 - d0 * std::pow(2.0, -k));
        times.push_back(ex.t0 + d0 * std::pow(2.0, -k));
    }
    times.push_back(ex.t0);
    std::sort(times.begin(), times.end());
    ex.post = fwd::evolve_double(ex.surgery.sheet_lo, ex.surgery.sheet_hi, t_hat, solver_cfg,
                                 scfg, times);
    ex.post_sweep =
        post_surgery_sweep(ex.post, ex.singular, ex.correspondence, scfg.rho_star, sweep_cfg);
    ex.postpost_sweep = post_post_sweep(ex.post, ex.singular, ex.correspondence,
                                        scfg.rho_star, ex.t0, sweep_cfg);
    ex.volumes = volume_series(ex.pre, ex.post, ex.singular);
    ex.diameters = diameter_series(ex.pre, t_hat, sweep_cfg);
    return ex;
}

}  // namespace neckflow::harness
