#pragma once

// Explicit upper bounds on the intrinsic-flat and Gromov-Hausdorff distance
// between two spaces carrying diffeomorphic regions: metric-equivalence eps,
// distance distortion lambda, the hemispherical width a, heights h and hbar,
// and the bound
//
//   d_F <= (2 hbar + a)(Vol_m U1 + Vol_m U2 + Vol_{m-1} dU1 + Vol_{m-1} dU2)
//          + ||T1||(X1 \ U1) + ||T2||(X2 \ U2),
//   d_GH <= a + 2 hbar + max Hausdorff gaps.
//
// The common embedding space justifies the formulas; only its volume
// consequences are computed here.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "neckflow/grid.hpp"
#include "neckflow/profile.hpp"

namespace neckflow::swif {

// One matched node of a correspondence: the local radial metric increment and
// fiber radius on both sides. Rotational symmetry reduces every tangent
// direction to these two.
struct MatchedNode {
    double ds_a = 0.0;
    double psi_a = 0.0;
    double ds_b = 0.0;
    double psi_b = 0.0;
};

// Smallest eps with psi1*g1 < (1+eps)^2 psi2*g2 and vice versa over the
// matched nodes. Nodes where both fiber radii are degenerate contribute the
// radial ratio only.
inline double metric_eps(const std::vector<MatchedNode>& nodes) {
    if (nodes.empty()) throw std::invalid_argument("metric_eps: empty correspondence");
    double worst = 1.0;
    for (const auto& nd : nodes) {
        if (!(nd.ds_a > 0.0) || !(nd.ds_b > 0.0))
            throw std::invalid_argument("metric_eps: nonpositive radial increment");
        const double rr = nd.ds_a / nd.ds_b;
        worst = std::max(worst, std::max(rr, 1.0 / rr));
        const double scale = std::max(nd.psi_a, nd.psi_b);
        if (scale > 1e-12) {
            if (!(nd.psi_a > 0.0) || !(nd.psi_b > 0.0))
                throw std::invalid_argument("metric_eps: degenerate fiber on one side only");
            const double rf = nd.psi_a / nd.psi_b;
            worst = std::max(worst, std::max(rf, 1.0 / rf));
        }
    }
    return worst - 1.0;
}

// Distances from one sampled source class to every target class of the
// correspondence; thetas lists the fiber-angle classes of the targets.
using PairDistanceProvider = std::function<std::vector<double>(
    std::size_t source_index, const std::vector<double>& thetas)>;

struct DistortionResult {
    double lambda = 0.0;
    std::size_t arg_source = 0;
    std::size_t arg_target = 0;
    double arg_theta = 0.0;
};

// lambda = sup over sampled pairs of |d_X1 - d_X2|, deterministic stratified
// sampling: every `stride`-th class as source, all classes x angle classes as
// targets. Extra source indices (component-crossing poles) may be appended.
inline DistortionResult distortion_lambda(const PairDistanceProvider& da,
                                          const PairDistanceProvider& db,
                                          std::size_t num_classes, std::size_t stride,
                                          std::size_t theta_classes,
                                          const std::vector<std::size_t>& extra_sources = {}) {
    if (num_classes == 0) throw std::invalid_argument("distortion_lambda: empty region");
    if (stride == 0) stride = 1;
    std::vector<double> thetas(theta_classes);
    for (std::size_t i = 0; i < theta_classes; ++i)
        thetas[i] = kPi * static_cast<double>(i) / (theta_classes > 1 ? theta_classes - 1 : 1);
    std::vector<std::size_t> sources;
    for (std::size_t k = 0; k < num_classes; k += stride) sources.push_back(k);
    for (std::size_t k : extra_sources)
        if (k < num_classes) sources.push_back(k);
    DistortionResult out;
    for (std::size_t src : sources) {
        const auto va = da(src, thetas);
        const auto vb = db(src, thetas);
        if (va.size() != vb.size())
            throw std::runtime_error("distortion_lambda: provider size mismatch");
        for (std::size_t q = 0; q < va.size(); ++q) {
            const double diff = std::abs(va[q] - vb[q]);
            if (diff > out.lambda) {
                out.lambda = diff;
                out.arg_source = src;
                out.arg_target = q / thetas.size();
                out.arg_theta = thetas[q % thetas.size()];
            }
        }
    }
    return out;
}

struct Widths {
    double a = 0.0;
    double h = 0.0;
    double hbar = 0.0;
};

// Hemispherical width and heights. The width inequality is strict; delta_a
// realizes it with a relative margin.
inline Widths widths_and_heights(double eps, double lambda, double d_u1, double d_u2,
                                 double delta_a = 1e-6) {
    if (eps < 0 || lambda < 0 || d_u1 < 0 || d_u2 < 0)
        throw std::invalid_argument("widths_and_heights: negative input");
    const double maxd = std::max(d_u1, d_u2);
    Widths w;
    w.a = (1.0 + delta_a) * std::acos(1.0 / (1.0 + eps)) / kPi * maxd;
    w.h = std::sqrt(lambda * (maxd + 0.25 * lambda));
    const double e2 = std::sqrt(eps * eps + 2.0 * eps);
    w.hbar = std::max(w.h, std::max(e2 * d_u1, e2 * d_u2));
    return w;
}

struct SwifBoundReport {
    double eps = 0.0;
    double eps_formula = 0.0;  // curvature-derived value, reported alongside
    double lambda = 0.0;
    double d_u1 = 0.0, d_u2 = 0.0;  // extrinsic per-component diameters
    double a = 0.0, h = 0.0, hbar = 0.0;
    double vol_u1 = 0.0, vol_u2 = 0.0;        // Vol_m(U_i)
    double area_b1 = 0.0, area_b2 = 0.0;      // Vol_{m-1}(dU_i)
    double residual_1 = 0.0, residual_2 = 0.0;  // ||T_i||(X_i \ U_i)
    double gap_1 = 0.0, gap_2 = 0.0;            // Hausdorff gaps d_H(U_i, X_i)
    double delta_a = 1e-6;
    double swif_bound = 0.0;
    double gh_bound = 0.0;
};

// Assemble the bound from its ingredients; the formula identity
// swif = (2 hbar + a) * (vol terms) + residuals holds exactly.
inline SwifBoundReport swif_bound(double eps, double lambda, double d_u1, double d_u2,
                                  double vol_u1, double vol_u2, double area_b1, double area_b2,
                                  double residual_1, double residual_2, double gap_1,
                                  double gap_2, double delta_a = 1e-6,
                                  double eps_formula = 0.0) {
    SwifBoundReport r;
    r.eps = eps;
    r.eps_formula = eps_formula;
    r.lambda = lambda;
    r.d_u1 = d_u1;
    r.d_u2 = d_u2;
    const Widths w = widths_and_heights(eps, lambda, d_u1, d_u2, delta_a);
    r.a = w.a;
    r.h = w.h;
    r.hbar = w.hbar;
    r.vol_u1 = vol_u1;
    r.vol_u2 = vol_u2;
    r.area_b1 = area_b1;
    r.area_b2 = area_b2;
    r.residual_1 = residual_1;
    r.residual_2 = residual_2;
    r.gap_1 = gap_1;
    r.gap_2 = gap_2;
    r.delta_a = delta_a;
    r.swif_bound = (2.0 * w.hbar + w.a) * (vol_u1 + vol_u2 + area_b1 + area_b2) +
                   residual_1 + residual_2;
    r.gh_bound = w.a + 2.0 * w.hbar + std::max(gap_1, gap_2);
    return r;
}

// Exact recomputation of the assembled formulas from the report fields.
inline double recompute_swif_bound(const SwifBoundReport& r) {
    return (2.0 * r.hbar + r.a) * (r.vol_u1 + r.vol_u2 + r.area_b1 + r.area_b2) +
           r.residual_1 + r.residual_2;
}
inline double recompute_gh_bound(const SwifBoundReport& r) {
    return r.a + 2.0 * r.hbar + std::max(r.gap_1, r.gap_2);
}

// Flat-distance bound between two times of one smooth flow under a curvature
// bound C: arccos(sqrt(e^{sqrt(n) C (t1 - t2)})) / pi * max diameter.
inline double smooth_time_bound(double C, int n, double t1, double t2, double diam1,
                                double diam2) {
    if (t1 > t2) throw std::invalid_argument("smooth_time_bound: t1 must be <= t2");
    if (C < 0) throw std::invalid_argument("smooth_time_bound: C must be >= 0");
    const double arg = std::sqrt(std::exp(std::sqrt(static_cast<double>(n)) * C * (t1 - t2)));
    return std::acos(std::min(arg, 1.0)) / kPi * std::max(diam1, diam2);
}

// Squeeze bound for globally (1+eps)^2-equivalent metrics:
// a (V1 + V2 + A1 + A2) with a from the opposite diameters.
inline double squeeze_bound(double eps, double diam1, double diam2, double v1, double v2,
                            double a1, double a2, double delta_a = 1e-6) {
    if (eps < 0) throw std::invalid_argument("squeeze_bound: eps must be >= 0");
    const double w = std::acos(1.0 / (1.0 + eps)) / kPi;
    const double width_1 = (1.0 + delta_a) * w * diam2;
    const double width_2 = (1.0 + delta_a) * w * diam1;
    return std::max(width_1, width_2) * (v1 + v2 + a1 + a2);
}

}  // namespace neckflow::swif
