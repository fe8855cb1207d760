#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "neckflow/geodesic.hpp"
#include "neckflow/profile.hpp"
#include "testutil.hpp"

using namespace neckflow;
using namespace neckflow::geom;

TEST_CASE("arclength: round unit sphere meridian has length pi") {
    const auto p = make_round_sphere(2, 1.0, 513);
    const auto arc = arclength(p);
    CHECK(arc.length() == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(arc.s.front() == 0.0);
    CHECK(strictly_increasing(arc.s));
}

TEST_CASE("arclength: unit phi spans length 2") {
    WarpedProfile p = make_cylinder_band(2, 0.5, 257);
    const auto arc = arclength(p);
    CHECK(arc.length() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("arclength: randomized smooth phi matches adaptive quadrature") {
    for (std::uint64_t seed : {11u, 23u, 47u}) {
        WarpedProfile p = make_cylinder_band(2, 0.3, 8193);
        for (std::size_t i = 0; i < p.size(); ++i) p.phi[i] = testutil::wiggly(p.x[i], seed);
        const double exact = testutil::adaptive_simpson(
            [seed](double x) { return testutil::wiggly(x, seed); }, -1.0, 1.0);
        const auto arc = arclength(p);
        CHECK(std::abs(arc.length() - exact) / exact < 1e-6);
    }
}

TEST_CASE("arclength: nonpositive phi rejected") {
    WarpedProfile p = make_round_sphere(2, 1.0, 65);
    p.phi[10] = 0.0;
    CHECK_THROWS_AS((void)arclength(p), std::invalid_argument);
}

TEST_CASE("curvature: round S^3 of radius 1 is constant curvature 1") {
    const auto p = make_round_sphere(2, 1.0, 513);
    const auto c = curvature(p);
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        CHECK(c.k_rad[i] == doctest::Approx(1.0).epsilon(5e-3));
        CHECK(c.k_sph[i] == doctest::Approx(1.0).epsilon(5e-3));
        CHECK(c.rm_norm[i] == doctest::Approx(std::sqrt(6.0)).epsilon(5e-3));
    }
}

TEST_CASE("curvature: flat band is a product metric") {
    const auto p = make_cylinder_band(3, 0.5, 257);
    const auto c = curvature(p);
    for (std::size_t i = 4; i + 4 < p.size(); ++i) {
        CHECK(std::abs(c.k_rad[i]) < 1e-10);
        CHECK(c.k_sph[i] == doctest::Approx(1.0 / 0.25).epsilon(1e-10));
    }
}

TEST_CASE("curvature: rm_norm * psi^2 bounded on the bands of a pinched profile") {
    // per-band sup of rm_norm psi^2 stays below a j-independent constant
    // under refinement
    for (std::size_t nodes : {257u, 513u}) {
        const auto p = make_neck_profile(2, nodes, 1.0, 0.8, 4);
        const auto c = curvature(p);
        for (int j : {4, 8, 16, 64}) {
            double sup = 0.0;
            for (std::size_t i = 1; i + 1 < p.size(); ++i) {
                if (std::abs(p.x[i]) < 1.0 / j) continue;
                if (!c.valid[i]) continue;
                sup = std::max(sup, c.rm_norm[i] * p.psi[i] * p.psi[i]);
            }
            CHECK(sup < 12.0);
        }
    }
}

TEST_CASE("curvature: evaluation at a psi = 0 node errors") {
    const auto p = make_round_sphere(2, 1.0, 65);
    CHECK_THROWS_AS((void)rm_norm_at(p, 0), std::domain_error);
    CHECK(rm_norm_at(p, 32) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-3));
}

TEST_CASE("curvature: sin profile reproduces constant 1 at order >= 1.8") {
    // max-norm error over a fixed interior window s in [0.15, l - 0.15]
    double err_coarse = 0.0, err_fine = 0.0;
    for (std::size_t nodes : {257u, 513u}) {
        const auto p = make_round_sphere(2, 1.0, nodes);
        const auto arc = arclength(p);
        const auto c = curvature(p);
        double err = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (arc.s[i] < 0.15 || arc.s[i] > arc.length() - 0.15) continue;
            err = std::max(err, std::abs(c.k_sph[i] - 1.0));
            err = std::max(err, std::abs(c.k_rad[i] - 1.0));
        }
        (nodes == 257 ? err_coarse : err_fine) = err;
    }
    const double order = std::log2(err_coarse / err_fine);
    CHECK(order >= 1.8);
}

TEST_CASE("volume: round S^3 is 2 pi^2; psi == 0 region vanishes; additivity") {
    const auto p = make_round_sphere(2, 1.0, 1025);
    CHECK(std::abs(volume(p) - 2.0 * kPi * kPi) / (2.0 * kPi * kPi) < 1e-4);

    WarpedProfile z = p;
    for (auto& v : z.psi) v = 0.0;
    CHECK(volume(z) == doctest::Approx(0.0));

    // additivity over a band partition is exact up to roundoff
    const double whole = volume(p);
    double sum = 0.0;
    const double cuts[] = {-1.0, -0.4, 0.1, 0.55, 1.0};
    for (int k = 0; k < 4; ++k) sum += volume(p, std::vector<Interval>{{cuts[k], cuts[k + 1]}});
    CHECK(sum == doctest::Approx(whole).epsilon(1e-12));
}

TEST_CASE("volume: band region matches Richardson-extrapolated quadrature") {
    // pinched profile, band |x| >= 1/4; reference from two refined grids
    auto coarse = make_neck_profile(2, 513, 1.0, 0.8, 4);
    auto fine = make_neck_profile(2, 1025, 1.0, 0.8, 4);
    auto finer = make_neck_profile(2, 2049, 1.0, 0.8, 4);
    const RegionSpec band = RegionSpec::coord_band(4);
    const double v1 = volume(fine, band), v2 = volume(finer, band);
    const double reference = v2 + (v2 - v1) / 3.0;  // second-order extrapolation
    CHECK(std::abs(volume(coarse, band) - reference) / reference < 1e-5);
}

TEST_CASE("boundary_area: whole closed sphere has none; band slices match the slice formula") {
    const auto p = make_round_sphere(2, 1.0, 1025);
    CHECK(boundary_area(p, RegionSpec::whole()) == doctest::Approx(0.0));

    const RegionSpec band = RegionSpec::coord_band(3);
    const auto parts = resolve_region(p, band);
    REQUIRE(parts.size() == 2);
    // each slice is a round 2-sphere of radius psi(s_b): area 4 pi psi^2
    double expect = 0.0;
    for (const auto& iv : parts) {
        for (double xb : {iv.lo, iv.hi}) {
            if (std::abs(xb) > 1.0 - 1e-9) continue;
            const double psi_b = std::cos(kPi * xb / 2.0);
            expect += 4.0 * kPi * psi_b * psi_b;
        }
    }
    CHECK(boundary_area(p, band) == doctest::Approx(expect).epsilon(1e-4));

    // two-component band: the total is the sum over the 2 slices
    double per_slice_sum = 0.0;
    for (const auto& iv : parts)
        per_slice_sum += boundary_area(p, std::vector<Interval>{iv});
    CHECK(boundary_area(p, band) == doctest::Approx(per_slice_sum).epsilon(1e-12));
}

TEST_CASE("geodesic_distance: poles of the round sphere are pi apart") {
    const auto p = make_round_sphere(2, 1.0, 513);
    ProfileGeometry geo(p, 96);
    CHECK(std::abs(geo.distance(0.0, geo.length(), 0.0) - kPi) < 1e-3);
}

TEST_CASE("geodesic_distance: closed form on the round sphere") {
    const auto p = make_round_sphere(2, 1.0, 513);
    ProfileGeometry geo(p, 128);
    CHECK(std::abs(geo.distance(kPi / 2, kPi / 2, kPi / 2) - kPi / 2) < 1e-2);
    SplitMix64 rng(404);
    for (int k = 0; k < 12; ++k) {
        const double s1 = rng.uniform(0.3, kPi - 0.3);
        const double s2 = rng.uniform(0.3, kPi - 0.3);
        const double dth = rng.uniform(0.0, kPi);
        const double exact = testutil::round_sphere_distance(1.0, s1, s2, dth);
        CHECK(std::abs(geo.distance(s1, s2, dth) - exact) < 1e-2);
    }
}

TEST_CASE("geodesic_distance: neck profile agrees with the Dijkstra oracle") {
    const auto p = make_neck_profile(2, 257, 1.0, 0.8, 4);
    const auto arc = arclength(p);
    ProfileGeometry geo(p, 160, 2);
    testutil::GridDijkstra oracle(geo.strip().s, geo.strip().psi, 160);
    const std::size_t src = geo.row_near(0.35 * arc.length());
    const auto ref = oracle.solve(src);
    const auto field = geo.field_from_row_uncached(src);
    double worst = 0.0;
    for (std::size_t i = 4; i + 4 < geo.strip().rows(); i += 7) {
        for (std::size_t j = 0; j < geo.strip().cols(); j += 13) {
            const double a = field[geo.strip().index(i, j)];
            const double b = ref[i * geo.strip().cols() + j];
            if (b > 0.3) worst = std::max(worst, std::abs(a - b) / b);
        }
    }
    CHECK(worst < 1e-2);
}

TEST_CASE("geodesic_distance: error decreases under refinement at order >= 0.9") {
    double errs[2];
    int slot = 0;
    for (std::size_t nodes : {129u, 257u}) {
        const auto p = make_round_sphere(2, 1.0, nodes);
        ProfileGeometry geo(p, nodes / 2);
        double err = 0.0;
        SplitMix64 rng(7);
        for (int k = 0; k < 10; ++k) {
            const double s1 = rng.uniform(0.4, kPi - 0.4);
            const double s2 = rng.uniform(0.4, kPi - 0.4);
            const double dth = rng.uniform(0.2, kPi);
            err = std::max(err, std::abs(geo.distance(s1, s2, dth) -
                                         testutil::round_sphere_distance(1.0, s1, s2, dth)));
        }
        errs[slot++] = err;
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 0.9);
}

TEST_CASE("geodesic_distance: arguments outside the strip are rejected") {
    const auto p = make_round_sphere(2, 1.0, 65);
    ProfileGeometry geo(p, 48);
    CHECK_THROWS_AS((void)geo.distance(0.0, 2.0 * kPi, 0.0), std::domain_error);
    CHECK_THROWS_AS((void)geo.distance(std::nan(""), 1.0, 0.0), std::domain_error);
}

TEST_CASE("distance metric axioms on random triples within tolerance") {
    const auto p = make_neck_profile(2, 193, 1.0, 0.8, 4);
    ProfileGeometry geo(p, 64);
    geo.set_cache_limit(256);
    const double l = geo.length();
    const double tol = 2.0 * geo.tolerance();
    SplitMix64 rng(99);
    // points snap to strip rows so the cached fields are exact at sources
    auto snap = [&](double s) { return geo.strip().s[geo.row_near(s)]; };
    int checked = 0;
    for (int k = 0; k < 200; ++k) {
        const double sa = snap(rng.uniform(0.02 * l, 0.98 * l));
        const double sb = snap(rng.uniform(0.02 * l, 0.98 * l));
        const double sc = snap(rng.uniform(0.02 * l, 0.98 * l));
        const double tha = rng.uniform(0.0, 2.0 * kPi);
        const double thb = rng.uniform(0.0, 2.0 * kPi);
        const double thc = rng.uniform(0.0, 2.0 * kPi);
        auto fiber_angle = [](double u, double v) {
            double d = std::abs(u - v);
            return d > kPi ? 2.0 * kPi - d : d;
        };
        const double dab = geo.distance(sa, sb, fiber_angle(tha, thb));
        const double dba = geo.distance(sb, sa, fiber_angle(tha, thb));
        const double dbc = geo.distance(sb, sc, fiber_angle(thb, thc));
        const double dac = geo.distance(sa, sc, fiber_angle(tha, thc));
        CHECK(std::abs(dab - dba) <= tol);
        CHECK(dab >= 0.0);
        CHECK(dac <= dab + dbc + tol);
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("diameter: round sphere within 2e-2 of pi; region diameters per component") {
    const auto p = make_round_sphere(2, 1.0, 257);
    ProfileGeometry geo(p, 96);
    CHECK(std::abs(geo.diameter(4) - kPi) < 2e-2);
}

TEST_CASE("hausdorff_gap: whole region has zero gap; U_j gaps decrease to 0") {
    const auto p = make_round_sphere(2, 1.0, 257);
    ProfileGeometry geo(p, 64);
    CHECK(geo.hausdorff_gap(geo.region_s_intervals(RegionSpec::whole())) ==
          doctest::Approx(0.0));
    double prev = std::numeric_limits<double>::infinity();
    for (int j : {2, 4, 8, 16, 64}) {
        const double gap = geo.hausdorff_gap(geo.region_s_intervals(RegionSpec::coord_band(j)));
        CHECK(gap <= prev + 1e-12);
        prev = gap;
    }
    CHECK(prev < 0.1);
    CHECK_THROWS_AS((void)geo.hausdorff_gap({}), std::invalid_argument);
}

TEST_CASE("region resolution: psi superlevel yields one interval per sheet") {
    const auto p = make_neck_profile(2, 257, 1.0, 0.8, 4);
    const auto parts = resolve_region(p, RegionSpec::psi_superlevel(0.25));
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].hi < 0.0);
    CHECK(parts[1].lo > 0.0);
    // empty region integrates to zero
    CHECK(volume(p, RegionSpec::psi_superlevel(10.0)) == doctest::Approx(0.0));
}
