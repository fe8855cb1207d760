#pragma once

// Small numeric helpers shared across the library: quadrature on node data,
// nonuniform finite differences, least-squares fits, sphere constants and a
// deterministic splittable RNG for sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace neckflow {

inline constexpr double kPi = std::numbers::pi;

// Surface area of the unit n-sphere S^n.
inline double unit_sphere_area(int n) {
    if (n < 1) throw std::invalid_argument("unit_sphere_area: n must be >= 1");
    return 2.0 * std::pow(kPi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

// Volume of the unit ball in R^m.
inline double unit_ball_volume(int m) {
    if (m < 1) throw std::invalid_argument("unit_ball_volume: m must be >= 1");
    return std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

inline bool strictly_increasing(std::span<const double> v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

inline double trapezoid(std::span<const double> x, std::span<const double> f) {
    if (x.size() != f.size() || x.size() < 2)
        throw std::invalid_argument("trapezoid: need matching grids with >= 2 nodes");
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        acc += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    return acc;
}

inline std::vector<double> cumulative_trapezoid(std::span<const double> x,
                                                std::span<const double> f) {
    if (x.size() != f.size() || x.size() < 2)
        throw std::invalid_argument("cumulative_trapezoid: need matching grids with >= 2 nodes");
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    return out;
}

// Linear interpolation of tabulated (x, f); clamps outside the table.
inline double interp_linear(std::span<const double> x, std::span<const double> f, double xq) {
    if (x.size() != f.size() || x.empty())
        throw std::invalid_argument("interp_linear: bad table");
    if (xq <= x.front()) return f.front();
    if (xq >= x.back()) return f.back();
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    double w = (xq - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * f[i - 1] + w * f[i];
}

// First derivative on a nonuniform grid, centered in the interior and
// one-sided (second order) at the ends.
inline std::vector<double> derivative_nonuniform(std::span<const double> x,
                                                 std::span<const double> f) {
    const std::size_t n = x.size();
    if (n != f.size() || n < 3)
        throw std::invalid_argument("derivative_nonuniform: need >= 3 nodes");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        d[i] = (hm * hm * f[i + 1] - hp * hp * f[i - 1] + (hp * hp - hm * hm) * f[i]) /
               (hp * hm * (hp + hm));
    }
    {
        const double h1 = x[1] - x[0], h2 = x[2] - x[1];
        d[0] = (-(2 * h1 + h2) * f[0] + (h1 + h2) * (h1 + h2) / h2 * f[1] -
                h1 * h1 / h2 * f[2]) /
               (h1 * (h1 + h2));
        const double g1 = x[n - 1] - x[n - 2], g2 = x[n - 2] - x[n - 3];
        d[n - 1] = ((2 * g1 + g2) * f[n - 1] - (g1 + g2) * (g1 + g2) / g2 * f[n - 2] +
                    g1 * g1 / g2 * f[n - 3]) /
                   (g1 * (g1 + g2));
    }
    return d;
}

// Second derivative on a nonuniform grid (interior three-point stencil,
// copied outward to the end nodes).
inline std::vector<double> second_derivative_nonuniform(std::span<const double> x,
                                                        std::span<const double> f) {
    const std::size_t n = x.size();
    if (n != f.size() || n < 3)
        throw std::invalid_argument("second_derivative_nonuniform: need >= 3 nodes");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        d[i] = 2.0 * (hm * f[i + 1] + hp * f[i - 1] - (hp + hm) * f[i]) /
               (hp * hm * (hp + hm));
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    return d;
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual_rms = 0.0;
};

// Least squares y = intercept + slope * x; centered form, stable when the
// abscissae spread is tiny against their magnitude.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::runtime_error("fit_line: degenerate abscissae");
    LinearFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - my - out.slope * (x[i] - mx);
        ss += r * r;
    }
    out.residual_rms = std::sqrt(ss / n);
    return out;
}

// Slope of log|y| against log|x|; points with nonpositive entries are skipped.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0 && y[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) throw std::runtime_error("loglog_slope: fewer than 2 usable points");
    return fit_line(lx, ly).slope;
}

// splitmix64: deterministic, seedable, no global state.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // uniform in [0, 1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

  private:
    std::uint64_t state_;
};

// FNV-1a, used to stamp output files with a hash of the generating config.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace neckflow
