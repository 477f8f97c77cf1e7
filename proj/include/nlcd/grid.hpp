#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlcd {

/// Uniform 1-D mesh. Cell centers sit at x_min + (i + 1/2)*dx, i in [0, n).
struct Grid {
    double x_min;
    double dx;
    std::size_t n;

    Grid(double x_min_, double dx_, std::size_t n_) : x_min(x_min_), dx(dx_), n(n_) {
        if (!(dx > 0.0)) throw std::invalid_argument("Grid: dx must be positive");
        if (n < 8) throw std::invalid_argument("Grid: need at least 8 cells");
    }

    /// Symmetric grid on [-half_width, half_width].
    static Grid symmetric(double half_width, std::size_t n) {
        if (!(half_width > 0.0)) throw std::invalid_argument("Grid: half_width must be positive");
        return Grid(-half_width, 2.0 * half_width / static_cast<double>(n), n);
    }

    double x_center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx; }
    double x_max() const { return x_min + static_cast<double>(n) * dx; }
    double length() const { return static_cast<double>(n) * dx; }
    /// Distance from the origin to the nearer domain edge.
    double half_width() const { return std::min(-x_min, x_max()); }

    bool operator==(const Grid& o) const { return x_min == o.x_min && dx == o.dx && n == o.n; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Cell-averaged scalar function on a Grid. Immutable by convention after
/// construction; all operations below are pure.
struct Field {
    Grid grid;
    std::vector<double> values;
    bool nonneg = false;

    explicit Field(const Grid& g) : grid(g), values(g.n, 0.0) {}
    Field(const Grid& g, std::vector<double> v, bool nonneg_flag = false)
        : grid(g), values(std::move(v)), nonneg(nonneg_flag) {
        if (values.size() != grid.n) throw std::invalid_argument("Field: value count != grid.n");
    }

    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    /// Enforces the type invariants: finite entries, and (if flagged
    /// nonnegative) no dips below roundoff scale.
    void validate() const {
        double amax = 0.0, amin = std::numeric_limits<double>::infinity();
        for (double v : values) {
            if (!std::isfinite(v)) throw std::runtime_error("Field: non-finite value");
            amax = std::max(amax, std::abs(v));
            amin = std::min(amin, v);
        }
        if (nonneg && amin < -1e-14 * std::max(1.0, amax))
            throw std::runtime_error("Field: nonneg_flag set but values are negative");
    }
};

template <class Fn>
Field sample_field(const Grid& g, Fn&& fn, bool nonneg = false) {
    Field f(g);
    for (std::size_t i = 0; i < g.n; ++i) f.values[i] = fn(g.x_center(i));
    f.nonneg = nonneg;
    return f;
}

/// (sum |f_i|^p dx)^(1/p); max |f_i| for p = infinity. Requires p >= 1.
inline double lp_norm(const Field& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    double acc = 0.0;
    if (p == 1.0) {
        for (double v : f.values) acc += std::abs(v);
        return acc * f.grid.dx;
    }
    if (p == 2.0) {
        for (double v : f.values) acc += v * v;
        return std::sqrt(acc * f.grid.dx);
    }
    for (double v : f.values) acc += std::pow(std::abs(v), p);
    return std::pow(acc * f.grid.dx, 1.0 / p);
}

/// Signed mass: sum f_i dx.
inline double mass(const Field& f) {
    double acc = 0.0;
    for (double v : f.values) acc += v;
    return acc * f.grid.dx;
}

inline double l2_norm_sq(const Field& f) {
    double acc = 0.0;
    for (double v : f.values) acc += v * v;
    return acc * f.grid.dx;
}

/// Piecewise-linear interpolation between cell centers, constant on the
/// outer half-cells, zero outside [x_min, x_min + n*dx].
inline double interpolate(const Field& f, double x) {
    const Grid& g = f.grid;
    if (x < g.x_min || x > g.x_max()) return 0.0;
    double s = (x - g.x_min) / g.dx - 0.5; // fractional center index
    if (s <= 0.0) return f.values.front();
    if (s >= static_cast<double>(g.n - 1)) return f.values.back();
    auto i = static_cast<std::size_t>(s);
    double w = s - static_cast<double>(i);
    return (1.0 - w) * f.values[i] + w * f.values[i + 1];
}

/// L1 mass beyond |x| > R: sum over cells with |x_i| > R of |f_i| dx.
inline double tail_mass(const Field& f, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("tail_mass: R must be positive");
    if (R >= f.grid.half_width())
        throw std::invalid_argument("tail_mass: R beyond domain half-width");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.grid.n; ++i)
        if (std::abs(f.grid.x_center(i)) > R) acc += std::abs(f.values[i]);
    return acc * f.grid.dx;
}

} // namespace nlcd
