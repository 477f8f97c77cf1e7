#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlcd/grid.hpp"

namespace nlcd {

enum class KernelFamily { exponential, gaussian, box, tabulated };

/// Continuous diffusion kernel J: nonnegative, even, unit mass, finite
/// second moment. Named families are closed under the rescaling
/// J_lambda(x) = lambda * J(lambda x); tabulated kernels are interpreted as
/// the piecewise-linear interpolant of their samples, which keeps mass,
/// second moment and Fourier transform exactly computable.
class KernelSpec {
public:
    /// (rate/2) exp(-rate |x|); rate = 1 is the classical radiating-gas kernel.
    static KernelSpec exponential(double rate = 1.0) {
        if (!(rate > 0.0)) throw std::invalid_argument("KernelSpec: rate must be positive");
        KernelSpec k;
        k.family_ = KernelFamily::exponential;
        k.param_ = rate;
        return k;
    }

    static KernelSpec gaussian(double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("KernelSpec: sigma must be positive");
        KernelSpec k;
        k.family_ = KernelFamily::gaussian;
        k.param_ = sigma;
        return k;
    }

    static KernelSpec box(double halfwidth) {
        if (!(halfwidth > 0.0)) throw std::invalid_argument("KernelSpec: halfwidth must be positive");
        KernelSpec k;
        k.family_ = KernelFamily::box;
        k.param_ = halfwidth;
        return k;
    }

    /// Even kernel from samples at z = 0, dz, 2dz, ...; normalized to unit mass.
    static KernelSpec tabulated(std::vector<double> half_samples, double dz) {
        if (!(dz > 0.0)) throw std::invalid_argument("KernelSpec: dz must be positive");
        if (half_samples.size() < 2)
            throw std::invalid_argument("KernelSpec: tabulated kernel needs at least 2 samples");
        for (double v : half_samples)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("KernelSpec: tabulated samples must be finite and nonnegative");
        KernelSpec k;
        k.family_ = KernelFamily::tabulated;
        k.samples_ = std::move(half_samples);
        k.dz_ = dz;
        double m = k.raw_mass();
        if (!(m > 0.0)) throw std::invalid_argument("KernelSpec: tabulated kernel has zero mass");
        for (double& v : k.samples_) v /= m;
        return k;
    }

    KernelFamily family() const { return family_; }
    double param() const { return param_; }

    /// lambda * J(lambda x), the scaled kernel of the self-similar analysis.
    KernelSpec rescaled(double lambda) const {
        if (!(lambda > 0.0)) throw std::invalid_argument("KernelSpec: lambda must be positive");
        KernelSpec k = *this;
        switch (family_) {
            case KernelFamily::exponential: k.param_ = param_ * lambda; break;
            case KernelFamily::gaussian: k.param_ = param_ / lambda; break;
            case KernelFamily::box: k.param_ = param_ / lambda; break;
            case KernelFamily::tabulated:
                k.dz_ = dz_ / lambda;
                for (double& v : k.samples_) v *= lambda;
                break;
        }
        return k;
    }

    double density(double x) const {
        double z = std::abs(x);
        switch (family_) {
            case KernelFamily::exponential: return 0.5 * param_ * std::exp(-param_ * z);
            case KernelFamily::gaussian: {
                double s = param_;
                return std::exp(-0.5 * z * z / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
            }
            case KernelFamily::box: return z <= param_ ? 0.5 / param_ : 0.0;
            case KernelFamily::tabulated: {
                double s = z / dz_;
                auto j = static_cast<std::size_t>(s);
                double w = s - static_cast<double>(j);
                if (j + 1 < samples_.size()) return (1.0 - w) * samples_[j] + w * samples_[j + 1];
                if (j + 1 == samples_.size()) return (1.0 - w) * samples_.back();
                return 0.0;
            }
        }
        return 0.0;
    }

    /// Full second moment: integral of z^2 J(z) dz.
    double second_moment_full() const {
        switch (family_) {
            case KernelFamily::exponential: return 2.0 / (param_ * param_);
            case KernelFamily::gaussian: return param_ * param_;
            case KernelFamily::box: return param_ * param_ / 3.0;
            case KernelFamily::tabulated: {
                // the hat at z_j carries z_j^2 dz + dz^3/6 exactly
                double acc = 0.0;
                for (std::size_t j = 0; j < samples_.size(); ++j) {
                    double z = static_cast<double>(j) * dz_;
                    double contrib = samples_[j] * (z * z * dz_ + dz_ * dz_ * dz_ / 6.0);
                    acc += (j == 0) ? contrib : 2.0 * contrib;
                }
                return acc;
            }
        }
        return 0.0;
    }

    /// Mass in |z| > r.
    double tail(double r) const {
        if (r <= 0.0) return 1.0;
        switch (family_) {
            case KernelFamily::exponential: return std::exp(-param_ * r);
            case KernelFamily::gaussian: return std::erfc(r / (param_ * std::sqrt(2.0)));
            case KernelFamily::box: return r >= param_ ? 0.0 : 1.0 - r / param_;
            case KernelFamily::tabulated: {
                double acc = 0.0;
                // integrate the piecewise-linear density over segments beyond r
                std::size_t nseg = samples_.size(); // segment j spans [j dz, (j+1) dz]
                for (std::size_t j = 0; j < nseg; ++j) {
                    double z0 = static_cast<double>(j) * dz_;
                    double z1 = z0 + dz_;
                    if (z1 <= r) continue;
                    double a = samples_[j];
                    double b = (j + 1 < samples_.size()) ? samples_[j + 1] : 0.0;
                    double lo = std::max(z0, r);
                    // linear density on [z0, z1): value(z) = a + (b-a)(z-z0)/dz
                    double t0 = (lo - z0) / dz_, t1 = 1.0;
                    double seg = dz_ * ((a * (t1 - t0)) + 0.5 * (b - a) * (t1 * t1 - t0 * t0));
                    acc += seg;
                }
                return std::min(1.0, 2.0 * acc);
            }
        }
        return 0.0;
    }

    /// Fourier transform J^(xi) = integral of J(x) cos(xi x) dx; J^(0) = 1.
    double fourier(double xi) const {
        double x = std::abs(xi);
        switch (family_) {
            case KernelFamily::exponential: {
                double s = param_;
                return s * s / (s * s + x * x);
            }
            case KernelFamily::gaussian: {
                double s = param_;
                return std::exp(-0.5 * s * s * x * x);
            }
            case KernelFamily::box: {
                double hx = param_ * x;
                return hx == 0.0 ? 1.0 : std::sin(hx) / hx;
            }
            case KernelFamily::tabulated: {
                double half = 0.5 * x * dz_;
                double fejer = half == 0.0 ? 1.0 : std::pow(std::sin(half) / half, 2);
                double s = samples_[0];
                for (std::size_t j = 1; j < samples_.size(); ++j)
                    s += 2.0 * samples_[j] * std::cos(x * static_cast<double>(j) * dz_);
                return fejer * s * dz_;
            }
        }
        return 0.0;
    }

    /// Half-width of the support; infinity for exponential/gaussian.
    double support_halfwidth() const {
        switch (family_) {
            case KernelFamily::exponential:
            case KernelFamily::gaussian: return std::numeric_limits<double>::infinity();
            case KernelFamily::box: return param_;
            case KernelFamily::tabulated: return static_cast<double>(samples_.size()) * dz_;
        }
        return 0.0;
    }

    double sample_spacing() const { return dz_; }

private:
    KernelSpec() = default;
    double raw_mass() const {
        double acc = samples_[0];
        for (std::size_t j = 1; j < samples_.size(); ++j) acc += 2.0 * samples_[j];
        return acc * dz_;
    }

    KernelFamily family_ = KernelFamily::exponential;
    double param_ = 1.0;
    std::vector<double> samples_; // tabulated only, z >= 0
    double dz_ = 0.0;
};

/// A = (1/2) integral of z^2 J(z) dz, the diffusivity of the limit equation.
inline double second_moment(const KernelSpec& spec) { return 0.5 * spec.second_moment_full(); }

/// Truncated, renormalized sampling of a KernelSpec on a grid of spacing dx.
/// Row sum w * dx is exactly 1 so the semi-discrete operator annihilates
/// constants and conserves mass.
struct DiscreteKernel {
    double dx = 0.0;
    std::vector<double> weights; // odd length 2m+1, index j+m holds offset j
    double second_moment_A = 0.0;

    std::size_t half_width() const { return (weights.size() - 1) / 2; }
    double weight(std::ptrdiff_t offset) const {
        return weights[static_cast<std::size_t>(offset + static_cast<std::ptrdiff_t>(half_width()))];
    }
    double row_mass() const {
        double acc = 0.0;
        for (double w : weights) acc += w;
        return acc * dx;
    }
    /// Discrete counterpart of A: (1/2) sum w_j (j dx)^2 dx.
    double discrete_second_moment() const {
        double acc = 0.0;
        auto m = static_cast<std::ptrdiff_t>(half_width());
        for (std::ptrdiff_t j = -m; j <= m; ++j) {
            double z = static_cast<double>(j) * dx;
            acc += weight(j) * z * z;
        }
        return 0.5 * acc * dx;
    }
};

/// Samples spec at offsets j*dx, truncates where the omitted tail mass drops
/// below tail_tol, renormalizes to unit row sum.
inline DiscreteKernel discretize(const KernelSpec& spec, double dx, double tail_tol) {
    if (!(dx > 0.0)) throw std::invalid_argument("discretize: dx must be positive");
    if (!(tail_tol > 0.0 && tail_tol <= 1e-3))
        throw std::invalid_argument("discretize: tail_tol must lie in (0, 1e-3]");
    std::size_t m = 0;
    while (spec.tail((static_cast<double>(m) + 0.5) * dx) >= tail_tol) {
        ++m;
        if (static_cast<double>(m) * dx > spec.support_halfwidth() + dx) break;
        if (m > 100'000'000) throw std::runtime_error("discretize: kernel tail does not decay");
    }
    if (m == 0) throw std::invalid_argument("discretize: dx too coarse, kernel collapses to a point");

    DiscreteKernel k;
    k.dx = dx;
    k.second_moment_A = second_moment(spec);
    k.weights.resize(2 * m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        double w = spec.density(static_cast<double>(j) * dx);
        k.weights[m + j] = w;
        k.weights[m - j] = w;
    }
    double sum = 0.0;
    for (double w : k.weights) sum += w;
    sum *= dx;
    if (!(sum > 0.0)) throw std::invalid_argument("discretize: sampled kernel has zero mass");
    for (double& w : k.weights) w /= sum;
    // absorb the remaining reassociation residue into the center weight so
    // the row sum is 1 to the last ulp
    for (int pass = 0; pass < 2; ++pass) {
        double s = 0.0;
        for (double w : k.weights) s += w;
        k.weights[m] += 1.0 / dx - s;
    }
    return k;
}

/// Constants of the frequency-splitting decay argument:
///   J^(xi) <= 1 - c xi^2  for |xi| <= R,   J^(xi) <= 1 - delta for |xi| >= R.
struct FourierConstants {
    double c;
    double R;
    double delta;
};

inline FourierConstants fourier_constants(const KernelSpec& spec) {
    const double A = second_moment(spec);
    // J^ = 1 - A xi^2 + O(xi^4), so any valid c is below A; start below and
    // shrink until the quadratic bound holds on a nontrivial interval.
    double c = 0.6 * A;

    const double scale = std::sqrt(spec.second_moment_full());
    double xi_max = 60.0 / scale;
    // piecewise-linear tabulated kernels alias near 2 pi / dz; scan past it
    if (spec.family() == KernelFamily::tabulated)
        xi_max = std::max(xi_max, 2.5 * 2.0 * std::numbers::pi / spec.sample_spacing());
    const std::size_t npts = 200'000;
    const double dxi = xi_max / static_cast<double>(npts);

    for (int attempt = 0; attempt < 200; ++attempt) {
        // largest radius on the scan grid where the quadratic bound holds
        std::size_t valid = 0;
        for (std::size_t i = 1; i <= npts; ++i) {
            double xi = static_cast<double>(i) * dxi;
            if (spec.fourier(xi) > 1.0 - c * xi * xi + 1e-13) break;
            valid = i;
        }
        if (valid < 8) {
            c *= 0.75;
            continue;
        }
        double R = static_cast<double>(valid) * dxi;
        double sup = -std::numeric_limits<double>::infinity();
        for (std::size_t i = valid; i <= npts; ++i)
            sup = std::max(sup, spec.fourier(static_cast<double>(i) * dxi));
        // analytic caps beyond the scan window
        double beyond = 0.0;
        switch (spec.family()) {
            case KernelFamily::exponential:
            case KernelFamily::gaussian: beyond = spec.fourier(xi_max); break;
            case KernelFamily::box: beyond = 1.0 / (spec.param() * xi_max); break;
            case KernelFamily::tabulated: {
                double half = 0.5 * xi_max * spec.sample_spacing();
                beyond = std::min(1.0, 1.0 / (half * half));
                break;
            }
        }
        sup = std::max(sup, beyond);
        double delta = 1.0 - sup;
        if (delta <= 1e-9)
            throw std::runtime_error("fourier_constants: transform stays near 1 at high frequency");
        return {c, R, delta};
    }
    throw std::runtime_error("fourier_constants: no valid quadratic bound found");
}

} // namespace nlcd
