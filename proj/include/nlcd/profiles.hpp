#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nlcd {

namespace detail {

/// Scaled complementary error function exp(z^2) erfc(z) for z >= 0.
/// Direct product below z = 20 (both factors representable), asymptotic
/// series beyond, keeping relative error near 1e-15 throughout.
inline double erfcx(double z) {
    if (z < 20.0) return std::exp(z * z) * std::erfc(z);
    const double q = 0.5 / (z * z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 10; ++k) {
        term *= -q * static_cast<double>(2 * k - 1);
        sum += term;
    }
    return sum / (z * std::sqrt(std::numbers::pi));
}

inline double gauss_pdf(double s) {
    return std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF at -s, i.e. P(Z > s).
inline double gauss_tail(double s) { return 0.5 * std::erfc(s / std::sqrt(2.0)); }

} // namespace detail

/// Mass-M solution of w_t = A w_xx with w(.,0) = M delta_0.
struct HeatProfile {
    double M;
    double A;
    HeatProfile(double mass, double diffusivity) : M(mass), A(diffusivity) {
        if (!(A > 0.0)) throw std::invalid_argument("HeatProfile: A must be positive");
    }
};

inline double heat_eval(const HeatProfile& p, double t, double x) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_eval: t must be positive");
    double var = 4.0 * p.A * t;
    return p.M * std::exp(-x * x / var) / std::sqrt(std::numbers::pi * var);
}

/// Mass-M diffusion wave of w_t + (w^2)_x = A w_xx with w(.,0) = M delta_0.
///
/// Closed form from the Cole-Hopf substitution: with c = exp(-M/A) and
/// s = x / sqrt(2At),
///   w(t,x) = A (1-c) phi(s) / ( sqrt(2At) * (c + (1-c) Phi(-s)) ),
/// where phi/Phi are the standard normal density/CDF. The right flank
/// (s > 0) is evaluated through erfcx so the ratio stays finite where both
/// phi(s) and Phi(-s) underflow.
struct BurgersProfile {
    double M;
    double A;
    BurgersProfile(double mass, double diffusivity) : M(mass), A(diffusivity) {
        if (!(A > 0.0)) throw std::invalid_argument("BurgersProfile: A must be positive");
        if (!(M >= 0.0)) throw std::invalid_argument("BurgersProfile: M must be nonnegative");
    }
};

inline double burgers_eval(const BurgersProfile& p, double t, double x) {
    if (!(t > 0.0)) throw std::invalid_argument("burgers_eval: t must be positive");
    if (p.M == 0.0) return 0.0;
    const double r = p.M / p.A;
    const double c = std::exp(-r);
    const double width = std::sqrt(2.0 * p.A * t);
    const double s = x / width;
    const double amp = p.A * (1.0 - c) / width;
    if (s <= 0.0) {
        double denom = c + (1.0 - c) * detail::gauss_tail(s);
        return amp * detail::gauss_pdf(s) / denom;
    }
    // multiply numerator and denominator by exp(s^2/2)
    double e = 0.5 * s * s - r;
    double denom = (e > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(e)) +
                   (1.0 - c) * 0.5 * detail::erfcx(s / std::sqrt(2.0));
    return amp / (std::sqrt(2.0 * std::numbers::pi) * denom);
}

enum class ProfileKind { heat, burgers };

/// Tagged closed-form limit profile used by the measurement routines.
struct Profile {
    ProfileKind kind;
    double M;
    double A;

    static Profile heat(double M, double A) { return Profile{ProfileKind::heat, HeatProfile(M, A)}; }
    static Profile burgers(double M, double A) {
        return Profile{ProfileKind::burgers, BurgersProfile(M, A)};
    }

    double eval(double t, double x) const {
        if (kind == ProfileKind::heat) return heat_eval(HeatProfile(M, A), t, x);
        return burgers_eval(BurgersProfile(M, A), t, x);
    }

private:
    Profile(ProfileKind k, const HeatProfile& p) : kind(k), M(p.M), A(p.A) {}
    Profile(ProfileKind k, const BurgersProfile& p) : kind(k), M(p.M), A(p.A) {}
};

/// Sup over the grid points of the centered-difference residual of the
/// profile's own PDE; O(h^2) for both closed forms.
template <class ProfileT, class ResidualFn>
double profile_residual_impl(const ProfileT&, ResidualFn&& local, double t, double x_lo, double x_hi,
                             std::size_t npts) {
    double sup = 0.0;
    for (std::size_t i = 0; i < npts; ++i) {
        double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(npts - 1);
        sup = std::max(sup, std::abs(local(t, x)));
    }
    return sup;
}

inline double profile_residual(const Profile& p, double t, double h, double x_lo = -6.0,
                               double x_hi = 6.0, std::size_t npts = 121) {
    if (!(t > 0.0)) throw std::invalid_argument("profile_residual: t must be positive");
    if (!(h > 0.0 && h < 0.5 * t)) throw std::invalid_argument("profile_residual: h must be small vs t");
    auto w = [&](double tt, double xx) { return p.eval(tt, xx); };
    auto local = [&](double tt, double xx) {
        double wt = (w(tt + h, xx) - w(tt - h, xx)) / (2.0 * h);
        double wxx = (w(tt, xx + h) - 2.0 * w(tt, xx) + w(tt, xx - h)) / (h * h);
        double res = wt - p.A * wxx;
        if (p.kind == ProfileKind::burgers) {
            double wr = w(tt, xx + h), wl = w(tt, xx - h);
            res += (wr * wr - wl * wl) / (2.0 * h);
        }
        return res;
    };
    return profile_residual_impl(p, local, t, x_lo, x_hi, npts);
}

/// sup_x |lambda w(lambda^2 t, lambda x) - w(t, x)|; zero for an exactly
/// self-similar profile.
inline double self_similarity_check(const Profile& p, double t, double lambda, double x_lo = -8.0,
                                    double x_hi = 8.0, std::size_t npts = 161) {
    if (!(t > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("self_similarity_check: t and lambda must be positive");
    double sup = 0.0;
    for (std::size_t i = 0; i < npts; ++i) {
        double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(npts - 1);
        double scaled = lambda * p.eval(lambda * lambda * t, lambda * x);
        sup = std::max(sup, std::abs(scaled - p.eval(t, x)));
    }
    return sup;
}

} // namespace nlcd
