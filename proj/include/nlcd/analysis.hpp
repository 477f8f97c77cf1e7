#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "nlcd/convolve.hpp"
#include "nlcd/grid.hpp"
#include "nlcd/kernel.hpp"
#include "nlcd/profiles.hpp"
#include "nlcd/solver.hpp"
#include "nlcd/util.hpp"

namespace nlcd {

// ---------------------------------------------------------------------------
// decay-rate measurement

struct DecayFit {
    double p = 2.0;
    double t_lo = 0.0, t_hi = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

/// Least-squares slope of log ||u(t)||_p against log t over snapshot times in
/// [t_lo, t_hi]. The expected slope is -(1 - 1/p)/2.
inline DecayFit decay_exponent(const SolutionStore& store, double p, double t_lo, double t_hi) {
    if (!(t_lo >= 1.0) || !(t_hi > t_lo))
        throw std::invalid_argument("decay_exponent: window must satisfy 1 <= t_lo < t_hi");
    std::vector<double> lt, ln;
    for (std::size_t i = 0; i < store.times.size(); ++i) {
        double t = store.times[i];
        if (t < t_lo || t > t_hi) continue;
        double norm = lp_norm(store.snapshots[i], p);
        if (!(norm > 0.0)) throw std::runtime_error("decay_exponent: degenerate (zero) norm");
        lt.push_back(std::log(t));
        ln.push_back(std::log(norm));
    }
    if (lt.size() < 8) throw std::invalid_argument("decay_exponent: fewer than 8 samples in window");

    const auto n = static_cast<double>(lt.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        sx += lt[i];
        sy += ln[i];
        sxx += lt[i] * lt[i];
        sxy += lt[i] * ln[i];
        syy += ln[i] * ln[i];
    }
    double denom = n * sxx - sx * sx;
    DecayFit fit;
    fit.p = p;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.n_points = lt.size();
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        double r = ln[i] - (fit.intercept + fit.slope * lt[i]);
        ss_res += r * r;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

/// Smallest C with ||u(t)||_2 <= C (||phi||_2 (t+1)^{-1/2} + ||phi||_1 (t+1)^{-1/4})
/// over every ledger row.
inline double fourier_splitting_constant(const SolutionStore& store, double phi_l1, double phi_l2) {
    double c = 0.0;
    for (const LedgerRow& row : store.ledger) {
        double envelope = phi_l2 / std::sqrt(row.t + 1.0) + phi_l1 / std::pow(row.t + 1.0, 0.25);
        if (envelope > 0.0) c = std::max(c, std::sqrt(std::max(row.l2sq, 0.0)) / envelope);
    }
    return c;
}

// ---------------------------------------------------------------------------
// distances to the self-similar profiles

/// t^{(1-1/p)/2} ||u(t) - u_M(t)||_p; tends to zero when u approaches the
/// profile at the self-similar rate. For p = 1 this is the plain L1 distance.
inline double renormalized_distance(const SolutionStore& store, const Profile& profile, double p,
                                    double t) {
    Field u = store.sample_time(t);
    double m = mass(u);
    if (std::abs(m - profile.M) > 1e-8 * std::max(1.0, std::abs(profile.M)))
        throw std::invalid_argument("renormalized_distance: profile mass " + std::to_string(profile.M) +
                                    " does not match solution mass " + std::to_string(m));
    Field diff(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i)
        diff.values[i] = u.values[i] - profile.eval(t, u.grid.x_center(i));
    double factor = std::isinf(p) ? std::sqrt(t) : std::pow(t, 0.5 * (1.0 - 1.0 / p));
    return factor * lp_norm(diff, p);
}

/// ||u_lambda(1) - u_M(1)||_1 with u_lambda produced by rescale(). The target
/// grid refines with lambda so the interpolated wave stays resolved.
inline double rescaled_l1_distance(const SolutionStore& store, double lambda,
                                   const Profile& profile) {
    const Grid& g = store.grid();
    double hw = g.half_width();
    double width = std::min(hw, std::max(30.0 * std::sqrt(std::max(profile.A, 1.0)), hw / lambda));
    double dx_target = g.dx / lambda;
    auto n = static_cast<std::size_t>(std::ceil(2.0 * width / dx_target));
    n = std::max<std::size_t>(n, 16);
    Grid target = Grid::symmetric(width, n);
    Field ul = rescale(store, lambda, 1.0, target);
    Field diff(target);
    for (std::size_t i = 0; i < target.n; ++i)
        diff.values[i] = ul.values[i] - profile.eval(1.0, target.x_center(i));
    return lp_norm(diff, 1.0);
}

// ---------------------------------------------------------------------------
// nonlocal quadratic forms and the H^{-1} norm

/// Double integral of k(x-y)(f(x)-f(y))^2 dx dy over the zero-extended line,
/// as a direct O(n m) double sum.
inline double quadratic_form(const Field& f, const DiscreteKernel& k) {
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    const auto m = static_cast<std::ptrdiff_t>(k.half_width());
    auto at = [&](std::ptrdiff_t i) -> double {
        return (i >= 0 && i < n) ? f.values[static_cast<std::size_t>(i)] : 0.0;
    };
    double acc = 0.0;
    for (std::ptrdiff_t i = -m; i < n + m; ++i) {
        double fi = at(i);
        for (std::ptrdiff_t d = -m; d <= m; ++d) {
            double diff = fi - at(i - d);
            acc += k.weight(d) * diff * diff;
        }
    }
    return acc * k.dx * k.dx;
}

/// lambda^2 integral-integral of J_lambda(x-y)(f(x)-f(y))^2, with
/// J_lambda(z) = lambda J(lambda z) re-discretized on f's spacing.
inline double quadratic_form(const Field& f, const KernelSpec& spec, double lambda,
                             double tail_tol = 1e-10) {
    DiscreteKernel k = discretize(spec.rescaled(lambda), f.grid.dx, tail_tol);
    return lambda * lambda * quadratic_form(f, k);
}

/// Spectral H^{-1} norm of the zero-extended field:
/// ( (1/2pi) sum |u^(xi_k)|^2 / (1 + xi_k^2) dxi )^{1/2} on a padded DFT grid.
inline double hminus1_norm(const Field& f) {
    const std::size_t n = f.size();
    const std::size_t pad = detail::next_pow2(4 * n);
    const std::size_t nc = pad / 2 + 1;
    double* in = fftw_alloc_real(pad);
    fftw_complex* out = fftw_alloc_complex(nc);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(pad), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < n; ++i) in[i] = f.values[i];
    for (std::size_t i = n; i < pad; ++i) in[i] = 0.0;
    fftw_execute(plan);

    const double dx = f.grid.dx;
    const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(pad) * dx);
    double acc = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
        double xi = static_cast<double>(k) * dxi;
        double re = out[k][0] * dx, im = out[k][1] * dx;
        double weight = (k == 0 || k == pad / 2) ? 1.0 : 2.0;
        acc += weight * (re * re + im * im) / (1.0 + xi * xi);
    }
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return std::sqrt(acc * dxi / (2.0 * std::numbers::pi));
}

// ---------------------------------------------------------------------------
// inequality verifiers

struct IneqReport {
    std::string lemma_id;
    int trials = 0;
    double worst_margin = std::numeric_limits<double>::infinity(); // min of rhs - lhs
    int violations = 0; // margins below -1e-12 * scale
    std::uint64_t seed = 0;
};

/// rhs - lhs of the gradient bound
///   lambda^3 II rho(lambda(x-y))(phi(x)-phi(y))^2 <= (int rho z^2) ||phi_x||_2^2
/// with a centered-difference gradient on the zero-extended field.
inline double gradient_bound_margin(const Field& phi, const KernelSpec& rho, double lambda,
                                    const DiscreteKernel* prescaled = nullptr) {
    double lhs = prescaled != nullptr
                     ? lambda * lambda * quadratic_form(phi, *prescaled)
                     : quadratic_form(phi, rho, lambda);
    const double dx = phi.grid.dx;
    const auto n = static_cast<std::ptrdiff_t>(phi.size());
    auto at = [&](std::ptrdiff_t i) -> double {
        return (i >= 0 && i < n) ? phi.values[static_cast<std::size_t>(i)] : 0.0;
    };
    double grad_sq = 0.0;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double g = (at(i + 1) - at(i - 1)) / (2.0 * dx);
        grad_sq += g * g;
    }
    grad_sq *= dx;
    double rhs = rho.second_moment_full() * grad_sq;
    return rhs - lhs;
}

/// Smallest n for which the norm-balance inequality is claimed.
inline int balance_threshold(double delta, double eps) {
    return static_cast<int>(std::ceil(1.0 / std::sqrt(delta * eps)));
}

struct BalanceTerms {
    double l2sq;
    double scaled_form; // eps n^2 II rho_n (u(x)-u(y))^2
    double dual_term;   // (2/eps) ||u||_{H^-1}^2
    double margin;      // rhs - lhs
};

/// Terms of ||u||_2^2 <= eps n^2 II rho_n(x-y)(u(x)-u(y))^2 + (2/eps)||u||_{H^-1}^2.
/// Requires n >= ceil((delta eps)^{-1/2}); pass delta from fourier_constants(rho).
inline BalanceTerms norm_balance_terms(const Field& u, const KernelSpec& rho, double eps, int n,
                                       double delta, const DiscreteKernel* prescaled = nullptr) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("norm_balance_terms: eps must lie in (0,1)");
    if (n < balance_threshold(delta, eps))
        throw std::invalid_argument("norm_balance_terms: n below threshold (delta eps)^{-1/2}");
    BalanceTerms t;
    t.l2sq = l2_norm_sq(u);
    double nn = static_cast<double>(n);
    double form = prescaled != nullptr ? nn * nn * quadratic_form(u, *prescaled)
                                       : quadratic_form(u, rho, nn);
    t.scaled_form = eps * form;
    double h = hminus1_norm(u);
    t.dual_term = (2.0 / eps) * h * h;
    t.margin = t.scaled_form + t.dual_term - t.l2sq;
    return t;
}

/// rhs - lhs of the cutoff localization bound
///   n^2 II rho_n ((chi u)(x)-(chi u)(y))^2
///     <= 2||chi||_inf^2 n^2 II rho_n (u(x)-u(y))^2
///      + 2||chi||_{W^{1,inf}}^2 (int rho z^2) ||u||_2^2,
/// with the Lipschitz constant taken from one-sided differences so the
/// per-pair bound |chi_i - chi_j| <= Lip |i-j| dx is exact on the grid.
inline double cutoff_bound_margin(const Field& u, const Field& chi, const KernelSpec& rho, int n,
                                  const DiscreteKernel* prescaled = nullptr) {
    if (u.grid != chi.grid) throw std::invalid_argument("cutoff_bound_margin: grid mismatch");
    Field chiu(u.grid);
    double chi_inf = 0.0, lip = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        chiu.values[i] = chi.values[i] * u.values[i];
        chi_inf = std::max(chi_inf, std::abs(chi.values[i]));
        if (i + 1 < u.size())
            lip = std::max(lip, std::abs(chi.values[i + 1] - chi.values[i]) / u.grid.dx);
    }
    double w1inf = std::max(chi_inf, lip);
    double nn = static_cast<double>(n);
    double form_u = prescaled != nullptr ? nn * nn * quadratic_form(u, *prescaled)
                                         : quadratic_form(u, rho, nn);
    double form_chiu = prescaled != nullptr ? nn * nn * quadratic_form(chiu, *prescaled)
                                            : quadratic_form(chiu, rho, nn);
    double rhs = 2.0 * chi_inf * chi_inf * form_u +
                 2.0 * w1inf * w1inf * rho.second_moment_full() * l2_norm_sq(u);
    return rhs - form_chiu;
}

// ---------------------------------------------------------------------------
// randomized audit drivers

/// Band-limited random field with a smooth envelope that vanishes at the
/// domain edges (keeps the zero extension in H^1).
inline Field random_band_limited(const Grid& g, std::mt19937_64& rng, double k_max = 3.0,
                                 int modes = 8) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.0, k_max),
        phase(0.0, 2.0 * std::numbers::pi);
    std::vector<double> a(modes), k(modes), th(modes);
    for (int j = 0; j < modes; ++j) {
        a[j] = amp(rng);
        k[j] = freq(rng);
        th[j] = phase(rng);
    }
    double hw = g.half_width();
    double mid = 0.5 * (g.x_min + g.x_max());
    Field f(g);
    for (std::size_t i = 0; i < g.n; ++i) {
        double x = g.x_center(i);
        double s = std::abs(x - mid) / hw;
        double env = s >= 1.0 ? 0.0
                     : s <= 0.8
                         ? 1.0
                         : std::pow(std::cos(0.5 * std::numbers::pi * (s - 0.8) / 0.2), 2);
        double v = 0.0;
        for (int j = 0; j < modes; ++j) v += a[j] * std::cos(k[j] * x + th[j]);
        f.values[i] = env * v;
    }
    return f;
}

/// Smooth compactly supported cutoff with random center, width and height.
inline Field random_cutoff(const Grid& g, std::mt19937_64& rng) {
    double hw = g.half_width();
    std::uniform_real_distribution<double> cdist(-0.3 * hw, 0.3 * hw), wdist(0.3 * hw, 0.7 * hw),
        hdist(0.5, 2.0);
    double c = cdist(rng), w = wdist(rng), h = hdist(rng);
    Field chi(g);
    for (std::size_t i = 0; i < g.n; ++i) {
        double s = std::abs(g.x_center(i) - c) / w;
        chi.values[i] = s >= 1.0 ? 0.0 : h * std::pow(std::cos(0.5 * std::numbers::pi * s), 2);
    }
    return chi;
}

/// Smooth even compactly supported unit-mass bump, tabulated; the default
/// mollifier for the inequality audits.
inline KernelSpec make_bump_kernel(double halfwidth = 2.0, std::size_t samples = 400) {
    std::vector<double> vals(samples + 1, 0.0);
    double dz = halfwidth / static_cast<double>(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        double s = static_cast<double>(j) / static_cast<double>(samples);
        vals[j] = std::exp(-1.0 / (1.0 - s * s));
    }
    return KernelSpec::tabulated(std::move(vals), dz);
}

namespace detail {
inline void fold_trial(IneqReport& rep, double margin, double scale) {
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -1e-12 * std::max(scale, 1e-300)) ++rep.violations;
}
} // namespace detail

inline IneqReport audit_gradient_bound(const Grid& g, const KernelSpec& rho,
                                       const std::vector<double>& lambdas, int trials,
                                       std::uint64_t seed) {
    IneqReport rep;
    rep.lemma_id = "gradient_bound";
    rep.trials = trials;
    rep.seed = seed;
    std::map<double, DiscreteKernel> cache;
    for (double l : lambdas) cache.emplace(l, discretize(rho.rescaled(l), g.dx, 1e-10));
    std::vector<double> margins(static_cast<std::size_t>(trials)), scales(margins.size());
    parallel_for(margins.size(), [&](std::size_t i) {
        std::mt19937_64 rng(trial_seed(seed, i));
        Field phi = random_band_limited(g, rng);
        double lambda = lambdas[i % lambdas.size()];
        const DiscreteKernel& dk = cache.at(lambda);
        double lhs = lambda * lambda * quadratic_form(phi, dk);
        double margin = gradient_bound_margin(phi, rho, lambda, &dk);
        margins[i] = margin;
        scales[i] = std::abs(lhs) + std::abs(lhs + margin);
    });
    for (std::size_t i = 0; i < margins.size(); ++i) detail::fold_trial(rep, margins[i], scales[i]);
    return rep;
}

inline IneqReport audit_norm_balance(const Grid& g, const KernelSpec& rho,
                                     const std::vector<double>& eps_list, int trials,
                                     std::uint64_t seed) {
    IneqReport rep;
    rep.lemma_id = "norm_balance";
    rep.trials = trials;
    rep.seed = seed;
    double delta = fourier_constants(rho).delta;
    std::map<int, DiscreteKernel> cache;
    std::vector<std::pair<double, int>> cases;
    for (double eps : eps_list) {
        int thr = balance_threshold(delta, eps);
        for (int n : {thr, 4 * thr}) {
            cases.emplace_back(eps, n);
            if (!cache.count(n))
                cache.emplace(n, discretize(rho.rescaled(static_cast<double>(n)), g.dx, 1e-10));
        }
    }
    std::vector<double> margins(static_cast<std::size_t>(trials)), scales(margins.size());
    parallel_for(margins.size(), [&](std::size_t i) {
        std::mt19937_64 rng(trial_seed(seed, i));
        Field u = random_band_limited(g, rng);
        auto [eps, n] = cases[i % cases.size()];
        BalanceTerms t = norm_balance_terms(u, rho, eps, n, delta, &cache.at(n));
        margins[i] = t.margin;
        scales[i] = t.l2sq + t.scaled_form + t.dual_term;
    });
    for (std::size_t i = 0; i < margins.size(); ++i) detail::fold_trial(rep, margins[i], scales[i]);
    return rep;
}

inline IneqReport audit_cutoff_bound(const Grid& g, const KernelSpec& rho,
                                     const std::vector<int>& n_list, int trials,
                                     std::uint64_t seed) {
    IneqReport rep;
    rep.lemma_id = "cutoff_bound";
    rep.trials = trials;
    rep.seed = seed;
    std::map<int, DiscreteKernel> cache;
    for (int n : n_list)
        cache.emplace(n, discretize(rho.rescaled(static_cast<double>(n)), g.dx, 1e-10));
    std::vector<double> margins(static_cast<std::size_t>(trials)), scales(margins.size());
    parallel_for(margins.size(), [&](std::size_t i) {
        std::mt19937_64 rng(trial_seed(seed, i));
        Field u = random_band_limited(g, rng);
        Field chi = random_cutoff(g, rng);
        int n = n_list[i % n_list.size()];
        double margin = cutoff_bound_margin(u, chi, rho, n, &cache.at(n));
        double nn = static_cast<double>(n);
        double lhs_scale = nn * nn * quadratic_form(u, cache.at(n)) + l2_norm_sq(u);
        margins[i] = margin;
        scales[i] = lhs_scale;
    });
    for (std::size_t i = 0; i < margins.size(); ++i) detail::fold_trial(rep, margins[i], scales[i]);
    return rep;
}

// ---------------------------------------------------------------------------
// uniform tail control

struct TailBoundFit {
    double C = 0.0;                  // smallest constant certifying the bound
    std::vector<double> per_radius;  // max over (t, lambda) for each R
};

/// Smallest C with
///   int_{|x|>2R} u_lambda(t) <= int_{|x|>R} phi + C (t/R^2 + sqrt(t)/R)
/// over the (R, t, lambda) grid. Tail integrals of u_lambda reduce to tails
/// of the stored solution at radius 2 R lambda.
inline TailBoundFit check_tail_bound(const SolutionStore& store, const Field& phi,
                                     const std::vector<double>& R_list,
                                     const std::vector<double>& t_list,
                                     const std::vector<double>& lambda_list) {
    TailBoundFit fit;
    for (double R : R_list) {
        if (!(2.0 * R <= phi.grid.half_width()))
            throw std::invalid_argument("check_tail_bound: 2R beyond domain");
        double base = tail_mass(phi, R);
        double worst = 0.0;
        for (double lambda : lambda_list) {
            if (!(lambda >= 1.0)) throw std::invalid_argument("check_tail_bound: lambda must be >= 1");
            for (double t : t_list) {
                Field u = store.sample_time(lambda * lambda * t);
                double radius = 2.0 * R * lambda;
                double lhs = 0.0;
                for (std::size_t i = 0; i < u.size(); ++i)
                    if (std::abs(u.grid.x_center(i)) > radius) lhs += std::abs(u.values[i]);
                lhs *= u.grid.dx;
                double denom = t / (R * R) + std::sqrt(t) / R;
                worst = std::max(worst, std::max(0.0, lhs - base) / denom);
            }
        }
        fit.per_radius.push_back(worst);
        fit.C = std::max(fit.C, worst);
    }
    return fit;
}

} // namespace nlcd
