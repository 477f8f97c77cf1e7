#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlcd/convolve.hpp"
#include "nlcd/grid.hpp"
#include "nlcd/kernel.hpp"

namespace nlcd {

enum class Scheme { engquist_osher, godunov, upwind_positive };

struct SolverConfig {
    double q = 2.0;
    double a = 1.0;
    double cfl = 0.45;
    Scheme scheme = Scheme::engquist_osher;
    double viscosity_eps = 0.0;
    double t_end = 1.0;
    std::vector<double> snapshot_times;

    void validate() const {
        if (!(q >= 2.0)) throw std::invalid_argument("SolverConfig: q must be >= 2");
        if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("SolverConfig: cfl must lie in (0,1]");
        if (!(viscosity_eps >= 0.0)) throw std::invalid_argument("SolverConfig: viscosity_eps must be >= 0");
        if (!(t_end > 0.0)) throw std::invalid_argument("SolverConfig: t_end must be positive");
        if (scheme == Scheme::upwind_positive && a < 0.0)
            throw std::invalid_argument("SolverConfig: upwind_positive requires a >= 0");
        double prev = 0.0;
        for (double t : snapshot_times) {
            if (!(t >= 0.0 && t <= t_end))
                throw std::invalid_argument("SolverConfig: snapshot time outside [0, t_end]");
            if (t < prev) throw std::invalid_argument("SolverConfig: snapshot times must be sorted");
            prev = t;
        }
    }
};

/// f(u) = a |u|^{q-1} u.
inline double flux(double u, const SolverConfig& cfg) {
    if (cfg.q == 2.0) return cfg.a * std::abs(u) * u;
    return cfg.a * std::pow(std::abs(u), cfg.q - 1.0) * u;
}

/// f'(u) = a q |u|^{q-1}.
inline double dflux(double u, const SolverConfig& cfg) {
    if (cfg.q == 2.0) return cfg.a * 2.0 * std::abs(u);
    return cfg.a * cfg.q * std::pow(std::abs(u), cfg.q - 1.0);
}

/// Monotone two-point flux. f' carries the sign of a everywhere, so the
/// Engquist-Osher splitting reduces to pure upwinding; Godunov is evaluated
/// from the endpoint/critical-point candidates.
inline double numerical_flux(double uL, double uR, const SolverConfig& cfg) {
    switch (cfg.scheme) {
        case Scheme::engquist_osher:
            // f+(uL) + f-(uR) with f+' = max(f',0), f-' = min(f',0)
            return cfg.a >= 0.0 ? flux(uL, cfg) : flux(uR, cfg);
        case Scheme::godunov: {
            double lo = std::min(uL, uR), hi = std::max(uL, uR);
            double fl = flux(lo, cfg), fh = flux(hi, cfg);
            double fmin = std::min(fl, fh), fmax = std::max(fl, fh);
            if (lo < 0.0 && 0.0 < hi) { // f'(0) = 0 for q >= 2
                fmin = std::min(fmin, 0.0);
                fmax = std::max(fmax, 0.0);
            }
            return uL <= uR ? fmin : fmax;
        }
        case Scheme::upwind_positive:
            return flux(uL, cfg);
    }
    return 0.0;
}

/// CFL-stable time step: cfl / (max|f'|/dx + 1 + 2 eps/dx^2). The "+1"
/// accounts for the relaxation part, whose diagonal coefficient is >= -1.
inline double stable_dt(const Field& f, const DiscreteKernel& k, const SolverConfig& cfg) {
    (void)k;
    double dmax = 0.0;
    for (double u : f.values) dmax = std::max(dmax, std::abs(dflux(u, cfg)));
    const double dx = f.grid.dx;
    return cfg.cfl / (dmax / dx + 1.0 + 2.0 * cfg.viscosity_eps / (dx * dx));
}

namespace detail {

/// Per-step observables, all evaluated at the pre-step state u^n except the
/// post-step mass/norms. dissipation = dt * (Q + D_flux + D_visc) satisfies
///   l2sq^{n+1} - l2sq^n + dissipation = dt^2 ||L(u^n)||^2  exactly.
struct StepDiag {
    double mass_next = 0.0;
    double l2sq_next = 0.0;
    double linf_next = 0.0;
    double quad_form = 0.0;  // double integral of J(x-y)(u(x)-u(y))^2
    double flux_diss = 0.0;  // 2 sum_i u_i (F_{i+1/2} - F_{i-1/2})
    double visc_diss = 0.0;
    double leak = 0.0;       // mass lost through the boundary this step
};

struct StepScratch {
    explicit StepScratch(const DiscreteKernel& k, const Grid& g)
        : conv(k, g.n), row_defect(g.n, 0.0), ju(g.n, 0.0), faces(g.n + 1, 0.0) {
        // 1 - sum_j w_{i-j} dx; nonzero only within m cells of the boundary
        auto m = static_cast<std::ptrdiff_t>(k.half_width());
        auto n = static_cast<std::ptrdiff_t>(g.n);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            if (i >= m && i < n - m) continue;
            double s = 0.0;
            for (std::ptrdiff_t j = -m; j <= m; ++j)
                if (i - j >= 0 && i - j < n) s += k.weight(j);
            row_defect[static_cast<std::size_t>(i)] = 1.0 - s * k.dx;
        }
    }
    FftConvolver conv;
    std::vector<double> row_defect;
    std::vector<double> ju;
    std::vector<double> faces;
};

inline StepDiag step_core(const std::vector<double>& u, const SolverConfig& cfg, double dt,
                          double dx, StepScratch& s, std::vector<double>& out) {
    const std::size_t n = u.size();
    s.conv.apply(u, s.ju);
    for (std::size_t i = 0; i <= n; ++i) {
        double uL = i == 0 ? 0.0 : u[i - 1];
        double uR = i == n ? 0.0 : u[i];
        s.faces[i] = numerical_flux(uL, uR, cfg);
    }

    StepDiag d;
    const double eps = cfg.viscosity_eps;
    const double lam = dt / dx;
    out.resize(n);
    double l2_u = 0.0, inner_uju = 0.0, kernel_leak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u[i];
        double upd = ui + dt * (s.ju[i] - ui) - lam * (s.faces[i + 1] - s.faces[i]);
        if (eps > 0.0) {
            double left = i == 0 ? 0.0 : u[i - 1];
            double right = i + 1 == n ? 0.0 : u[i + 1];
            upd += dt * eps * (right - 2.0 * ui + left) / (dx * dx);
        }
        out[i] = upd;
        l2_u += ui * ui;
        inner_uju += ui * s.ju[i];
        d.flux_diss += ui * (s.faces[i + 1] - s.faces[i]);
        if (s.row_defect[i] != 0.0) kernel_leak += ui * s.row_defect[i];
    }
    d.quad_form = 2.0 * (l2_u - inner_uju) * dx;
    d.flux_diss *= 2.0;
    if (eps > 0.0) {
        double vd = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double du = u[i + 1] - u[i];
            vd += du * du;
        }
        vd += u[0] * u[0] + u[n - 1] * u[n - 1]; // boundary faces, zero outside
        d.visc_diss = 2.0 * eps * vd / dx;
    }
    d.leak = dt * (kernel_leak * dx + s.faces[n] - s.faces[0]);
    if (eps > 0.0) d.leak += dt * eps * (u[0] + u[n - 1]) / dx;

    for (std::size_t i = 0; i < n; ++i) {
        d.mass_next += out[i];
        d.l2sq_next += out[i] * out[i];
        d.linf_next = std::max(d.linf_next, std::abs(out[i]));
    }
    d.mass_next *= dx;
    d.l2sq_next *= dx;
    return d;
}

} // namespace detail

/// Single forward-Euler step of u_t = (J*u - u) - (f(u))_x + eps u_xx with
/// zero extension outside the grid. Rejects dt above the CFL bound.
inline Field step(const Field& f, const DiscreteKernel& k, const SolverConfig& cfg, double dt) {
    double dt_max = stable_dt(f, k, cfg);
    if (dt > dt_max * (1.0 + 1e-9))
        throw std::invalid_argument("step: dt " + std::to_string(dt) + " exceeds stable bound " +
                                    std::to_string(dt_max));
    detail::StepScratch scratch(k, f.grid);
    Field out(f.grid);
    detail::step_core(f.values, cfg, dt, f.grid.dx, scratch, out.values);
    out.nonneg = f.nonneg; // monotone update under the CFL bound preserves sign
    return out;
}

struct LedgerRow {
    double t;
    double mass;
    double l2sq;
    double dissipation; // dt * (Q + D_flux + D_visc) for the step ending at t
};

/// Time-indexed snapshots plus the per-step diagnostic ledger of a run.
struct SolutionStore {
    SolverConfig config;
    DiscreteKernel kernel;
    std::vector<double> times;
    std::vector<Field> snapshots;
    std::vector<LedgerRow> ledger;
    double boundary_leak = 0.0; // cumulative mass lost through the boundary
    bool aborted = false;
    std::string abort_reason;

    const Grid& grid() const { return snapshots.front().grid; }

    /// State at time t, linearly interpolated between bracketing snapshots.
    Field sample_time(double t) const {
        if (times.empty()) throw std::runtime_error("SolutionStore: empty store");
        const double t_tol = 1e-9 * std::max(1.0, times.back());
        if (t < times.front() - t_tol || t > times.back() + t_tol)
            throw std::out_of_range("SolutionStore: time " + std::to_string(t) +
                                    " outside stored range");
        t = std::clamp(t, times.front(), times.back());
        auto it = std::lower_bound(times.begin(), times.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - times.begin());
        if (hi == 0) return snapshots.front();
        if (hi >= times.size()) return snapshots.back();
        if (times[hi] - t <= t_tol) return snapshots[hi];
        std::size_t lo = hi - 1;
        double w = (t - times[lo]) / (times[hi] - times[lo]);
        Field out(snapshots[lo].grid);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] = (1.0 - w) * snapshots[lo].values[i] + w * snapshots[hi].values[i];
        out.nonneg = snapshots[lo].nonneg && snapshots[hi].nonneg;
        return out;
    }
};

/// Integrates phi forward to t_end. Steps use the CFL-stable dt, clipped to
/// land exactly on snapshot times; every accepted step appends a ledger row.
/// On NaN/overflow the run stops and keeps the last good state.
inline SolutionStore integrate(const Field& phi, const DiscreteKernel& k, const SolverConfig& cfg) {
    cfg.validate();
    phi.validate();
    if (std::abs(k.dx - phi.grid.dx) > 1e-12 * k.dx)
        throw std::invalid_argument("integrate: kernel and grid spacing mismatch");

    SolutionStore store;
    store.config = cfg;
    store.kernel = k;

    std::vector<double> events = cfg.snapshot_times;
    events.push_back(0.0);
    events.push_back(cfg.t_end);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end(),
                             [&](double a, double b) { return std::abs(a - b) <= 1e-12 * cfg.t_end; }),
                 events.end());

    Field u = phi;
    double t = 0.0;
    std::size_t next_event = 0;
    store.times.push_back(0.0);
    store.snapshots.push_back(u);
    store.ledger.push_back({0.0, mass(u), l2_norm_sq(u), 0.0});
    while (next_event < events.size() && events[next_event] <= 1e-12 * cfg.t_end) ++next_event;

    detail::StepScratch scratch(k, phi.grid);
    std::vector<double> next(u.size());
    const double t_tol = 1e-10 * cfg.t_end;
    while (t < cfg.t_end - t_tol) {
        double dt = stable_dt(u, k, cfg);
        double target = events[next_event];
        if (t + dt >= target - t_tol) dt = target - t;

        detail::StepDiag diag = detail::step_core(u.values, cfg, dt, u.grid.dx, scratch, next);
        if (!std::isfinite(diag.l2sq_next) || diag.linf_next > 1e100) {
            store.aborted = true;
            store.abort_reason = "non-finite state at t = " + std::to_string(t + dt);
            break;
        }
        u.values.swap(next);
        t += dt;
        store.ledger.push_back(
            {t, diag.mass_next, diag.l2sq_next,
             dt * (diag.quad_form + diag.flux_diss + diag.visc_diss)});
        store.boundary_leak += diag.leak;

        if (std::abs(t - target) <= t_tol) {
            store.times.push_back(target);
            Field snap(u.grid, u.values, phi.nonneg);
            store.snapshots.push_back(std::move(snap));
            t = target;
            ++next_event;
        }
    }
    return store;
}

/// The scaling operator u_lambda(t, x) = lambda u(lambda^2 t, lambda x),
/// evaluated from stored snapshots by time-linear and space-linear
/// interpolation onto the target grid.
inline Field rescale(const SolutionStore& store, double lambda, double t, const Grid& target) {
    if (!(lambda > 0.0)) throw std::invalid_argument("rescale: lambda must be positive");
    Field base = store.sample_time(lambda * lambda * t); // throws out_of_range beyond final time
    Field out(target);
    for (std::size_t i = 0; i < target.n; ++i)
        out.values[i] = lambda * interpolate(base, lambda * target.x_center(i));
    out.nonneg = base.nonneg;
    return out;
}

/// Residuals of the discrete energy identity over consecutive snapshot
/// intervals: l2sq(t2) - l2sq(t1) + sum of ledger dissipation in (t1, t2].
/// Forward Euler makes each residual O(dt) on a fixed interval.
inline std::vector<double> energy_residuals(const SolutionStore& store) {
    if (store.times.size() < 2) throw std::invalid_argument("energy_residuals: need >= 2 snapshots");
    std::vector<double> out;
    std::size_t row = 0;
    const double t_tol = 1e-9 * std::max(1.0, store.times.back());
    for (std::size_t s = 0; s + 1 < store.times.size(); ++s) {
        double t1 = store.times[s], t2 = store.times[s + 1];
        while (row < store.ledger.size() && store.ledger[row].t < t1 + t_tol) ++row;
        double diss = 0.0;
        std::size_t r = row;
        while (r < store.ledger.size() && store.ledger[r].t <= t2 + t_tol) {
            diss += store.ledger[r].dissipation;
            ++r;
        }
        out.push_back(l2_norm_sq(store.snapshots[s + 1]) - l2_norm_sq(store.snapshots[s]) + diss);
    }
    return out;
}

/// Worst cell residual of the discrete entropy inequality for each
/// eta_k(u) = (u - k)^+, k >= 0, over a replay of the stored run:
///   eta(u^{n+1}) - eta(u^n) + (dt/dx) dG - dt (J*eta(u^n) - eta(u^n)) <= 0
/// with G(uL,uR) = F(uL v k, uR v k) - f(k). Monotone schemes satisfy this
/// up to roundoff under the CFL bound.
inline std::vector<double> entropy_residuals(const SolutionStore& store,
                                             const std::vector<double>& k_values) {
    const SolverConfig& cfg = store.config;
    const DiscreteKernel& k = store.kernel;
    Field u = store.snapshots.front();
    const double t_end = store.times.back();
    const double dx = u.grid.dx;
    const std::size_t n = u.grid.n;

    detail::StepScratch scratch(k, u.grid);
    std::vector<double> next(n), eta(n), jeta(n), worst(k_values.size(), 0.0);
    std::vector<double> gface(n + 1);

    std::vector<double> events = store.times;
    std::size_t next_event = 1;
    double t = 0.0;
    const double t_tol = 1e-10 * t_end;
    while (t < t_end - t_tol) {
        double dt = stable_dt(u, k, cfg);
        if (next_event < events.size() && t + dt >= events[next_event] - t_tol)
            dt = events[next_event] - t;
        detail::step_core(u.values, cfg, dt, dx, scratch, next);

        for (std::size_t kv = 0; kv < k_values.size(); ++kv) {
            const double kk = k_values[kv];
            const double fk = flux(kk, cfg);
            for (std::size_t i = 0; i < n; ++i) eta[i] = std::max(u.values[i] - kk, 0.0);
            scratch.conv.apply(eta, jeta);
            for (std::size_t i = 0; i <= n; ++i) {
                double uL = i == 0 ? 0.0 : u.values[i - 1];
                double uR = i == n ? 0.0 : u.values[i];
                gface[i] = numerical_flux(std::max(uL, kk), std::max(uR, kk), cfg) - fk;
            }
            double w = worst[kv];
            for (std::size_t i = 0; i < n; ++i) {
                double eta_next = std::max(next[i] - kk, 0.0);
                double r = eta_next - eta[i] + (dt / dx) * (gface[i + 1] - gface[i]) -
                           dt * (jeta[i] - eta[i]);
                w = std::max(w, r);
            }
            worst[kv] = w;
        }

        u.values.swap(next);
        t += dt;
        if (next_event < events.size() && std::abs(t - events[next_event]) <= t_tol) {
            t = events[next_event];
            ++next_event;
        }
    }
    return worst;
}

/// L1 distances of viscous runs to the eps = 0 run at t_end, all integrated
/// with one shared dt so the comparison isolates the viscosity term.
inline std::vector<std::pair<double, double>> vanishing_viscosity_compare(
    const Field& phi, const DiscreteKernel& k, const SolverConfig& cfg,
    const std::vector<double>& eps_list) {
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (eps_list[i] < eps_list[i + 1])
            throw std::invalid_argument("vanishing_viscosity_compare: eps_list must decrease");
    if (eps_list.empty() || eps_list.back() < 0.0)
        throw std::invalid_argument("vanishing_viscosity_compare: eps_list must end at >= 0");

    SolverConfig stiffest = cfg;
    stiffest.viscosity_eps = eps_list.front();
    double dt = stable_dt(phi, k, stiffest);
    auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt - 1e-12));
    dt = cfg.t_end / static_cast<double>(steps);

    auto run_fixed = [&](double eps) {
        SolverConfig c = cfg;
        c.viscosity_eps = eps;
        detail::StepScratch scratch(k, phi.grid);
        std::vector<double> u = phi.values, next(u.size());
        for (std::size_t s = 0; s < steps; ++s) {
            detail::step_core(u, c, dt, phi.grid.dx, scratch, next);
            u.swap(next);
        }
        return u;
    };

    std::vector<double> base = run_fixed(0.0);
    std::vector<std::pair<double, double>> table;
    for (double eps : eps_list) {
        std::vector<double> ue = eps == 0.0 ? base : run_fixed(eps);
        double dist = 0.0;
        for (std::size_t i = 0; i < ue.size(); ++i) dist += std::abs(ue[i] - base[i]);
        table.emplace_back(eps, dist * phi.grid.dx);
    }
    return table;
}

} // namespace nlcd
