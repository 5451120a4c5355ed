#pragma once

// Continuation studies along s = kappa * s_ref: certified kappa intervals and
// linear-model error sweeps.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mplf/linearize.hpp"
#include "mplf/newton.hpp"

namespace mplf {

struct IntervalOptions {
    /// Search stops here in each direction; an interval reaching it is reported as unbounded.
    double kappa_bound = 100.0;
    double tol_kappa = 1e-3;
    /// Outward marching step used to find the first failing kappa before bisecting.
    double coarse_step = 1.0 / 16.0;
    int scan_points = default_scan_points;
};

struct FeasibleInterval {
    CertificateKind kind = CertificateKind::closed_form;
    double center = 0.0;
    double kappa_min = 0.0;
    double kappa_max = 0.0;
    bool min_unbounded = false;
    bool max_unbounded = false;
    bool center_passes = false;
    /// Feasibility is not provably monotone in |kappa - center|: the endpoints are the
    /// first pass/fail brackets met while marching outward.
    bool bracketed = false;
};

namespace detail {

/// Largest offset t in [0, bound] along `direction` with a passing certificate, marching then bisecting.
template <typename Passes>
double outward_endpoint(Passes&& passes, double center, double direction, const IntervalOptions& opts,
                        bool& unbounded) {
    double good = 0.0;
    double bad = -1.0;
    for (double t = opts.coarse_step;; t += opts.coarse_step) {
        const double tt = std::min(t, opts.kappa_bound);
        if (!passes(center + direction * tt)) {
            bad = tt;
            break;
        }
        good = tt;
        if (tt >= opts.kappa_bound) break;
    }
    if (bad < 0.0) {
        unbounded = true;
        return good;
    }
    unbounded = false;
    while (bad - good > opts.tol_kappa) {
        const double mid = 0.5 * (good + bad);
        if (passes(center + direction * mid))
            good = mid;
        else
            bad = mid;
    }
    return good;
}

} // namespace detail

/// Certified kappa interval for targets kappa * s_ref around `base`, which sits at kappa = center.
inline FeasibleInterval feasible_interval(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                          const BasePoint& base, const InjectionSet& s_ref, CertificateKind kind,
                                          const IntervalOptions& opts = {}, double center = 0.0) {
    if (!(opts.tol_kappa > 0.0) || !(opts.coarse_step > 0.0) || !(opts.kappa_bound > 0.0))
        throw ModelError("interval tolerances must be positive");
    s_ref.validate(model);
    validate_base(model, w_profile, base);
    const XiWeights weights = xi_weights(model, w_profile);
    // The base residual was checked once above; skip it for every trial kappa.
    const BasePoint trusted{w_profile.w, InjectionSet::zero(model)};
    const bool canonical = base.s_hat.is_zero() && base.v_hat == w_profile.w;
    auto passes = [&](double kappa) {
        const InjectionSet target = kappa * s_ref;
        if (canonical) return certify(kind, model, w_profile, weights, trusted, target, opts.scan_points).satisfied;
        return certify(kind, model, w_profile, weights, base, target, opts.scan_points).satisfied;
    };

    FeasibleInterval out;
    out.kind = kind;
    out.center = center;
    out.bracketed = kind == CertificateKind::radius_scan || !base.s_hat.is_zero();
    out.center_passes = passes(center);
    if (!out.center_passes) {
        out.kappa_min = out.kappa_max = center;
        return out;
    }
    out.kappa_max = center + detail::outward_endpoint(passes, center, 1.0, opts, out.max_unbounded);
    out.kappa_min = center - detail::outward_endpoint(passes, center, -1.0, opts, out.min_unbounded);
    return out;
}

struct RecenteredInterval {
    FeasibleInterval interval;
    SolveResult base_solution;
};

/// Solves at base_kappa * s_ref and certifies around that solution.
inline RecenteredInterval recentered_interval(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                              const InjectionSet& s_ref, double base_kappa, CertificateKind kind,
                                              const IntervalOptions& opts = {},
                                              const FixedPointOptions& solver = {}) {
    const InjectionSet s_hat = base_kappa * s_ref;
    RecenteredInterval out;
    out.base_solution = solve_fixed_point(model, w_profile, s_hat, std::nullopt, solver);
    if (!out.base_solution.converged)
        throw NonConvergenceError("base solution at kappa = " + std::to_string(base_kappa) +
                                      " misses the residual tolerance",
                                  out.base_solution.v, out.base_solution.step_norms);
    const BasePoint base = base_kappa == 0.0 ? BasePoint::zero_load(model, w_profile)
                                             : BasePoint{out.base_solution.v, s_hat};
    out.interval = feasible_interval(model, w_profile, base, s_ref, kind, opts, base_kappa);
    return out;
}

/********************************************************************************
 * Linear-model error sweep
 *******************************************************************************/

enum class SolverUsed { none, fixed_point, newton };

inline std::string to_string(SolverUsed s) {
    switch (s) {
    case SolverUsed::fixed_point: return "fixed_point";
    case SolverUsed::newton: return "newton";
    default: return "none";
    }
}

struct SweepOptions {
    CertificateKind kind = CertificateKind::closed_form;
    int scan_points = default_scan_points;
    /// Contiguous grid segments solved concurrently; each segment is its own warm-start chain.
    int jobs = 1;
    FixedPointOptions fixed_point{};
    oracle::NewtonOptions newton{};
};

struct ContinuationResult {
    std::vector<double> kappas;
    /// Certificate of the selected kind around the sweep base.
    std::vector<Certificate> certificates;
    /// Closed-form certificate around the sweep base, the source of the radius columns.
    std::vector<Certificate> closed_form;
    std::vector<std::optional<SolveResult>> solutions;
    std::vector<SolverUsed> solver_used;
    std::vector<std::optional<double>> fot_errors;
    std::vector<std::optional<double>> fpl_errors;
    std::vector<std::string> failures;
    double base_kappa = 0.0;
    SolveResult base_solution;
    LinearModel fot;
    LinearModel fpl;
};

inline double relative_error(const CVector& approx, const CVector& exact) { return inf_norm(CVector(approx - exact)) / inf_norm(exact); }

namespace detail {

struct PointOutcome {
    std::optional<SolveResult> solution;
    SolverUsed used = SolverUsed::none;
    std::string failure;
};

inline PointOutcome solve_point(const NetworkModel& model, const ZeroLoadProfile& w_profile, const InjectionSet& inj,
                                const CVector& seed, const SweepOptions& opts) {
    PointOutcome out;
    std::string why;
    try {
        SolveResult r = solve_fixed_point(model, w_profile, inj, seed, opts.fixed_point);
        if (r.converged) {
            out.solution = std::move(r);
            out.used = SolverUsed::fixed_point;
            return out;
        }
        why = "fixed point: residual " + std::to_string(r.residual_inf);
    } catch (const Error& e) {
        why = std::string("fixed point: ") + e.what();
    }
    try {
        SolveResult r = oracle::newton_oracle(model, w_profile, inj, seed, opts.newton);
        if (r.residual_inf <= opts.fixed_point.tol_residual) {
            out.solution = std::move(r);
            out.used = SolverUsed::newton;
            return out;
        }
        why += "; newton: residual " + std::to_string(r.residual_inf);
    } catch (const Error& e) {
        why += std::string("; newton: ") + e.what();
    }
    out.failure = why;
    return out;
}

} // namespace detail

/// Builds both linear models at base_kappa * s_ref and compares them with exact solutions along the grid.
inline ContinuationResult linear_error_sweep(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                             const InjectionSet& s_ref, double base_kappa,
                                             const std::vector<double>& kappa_grid, const SweepOptions& opts = {}) {
    s_ref.validate(model);
    ContinuationResult out;
    out.base_kappa = base_kappa;
    out.kappas = kappa_grid;
    const std::size_t count = kappa_grid.size();

    const InjectionSet s_hat = base_kappa * s_ref;
    {
        detail::PointOutcome base = detail::solve_point(model, w_profile, s_hat, w_profile.w, opts);
        if (!base.solution)
            throw NonConvergenceError("no load-flow solution at the sweep base: " + base.failure, w_profile.w, {});
        out.base_solution = *base.solution;
    }
    const BasePoint base = s_hat.is_zero() ? BasePoint::zero_load(model, w_profile)
                                           : BasePoint{out.base_solution.v, s_hat};
    out.fot = fot_linearize(model, w_profile, base);
    out.fpl = fpl_linearize(model, w_profile, base);

    const XiWeights weights = xi_weights(model, w_profile);
    out.certificates.resize(count);
    out.closed_form.resize(count);
    out.solutions.resize(count);
    out.solver_used.assign(count, SolverUsed::none);
    out.fot_errors.resize(count);
    out.fpl_errors.resize(count);
    out.failures.resize(count);

    auto run_point = [&](std::size_t k, const CVector& seed) -> const CVector* {
        const InjectionSet target = kappa_grid[k] * s_ref;
        out.closed_form[k] = certify_closed_form(model, w_profile, weights, base, target);
        out.certificates[k] = opts.kind == CertificateKind::closed_form
                                  ? out.closed_form[k]
                                  : certify_scan(model, w_profile, weights, base, target, opts.scan_points);
        detail::PointOutcome r = detail::solve_point(model, w_profile, target, seed, opts);
        out.solver_used[k] = r.used;
        if (!r.solution) {
            out.failures[k] = r.failure;
            return nullptr;
        }
        const RVector x = target.stacked();
        out.fot_errors[k] = relative_error(evaluate_linear(out.fot, x).v, r.solution->v);
        out.fpl_errors[k] = relative_error(evaluate_linear(out.fpl, x).v, r.solution->v);
        out.solutions[k] = std::move(r.solution);
        return &out.solutions[k]->v;
    };

    // One warm-start chain per segment, started at the point nearest the base and
    // seeded by the fpl prediction there, then marching outward both ways.
    auto run_segment = [&](std::size_t lo, std::size_t hi) {
        if (lo >= hi) return;
        std::size_t start = lo;
        for (std::size_t k = lo; k < hi; ++k)
            if (std::abs(kappa_grid[k] - base_kappa) < std::abs(kappa_grid[start] - base_kappa)) start = k;
        const CVector seed0 = evaluate_linear(out.fpl, (kappa_grid[start] * s_ref).stacked()).v;
        const CVector* first = run_point(start, seed0);
        const CVector start_seed = first ? *first : seed0;
        CVector seed = start_seed;
        for (std::size_t k = start + 1; k < hi; ++k) {
            if (const CVector* v = run_point(k, seed)) seed = *v;
        }
        seed = start_seed;
        for (std::size_t k = start; k-- > lo;) {
            if (const CVector* v = run_point(k, seed)) seed = *v;
        }
    };

    const std::size_t jobs = static_cast<std::size_t>(std::clamp(opts.jobs, 1, std::max(1, static_cast<int>(count))));
    if (jobs <= 1) {
        run_segment(0, count);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t) {
            const std::size_t lo = count * t / jobs;
            const std::size_t hi = count * (t + 1) / jobs;
            workers.emplace_back(run_segment, lo, hi);
        }
        for (std::thread& w : workers) w.join();
    }
    return out;
}

/// Uniform grid of `points` values from lo to hi inclusive.
inline std::vector<double> kappa_grid(double lo, double hi, int points) {
    if (points < 1) throw ModelError("grid needs at least one point");
    if (!(lo <= hi)) throw ModelError("kappa range is not ordered");
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        out[static_cast<std::size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    return out;
}

} // namespace mplf
