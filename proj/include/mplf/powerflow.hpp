#pragma once

// Load-flow equations, the fixed-point map G and its iteration.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mplf/netmodel.hpp"

namespace mplf {

/// Guards for the diagonal inversions in G and the delta-current recovery.
inline constexpr double eps_v = 1e-9;
inline constexpr double eps_delta = 1e-9;

/// Constant-power injections, generation-positive.
struct InjectionSet {
    CVector s_wye;
    CVector s_delta;

    static InjectionSet zero(const NetworkModel& model) {
        return {CVector::Zero(model.phase_count()), CVector::Zero(model.delta_count())};
    }

    /// Stacked real vector x = (Re sY, Im sY, Re sD, Im sD).
    RVector stacked() const {
        RVector x(2 * (s_wye.size() + s_delta.size()));
        x << s_wye.real(), s_wye.imag(), s_delta.real(), s_delta.imag();
        return x;
    }

    static InjectionSet from_stacked(const RVector& x, Index phase_count, Index delta_count) {
        if (x.size() != 2 * (phase_count + delta_count))
            throw ModelError("stacked injection vector has wrong length");
        InjectionSet out;
        out.s_wye = unstack_real_imag(x.head(2 * phase_count));
        out.s_delta = unstack_real_imag(x.tail(2 * delta_count));
        return out;
    }

    bool is_zero() const {
        return (s_wye.size() == 0 || s_wye.cwiseAbs().maxCoeff() == 0.0) &&
               (s_delta.size() == 0 || s_delta.cwiseAbs().maxCoeff() == 0.0);
    }

    void validate(const NetworkModel& model) const {
        if (s_wye.size() != model.phase_count())
            throw ModelError("wye injection length " + std::to_string(s_wye.size()) + " does not match " +
                             std::to_string(model.phase_count()) + " phases");
        if (s_delta.size() != model.delta_count())
            throw ModelError("delta injection length " + std::to_string(s_delta.size()) + " does not match " +
                             std::to_string(model.delta_count()) + " delta connections");
        if (!s_wye.allFinite() || !s_delta.allFinite()) throw ModelError("injections contain non-finite values");
    }

    InjectionSet& operator+=(const InjectionSet& o) {
        s_wye += o.s_wye;
        s_delta += o.s_delta;
        return *this;
    }
    InjectionSet& operator-=(const InjectionSet& o) {
        s_wye -= o.s_wye;
        s_delta -= o.s_delta;
        return *this;
    }
    friend InjectionSet operator+(InjectionSet a, const InjectionSet& b) { return a += b; }
    friend InjectionSet operator-(InjectionSet a, const InjectionSet& b) { return a -= b; }
    friend InjectionSet operator*(double k, const InjectionSet& a) { return {k * a.s_wye, k * a.s_delta}; }
};

struct SolveResult {
    CVector v;
    CVector i_delta;
    CVector i;
    int iterations = 0;
    double residual_inf = 0.0;
    bool converged = false;
    /// Largest observed ratio of consecutive step norms.
    double contraction_estimate = 0.0;
    /// Unweighted and |w|-weighted infinity norms of every step.
    std::vector<double> step_norms;
    std::vector<double> weighted_step_norms;
};

namespace detail {

inline void check_wye_voltages(const NetworkModel& model, const CVector& v, const CVector& s_wye) {
    for (Index j = 0; j < v.size(); ++j) {
        if (std::abs(v(j)) <= eps_v && s_wye(j) != Complex(0.0, 0.0)) {
            const PhaseEntry& e = model.index().phases()[static_cast<std::size_t>(j)];
            throw DegenerateVoltageError("voltage collapsed at loaded bus '" + e.bus + "' phase " +
                                         std::string(1, to_char(e.phase)));
        }
    }
}

inline void check_delta_voltages(const NetworkModel& model, const CVector& hv, const CVector& s_delta) {
    for (Index k = 0; k < hv.size(); ++k) {
        if (std::abs(hv(k)) <= eps_delta && s_delta(k) != Complex(0.0, 0.0)) {
            const DeltaEntry& e = model.index().deltas()[static_cast<std::size_t>(k)];
            throw DegenerateVoltageError("phase-to-phase voltage collapsed at loaded bus '" + e.bus + "' pair " +
                                         to_string(e.pair));
        }
    }
}

/// Elementwise a / b with 0 where a is exactly zero.
inline CVector safe_divide(const CVector& a, const CVector& b) {
    CVector out(a.size());
    for (Index k = 0; k < a.size(); ++k) out(k) = a(k) == Complex(0.0, 0.0) ? Complex(0.0, 0.0) : a(k) / b(k);
    return out;
}

/// W^{-1} x in the infinity norm.
inline double weighted_inf_norm(const CVector& x, const RVector& w_abs) {
    double out = 0.0;
    for (Index j = 0; j < x.size(); ++j) out = std::max(out, std::abs(x(j)) / w_abs(j));
    return out;
}

} // namespace detail

/// conj(i_delta) = s_delta / (H v); zero where s_delta is zero.
inline CVector delta_currents(const NetworkModel& model, const CVector& v, const InjectionSet& inj) {
    const CVector hv = model.connections().apply(v);
    detail::check_delta_voltages(model, hv, inj.s_delta);
    return detail::safe_divide(inj.s_delta, hv).conjugate();
}

/// Elementwise magnitude of the power-balance mismatch at every PQ phase.
inline RVector power_flow_residual(const NetworkModel& model, const ZeroLoadProfile& /*w_profile*/, const CVector& v,
                                   const InjectionSet& inj) {
    inj.validate(model);
    if (v.size() != model.phase_count()) throw ModelError("voltage vector has wrong length");
    detail::check_wye_voltages(model, v, inj.s_wye);
    const CVector i_delta = delta_currents(model, v, inj);
    const CVector i = model.currents(v);
    const CVector mismatch =
        inj.s_wye +
        v.cwiseProduct(model.connections().apply_transpose(i_delta.conjugate(), model.phase_count())) -
        v.cwiseProduct(i.conjugate());
    return mismatch.cwiseAbs();
}

/// G(v) = w + YLL^{-1} (conj(sY) / conj(v) + H^T conj(sD) / (H conj(v))).
inline CVector fixed_point_map(const NetworkModel& model, const ZeroLoadProfile& w_profile, const InjectionSet& inj,
                               const CVector& v) {
    if (v.size() != model.phase_count()) throw ModelError("voltage vector has wrong length");
    detail::check_wye_voltages(model, v, inj.s_wye);
    const CVector hv = model.connections().apply(v);
    detail::check_delta_voltages(model, hv, inj.s_delta);
    if (inj.is_zero()) return w_profile.w;
    const CVector wye_term = detail::safe_divide(inj.s_wye.conjugate(), v.conjugate());
    const CVector delta_term = model.connections().apply_transpose(
        detail::safe_divide(inj.s_delta.conjugate(), hv.conjugate()), model.phase_count());
    return w_profile.w + model.yll_inverse() * (wye_term + delta_term);
}

struct FixedPointOptions {
    double tol_step = 1e-10;
    double tol_residual = 1e-8;
    int max_iter = 1000;
    /// Step ratios are only formed when the earlier step exceeds this.
    double ratio_floor = 1e-11;
};

namespace detail {

inline SolveResult finish_solution(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                   const InjectionSet& inj, CVector v) {
    SolveResult out;
    out.i_delta = delta_currents(model, v, inj);
    out.i = model.currents(v);
    out.residual_inf = inf_norm(power_flow_residual(model, w_profile, v, inj));
    out.v = std::move(v);
    return out;
}

} // namespace detail

/// Iterates v <- G(v) from v_init (default w) until the step norm falls below tol_step.
///
/// If the residual check fails at that point the iteration keeps going while steps
/// still shrink, and reports converged = false once they stall.
inline SolveResult solve_fixed_point(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                     const InjectionSet& inj, const std::optional<CVector>& v_init = std::nullopt,
                                     const FixedPointOptions& opts = {}) {
    inj.validate(model);
    if (!(opts.tol_step > 0.0) || !(opts.tol_residual > 0.0) || opts.max_iter <= 0)
        throw ModelError("solver tolerances and iteration limit must be positive");
    CVector v = v_init.value_or(w_profile.w);
    if (v.size() != model.phase_count()) throw ModelError("initial voltage has wrong length");

    std::vector<double> steps;
    std::vector<double> weighted;
    double ratio = 0.0;
    bool polishing = false;
    for (int k = 1; k <= opts.max_iter; ++k) {
        CVector next = fixed_point_map(model, w_profile, inj, v);
        const CVector delta = next - v;
        const double step = inf_norm(delta);
        if (!std::isfinite(step)) break;
        if (!steps.empty() && steps.back() > opts.ratio_floor) ratio = std::max(ratio, step / steps.back());
        const bool stalled = polishing && step >= steps.back();
        steps.push_back(step);
        weighted.push_back(detail::weighted_inf_norm(delta, w_profile.w_abs));
        v = std::move(next);
        if (step < opts.tol_step || stalled) {
            SolveResult out = detail::finish_solution(model, w_profile, inj, v);
            if (out.residual_inf > opts.tol_residual && !stalled && step > 0.0) {
                polishing = true;
                continue;
            }
            out.iterations = k;
            out.converged = out.residual_inf <= opts.tol_residual;
            out.contraction_estimate = ratio;
            out.step_norms = std::move(steps);
            out.weighted_step_norms = std::move(weighted);
            return out;
        }
    }
    throw NonConvergenceError("fixed-point iteration did not converge within " + std::to_string(opts.max_iter) +
                                  " iterations",
                              v, steps);
}

} // namespace mplf
