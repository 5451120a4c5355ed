#pragma once

// Affine surrogates v ~ M^Y x^Y + M^D x^D + a and |v| ~ K^Y x^Y + K^D x^D + b,
// built either from the tangent of the solution manifold (fot) or from one
// fixed-point step taken at the base voltage (fpl).

#include <string>
#include <utility>

#include <Eigen/LU>

#include "mplf/certify.hpp"

namespace mplf {

enum class LinearKind { fot, fpl };

inline std::string to_string(LinearKind k) { return k == LinearKind::fot ? "fot" : "fpl"; }

struct LinearModel {
    LinearKind kind = LinearKind::fot;
    CMatrix M_wye;   // N x 2N
    CMatrix M_delta; // N x 2N_delta
    CVector a;
    RMatrix K_wye;
    RMatrix K_delta;
    RVector b;
    CVector v_hat;
    /// Stacked base injections (x^Y, x^D).
    RVector x_hat;

    Index phase_count() const { return a.size(); }
    Index delta_count() const { return M_delta.cols() / 2; }
};

struct LinearPrediction {
    CVector v;
    /// Affine magnitude model; not |v| of the complex prediction.
    RVector v_abs;
};

inline LinearPrediction evaluate_linear(const LinearModel& lm, const RVector& x) {
    const Index nw = lm.M_wye.cols();
    const Index nd = lm.M_delta.cols();
    if (x.size() != nw + nd) throw ModelError("stacked injection vector has wrong length");
    const RVector xw = x.head(nw);
    const RVector xd = x.tail(nd);
    LinearPrediction out;
    out.v = lm.M_wye * xw.cast<Complex>() + lm.M_delta * xd.cast<Complex>() + lm.a;
    out.v_abs = lm.K_wye * xw + lm.K_delta * xd + lm.b;
    return out;
}

inline LinearPrediction evaluate_linear(const LinearModel& lm, const InjectionSet& inj) {
    return evaluate_linear(lm, inj.stacked());
}

namespace detail {

/// Fills K and b from M, a and the base point.
inline void finish_magnitude_model(LinearModel& lm) {
    const RVector v_abs = lm.v_hat.cwiseAbs();
    const RVector inv_abs = v_abs.cwiseInverse();
    const CVector vc = lm.v_hat.conjugate();
    lm.K_wye = inv_abs.asDiagonal() * (vc.asDiagonal() * lm.M_wye).real();
    lm.K_delta = inv_abs.asDiagonal() * (vc.asDiagonal() * lm.M_delta).real();
    const Index nw = lm.M_wye.cols();
    const Index nd = lm.M_delta.cols();
    lm.b = v_abs - lm.K_wye * lm.x_hat.head(nw) - lm.K_delta * lm.x_hat.tail(nd);
}

inline void check_base_voltages(const NetworkModel& model, const CVector& v_hat) {
    for (Index j = 0; j < v_hat.size(); ++j)
        if (std::abs(v_hat(j)) <= eps_v) throw DegenerateVoltageError("base voltage vanishes at phase index " + std::to_string(j));
    const CVector hv = model.connections().apply(v_hat);
    for (Index k = 0; k < hv.size(); ++k)
        if (std::abs(hv(k)) <= eps_delta)
            throw DegenerateVoltageError("base phase-to-phase voltage vanishes at delta index " + std::to_string(k));
}

} // namespace detail

inline constexpr double min_sensitivity_rcond = 1e-12;

/// Tangent model: solves the sensitivity equations once for all injection directions.
inline LinearModel fot_linearize(const NetworkModel& model, const ZeroLoadProfile& w_profile, const BasePoint& base) {
    validate_base(model, w_profile, base);
    const Index n = model.phase_count();
    const Index m = model.delta_count();
    const ConnectionMatrix& h = model.connections();
    const CMatrix H = h.dense();
    const CVector& v = base.v_hat;
    const CVector hv = h.apply(v);
    CVector c = CVector::Zero(m);
    for (Index k = 0; k < m; ++k) {
        if (base.s_hat.s_delta(k) == Complex(0.0, 0.0)) continue;
        if (std::abs(hv(k)) <= eps_delta) throw SingularSensitivityError("base phase-to-phase voltage vanishes");
        c(k) = base.s_hat.s_delta(k) / hv(k);
    }
    const CVector i = model.currents(v);

    // Unknown columns (dV, dI) with dI the derivative of conj(i_delta).
    const CMatrix a_vv = (h.apply_transpose(c, n) - i.conjugate()).asDiagonal();
    const CMatrix b_vv = -(v.asDiagonal() * model.yll().conjugate());
    const CMatrix a_vi = v.asDiagonal() * H.transpose();
    const CMatrix a_iv = c.asDiagonal() * H;
    const CMatrix a_ii = hv.asDiagonal();

    // Real unknown order [Re dV; Im dV; Re dI; Im dI].
    const Index dim = 2 * (n + m);
    RMatrix op(dim, dim);
    op.topLeftCorner(2 * n, 2 * n) = realify(a_vv, b_vv);
    op.topRightCorner(2 * n, 2 * m) = realify(a_vi, CMatrix::Zero(n, m));
    op.bottomLeftCorner(2 * m, 2 * n) = realify(a_iv, CMatrix::Zero(m, n));
    op.bottomRightCorner(2 * m, 2 * m) = realify(a_ii, CMatrix::Zero(m, m));

    Eigen::PartialPivLU<RMatrix> lu(op);
    const double rc = lu.rcond();
    if (!(rc >= min_sensitivity_rcond))
        throw SingularSensitivityError("sensitivity system is singular at the base point (rcond = " +
                                       std::to_string(rc) + ")");

    // Right-hand sides from U = (I, jI): -U in the balance rows for wye columns,
    // +U in the delta rows for delta columns.
    RMatrix rhs = RMatrix::Zero(dim, dim);
    for (Index k = 0; k < n; ++k) {
        rhs(k, k) = -1.0;             // d/dp: -e_k, real part
        rhs(n + k, n + k) = -1.0;     // d/dq: -j e_k, imaginary part
    }
    for (Index k = 0; k < m; ++k) {
        rhs(2 * n + k, 2 * n + k) = 1.0;
        rhs(2 * n + m + k, 2 * n + m + k) = 1.0;
    }
    const RMatrix sol = lu.solve(rhs);

    LinearModel lm;
    lm.kind = LinearKind::fot;
    lm.v_hat = v;
    lm.x_hat = base.s_hat.stacked();
    const RMatrix dvr = sol.topRows(n);
    const RMatrix dvi = sol.middleRows(n, n);
    CMatrix dv(n, dim);
    dv.real() = dvr;
    dv.imag() = dvi;
    lm.M_wye = dv.leftCols(2 * n);
    lm.M_delta = dv.rightCols(2 * m);
    lm.a = v - lm.M_wye * lm.x_hat.head(2 * n).cast<Complex>() - lm.M_delta * lm.x_hat.tail(2 * m).cast<Complex>();
    detail::finish_magnitude_model(lm);
    return lm;
}

inline LinearModel fot_linearize(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                 const SolveResult& base_solution, const InjectionSet& base_inj) {
    return fot_linearize(model, w_profile, BasePoint{base_solution.v, base_inj});
}

/// One fixed-point step from v_hat, read as an affine function of the injections.
inline LinearModel fpl_linearize(const NetworkModel& model, const ZeroLoadProfile& w_profile, const BasePoint& base) {
    validate_base(model, w_profile, base);
    detail::check_base_voltages(model, base.v_hat);
    const Index n = model.phase_count();
    const Index m = model.delta_count();
    const CMatrix& z = model.yll_inverse();
    const ConnectionMatrix& h = model.connections();
    const Complex j(0.0, 1.0);

    const CMatrix mw = z * base.v_hat.conjugate().cwiseInverse().asDiagonal();
    CMatrix md(n, m);
    const CVector hv_conj = h.apply(base.v_hat).conjugate();
    for (Index k = 0; k < m; ++k)
        md.col(k) = (z.col(h.rows[k].first) - z.col(h.rows[k].second)) / hv_conj(k);

    LinearModel lm;
    lm.kind = LinearKind::fpl;
    lm.v_hat = base.v_hat;
    lm.x_hat = base.s_hat.stacked();
    lm.M_wye.resize(n, 2 * n);
    lm.M_wye << mw, -j * mw;
    lm.M_delta.resize(n, 2 * m);
    lm.M_delta << md, -j * md;
    lm.a = w_profile.w;
    detail::finish_magnitude_model(lm);
    return lm;
}

inline LinearModel fpl_linearize(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                 const SolveResult& base_solution, const InjectionSet& base_inj) {
    return fpl_linearize(model, w_profile, BasePoint{base_solution.v, base_inj});
}

inline LinearModel linearize(LinearKind kind, const NetworkModel& model, const ZeroLoadProfile& w_profile,
                             const BasePoint& base) {
    return kind == LinearKind::fot ? fot_linearize(model, w_profile, base) : fpl_linearize(model, w_profile, base);
}

struct FplErrorBound {
    double bound = 0.0;
    double q = 0.0;
    double rho_dagger = 0.0;
};

/// Bound q * rho_dagger * ||w||_inf on the error of the fpl prediction at `target`.
inline FplErrorBound fpl_error_bound(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                     const BasePoint& base, const InjectionSet& target) {
    const Certificate cert = certify_closed_form(model, w_profile, base, target);
    if (!cert.satisfied || !cert.rho_dagger || !cert.q)
        throw CertificateRequiredError("error bound requires the closed-form certificate to hold for the target");
    FplErrorBound out;
    out.q = *cert.q;
    out.rho_dagger = *cert.rho_dagger;
    out.bound = out.q * out.rho_dagger * inf_norm(w_profile.w);
    return out;
}

} // namespace mplf
