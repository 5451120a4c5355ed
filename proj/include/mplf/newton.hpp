#pragma once

// Damped Newton solve of the load-flow equations in rectangular coordinates.
// Independent of the fixed-point map; used to cross-check it and as a sweep fallback.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "mplf/powerflow.hpp"

namespace mplf::oracle {

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    double min_rcond = 1e-13;
};

namespace detail {

/// Unknowns are v and c = conj(i_delta).
struct NewtonState {
    CVector v;
    CVector c;
};

inline CVector equations(const NetworkModel& model, const InjectionSet& inj, const NewtonState& x) {
    const Index n = model.phase_count();
    const Index m = model.delta_count();
    const ConnectionMatrix& h = model.connections();
    CVector out(n + m);
    const CVector i = model.currents(x.v);
    out.head(n) = inj.s_wye + x.v.cwiseProduct(h.apply_transpose(x.c, n)) - x.v.cwiseProduct(i.conjugate());
    out.tail(m) = inj.s_delta - h.apply(x.v).cwiseProduct(x.c);
    return out;
}

inline RMatrix jacobian(const NetworkModel& model, const NewtonState& x) {
    const Index n = model.phase_count();
    const Index m = model.delta_count();
    const ConnectionMatrix& h = model.connections();
    const CMatrix H = h.dense();
    const CVector i = model.currents(x.v);
    const CVector hv = h.apply(x.v);

    const CMatrix a = (h.apply_transpose(x.c, n) - i.conjugate()).asDiagonal();
    const CMatrix b = -(x.v.asDiagonal() * model.yll().conjugate());
    const CMatrix c = x.v.asDiagonal() * H.transpose();
    const CMatrix d = -(x.c.asDiagonal() * H);
    const CMatrix e = -CMatrix(hv.asDiagonal());

    RMatrix out(2 * (n + m), 2 * (n + m));
    out.topLeftCorner(2 * n, 2 * n) = realify(a, b);
    out.topRightCorner(2 * n, 2 * m) = realify(c, CMatrix::Zero(n, m));
    out.bottomLeftCorner(2 * m, 2 * n) = realify(d, CMatrix::Zero(m, n));
    out.bottomRightCorner(2 * m, 2 * m) = realify(e, CMatrix::Zero(m, m));
    return out;
}

inline RVector pack(const CVector& z, Index n) {
    RVector out(2 * z.size());
    const Index m = z.size() - n;
    out << z.head(n).real(), z.head(n).imag(), z.tail(m).real(), z.tail(m).imag();
    return out;
}

} // namespace detail

/// Solves the load-flow equations by damped Newton; the step is halved while the residual grows.
inline SolveResult newton_oracle(const NetworkModel& model, const ZeroLoadProfile& w_profile, const InjectionSet& inj,
                                 const CVector& v_init, const NewtonOptions& opts = {}) {
    inj.validate(model);
    const Index n = model.phase_count();
    const Index m = model.delta_count();
    if (v_init.size() != n) throw ModelError("initial voltage has wrong length");

    detail::NewtonState x{v_init, CVector::Zero(m)};
    const CVector hv0 = model.connections().apply(x.v);
    for (Index k = 0; k < m; ++k)
        if (std::abs(hv0(k)) > eps_delta) x.c(k) = inj.s_delta(k) / hv0(k);

    CVector f = detail::equations(model, inj, x);
    double fnorm = inf_norm(f);
    std::vector<double> steps;
    for (int it = 0; it <= opts.max_iter; ++it) {
        if (fnorm <= opts.tol) {
            SolveResult out;
            out.v = x.v;
            out.i_delta = x.c.conjugate();
            out.i = model.currents(x.v);
            out.residual_inf = inf_norm(power_flow_residual(model, w_profile, x.v, inj));
            out.iterations = it;
            out.converged = true;
            out.step_norms = std::move(steps);
            return out;
        }
        if (it == opts.max_iter) break;

        Eigen::PartialPivLU<RMatrix> lu(detail::jacobian(model, x));
        const double rc = lu.rcond();
        if (!(rc >= opts.min_rcond))
            throw SingularJacobianError("load-flow Jacobian is singular (rcond = " + std::to_string(rc) + ")");
        const RVector dx = lu.solve(-detail::pack(f, n));
        const CVector dv = unstack_real_imag(dx.head(2 * n));
        const CVector dc = unstack_real_imag(dx.tail(2 * m));

        double t = 1.0;
        detail::NewtonState trial;
        CVector ftrial;
        double tnorm = 0.0;
        for (;;) {
            trial = {x.v + t * dv, x.c + t * dc};
            ftrial = detail::equations(model, inj, trial);
            tnorm = inf_norm(ftrial);
            if ((std::isfinite(tnorm) && tnorm < fnorm) || t < 1.0 / 1024.0) break;
            t *= 0.5;
        }
        if (!std::isfinite(tnorm)) break;
        steps.push_back(t * inf_norm(dv));
        if (tnorm >= fnorm && steps.back() <= 1e-15 * (1.0 + inf_norm(x.v))) break;
        x = std::move(trial);
        f = std::move(ftrial);
        fnorm = tnorm;
    }
    throw NonConvergenceError("Newton iteration did not converge (residual " + std::to_string(fnorm) + ")", x.v,
                              steps);
}

} // namespace mplf::oracle
