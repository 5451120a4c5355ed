#pragma once

// Normalized loading norms, voltage-margin quantities and the two families of
// existence / uniqueness / convergence conditions for the fixed-point iteration.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mplf/powerflow.hpp"

namespace mplf {

struct XiQuantities {
    double xi_wye = 0.0;
    double xi_delta = 0.0;
    double xi_total = 0.0;
};

struct GammaQuantities {
    double alpha = 0.0;
    /// +infinity when the network has no delta connections.
    double beta = std::numeric_limits<double>::infinity();
    double gamma = 0.0;
    bool has_beta() const { return std::isfinite(beta); }
};

/// Entrywise weights turning the xi norms into weighted sums of |s|:
/// wye(i,j) = |Z_ij| / (|w_i| |w_j|), delta(i,k) = |(Z H^T)_ik| / (|w_i| (L|w|)_k), Z = YLL^{-1}.
struct XiWeights {
    RMatrix wye;
    RMatrix delta;
};

inline XiWeights xi_weights(const NetworkModel& model, const ZeroLoadProfile& w_profile) {
    const Index n = model.phase_count();
    const Index m = model.delta_count();
    const CMatrix& z = model.yll_inverse();
    const RVector inv_w = w_profile.w_abs.cwiseInverse();
    XiWeights out;
    out.wye = inv_w.asDiagonal() * z.cwiseAbs() * inv_w.asDiagonal();
    out.delta = RMatrix::Zero(n, m);
    const ConnectionMatrix& h = model.connections();
    for (Index k = 0; k < m; ++k) {
        const CVector col = z.col(h.rows[k].first) - z.col(h.rows[k].second);
        out.delta.col(k) = col.cwiseAbs().cwiseProduct(inv_w) / w_profile.Lw(k);
    }
    return out;
}

inline XiQuantities xi_norms(const XiWeights& weights, const InjectionSet& inj) {
    XiQuantities out;
    if (weights.wye.rows() > 0) out.xi_wye = (weights.wye * inj.s_wye.cwiseAbs()).maxCoeff();
    if (weights.delta.rows() > 0 && weights.delta.cols() > 0)
        out.xi_delta = (weights.delta * inj.s_delta.cwiseAbs()).maxCoeff();
    out.xi_total = out.xi_wye + out.xi_delta;
    return out;
}

inline XiQuantities xi_norms(const NetworkModel& model, const ZeroLoadProfile& w_profile, const InjectionSet& inj) {
    inj.validate(model);
    return xi_norms(xi_weights(model, w_profile), inj);
}

inline GammaQuantities gamma_quantities(const NetworkModel& model, const ZeroLoadProfile& w_profile, const CVector& v) {
    if (v.size() != model.phase_count()) throw ModelError("voltage vector has wrong length");
    GammaQuantities out;
    out.alpha = (v.cwiseAbs().array() / w_profile.w_abs.array()).minCoeff();
    if (model.delta_count() > 0) {
        for (Index k = 0; k < w_profile.Lw.size(); ++k)
            if (!(w_profile.Lw(k) > 0.0)) throw DegenerateProfileError("L|w| vanishes at delta connection " + std::to_string(k));
        const CVector hv = model.connections().apply(v);
        out.beta = (hv.cwiseAbs().array() / w_profile.Lw.array()).minCoeff();
    }
    out.gamma = std::min(out.alpha, out.beta);
    return out;
}

/********************************************************************************
 * Certificates
 *******************************************************************************/

enum class CertificateKind {
    /// Grid scan over rho for the general self-mapping and contraction conditions.
    radius_scan,
    /// Closed-form conditions with explicit radii rho_ddagger / rho_dagger.
    closed_form,
};

inline std::string to_string(CertificateKind k) { return k == CertificateKind::radius_scan ? "radius_scan" : "closed_form"; }

/// A solved pair (v_hat, s_hat) around which conditions are evaluated.
struct BasePoint {
    CVector v_hat;
    InjectionSet s_hat;

    static BasePoint zero_load(const NetworkModel& model, const ZeroLoadProfile& w_profile) {
        return {w_profile.w, InjectionSet::zero(model)};
    }
};

struct ConditionCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

struct Certificate {
    CertificateKind kind = CertificateKind::closed_form;
    bool satisfied = false;
    /// Scan: smallest passing rho. Closed form: rho_ddagger (0 when undefined).
    double rho_used = 0.0;
    /// Closed form only: containment radius of the solution around v_hat.
    std::optional<double> rho_dagger;
    /// Scan only: largest passing grid rho, the widest certified uniqueness ball.
    std::optional<double> rho_max;
    /// Contraction coefficient bound at rho_dagger (closed form) or rho_used (scan).
    std::optional<double> q;
    BasePoint base;
    XiQuantities xi_base;
    XiQuantities xi_difference;
    XiQuantities xi_target;
    GammaQuantities margins;
    std::vector<ConditionCheck> conditions;
    int scan_points = 0;

    /// Membership in D_rho(v_hat) = { v : |v_j - v_hat_j| <= rho |w_j| }.
    bool ball_contains(const CVector& v, const RVector& w_abs, double rho, double slack = 0.0) const {
        for (Index j = 0; j < v.size(); ++j)
            if (std::abs(v(j) - base.v_hat(j)) > rho * w_abs(j) + slack) return false;
        return true;
    }
};

inline constexpr double base_residual_tolerance = 1e-8;

/// Rejects bases that are not load-flow solutions; (w, 0) is accepted without a residual check.
inline void validate_base(const NetworkModel& model, const ZeroLoadProfile& w_profile, const BasePoint& base,
                          double tol = base_residual_tolerance) {
    if (base.v_hat.size() != model.phase_count()) throw InvalidBaseError("base voltage has wrong length");
    try {
        base.s_hat.validate(model);
    } catch (const ModelError& e) {
        throw InvalidBaseError(std::string("base injections: ") + e.what());
    }
    if (base.s_hat.is_zero() && base.v_hat == w_profile.w) return;
    double residual = 0.0;
    try {
        residual = inf_norm(power_flow_residual(model, w_profile, base.v_hat, base.s_hat));
    } catch (const DegenerateVoltageError& e) {
        throw InvalidBaseError(std::string("base is degenerate: ") + e.what());
    }
    if (!(residual <= tol))
        throw InvalidBaseError("base pair is not a load-flow solution (residual " + std::to_string(residual) + ")");
}

namespace detail {

struct RadiusTerms {
    XiQuantities base, diff, target;
    GammaQuantities g;
    bool delta;
};

inline double self_map_lhs(const RadiusTerms& t, double rho) {
    double lhs = (t.diff.xi_wye + t.base.xi_wye * rho / t.g.alpha) / (t.g.alpha - rho);
    if (t.delta) lhs += (t.diff.xi_delta + t.base.xi_delta * rho / t.g.beta) / (t.g.beta - rho);
    return lhs;
}

inline double contraction_lhs(const RadiusTerms& t, double rho) {
    double lhs = t.target.xi_wye / ((t.g.alpha - rho) * (t.g.alpha - rho));
    if (t.delta) lhs += t.target.xi_delta / ((t.g.beta - rho) * (t.g.beta - rho));
    return lhs;
}

inline Certificate prepare(const NetworkModel& model, const ZeroLoadProfile& w_profile, const XiWeights& weights,
                           const BasePoint& base, const InjectionSet& target, RadiusTerms& terms) {
    validate_base(model, w_profile, base);
    target.validate(model);
    Certificate cert;
    cert.base = base;
    cert.xi_base = xi_norms(weights, base.s_hat);
    cert.xi_difference = xi_norms(weights, target - base.s_hat);
    cert.xi_target = xi_norms(weights, target);
    cert.margins = gamma_quantities(model, w_profile, base.v_hat);
    terms = {cert.xi_base, cert.xi_difference, cert.xi_target, cert.margins, model.delta_count() > 0};
    return cert;
}

} // namespace detail

/// Evaluates the self-mapping and contraction conditions at a single radius.
inline std::pair<ConditionCheck, ConditionCheck> radius_conditions(const Certificate& c, double rho, bool has_delta) {
    const detail::RadiusTerms t{c.xi_base, c.xi_difference, c.xi_target, c.margins, has_delta};
    ConditionCheck self{"self_mapping", detail::self_map_lhs(t, rho), rho, false};
    self.passed = self.lhs <= self.rhs;
    ConditionCheck contraction{"contraction", detail::contraction_lhs(t, rho), 1.0, false};
    contraction.passed = contraction.lhs < contraction.rhs;
    return {self, contraction};
}

/// Closed-form test: xi(s_hat) < gamma^2 and xi(s - s_hat) < ((gamma^2 - xi(s_hat)) / (2 gamma))^2.
inline Certificate certify_closed_form(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                       const XiWeights& weights, const BasePoint& base, const InjectionSet& target) {
    detail::RadiusTerms terms;
    Certificate cert = detail::prepare(model, w_profile, weights, base, target, terms);
    cert.kind = CertificateKind::closed_form;
    const double g = cert.margins.gamma;
    const double xb = cert.xi_base.xi_total;
    const double xd = cert.xi_difference.xi_total;

    ConditionCheck c1{"base_loading", xb, g * g, xb < g * g && g > 0.0};
    const double half_gap = g > 0.0 ? 0.5 * (g * g - xb) / g : 0.0;
    ConditionCheck c2{"target_distance", xd, half_gap * half_gap, c1.passed && xd < half_gap * half_gap};
    cert.conditions = {c1, c2};
    cert.satisfied = c1.passed && c2.passed;
    if (c1.passed) cert.rho_used = half_gap;
    if (cert.satisfied) {
        // rho_ddagger - sqrt(rho_ddagger^2 - xd), written without cancellation.
        const double rd = xd / (half_gap + std::sqrt(half_gap * half_gap - xd));
        cert.rho_dagger = rd;
        cert.q = detail::contraction_lhs(terms, rd);
    }
    return cert;
}

inline Certificate certify_closed_form(const NetworkModel& model, const ZeroLoadProfile& w_profile,
                                       const BasePoint& base, const InjectionSet& target) {
    return certify_closed_form(model, w_profile, xi_weights(model, w_profile), base, target);
}

inline constexpr int default_scan_points = 10000;

/// Scans rho_i = gamma * i / (scan_points + 1) for a radius meeting both general conditions.
inline Certificate certify_scan(const NetworkModel& model, const ZeroLoadProfile& w_profile, const XiWeights& weights,
                                const BasePoint& base, const InjectionSet& target,
                                int scan_points = default_scan_points) {
    if (scan_points <= 0) throw ModelError("scan_points must be positive");
    detail::RadiusTerms terms;
    Certificate cert = detail::prepare(model, w_profile, weights, base, target, terms);
    cert.kind = CertificateKind::radius_scan;
    cert.scan_points = scan_points;
    const double g = cert.margins.gamma;

    std::optional<double> first, last;
    if (g > 0.0 && std::isfinite(g)) {
        for (int i = 1; i <= scan_points; ++i) {
            const double rho = g * static_cast<double>(i) / static_cast<double>(scan_points + 1);
            if (detail::self_map_lhs(terms, rho) <= rho && detail::contraction_lhs(terms, rho) < 1.0) {
                if (!first) first = rho;
                last = rho;
            }
        }
    }
    // Diagnostics at the passing radius, or at the radius that comes closest to self-mapping.
    double report = 0.0;
    if (first) {
        report = *first;
    } else if (g > 0.0 && std::isfinite(g)) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= scan_points; ++i) {
            const double rho = g * static_cast<double>(i) / static_cast<double>(scan_points + 1);
            const double gap = detail::self_map_lhs(terms, rho) - rho;
            if (gap < best) {
                best = gap;
                report = rho;
            }
        }
    }
    auto [self, contraction] = radius_conditions(cert, report, terms.delta);
    cert.conditions = {self, contraction};
    cert.satisfied = first.has_value();
    cert.rho_used = report;
    if (first) {
        cert.rho_max = last;
        cert.q = contraction.lhs;
    }
    return cert;
}

inline Certificate certify_scan(const NetworkModel& model, const ZeroLoadProfile& w_profile, const BasePoint& base,
                                const InjectionSet& target, int scan_points = default_scan_points) {
    return certify_scan(model, w_profile, xi_weights(model, w_profile), base, target, scan_points);
}

inline Certificate certify(CertificateKind kind, const NetworkModel& model, const ZeroLoadProfile& w_profile,
                           const XiWeights& weights, const BasePoint& base, const InjectionSet& target,
                           int scan_points = default_scan_points) {
    return kind == CertificateKind::radius_scan ? certify_scan(model, w_profile, weights, base, target, scan_points)
                                                : certify_closed_form(model, w_profile, weights, base, target);
}

inline Certificate certify(CertificateKind kind, const NetworkModel& model, const ZeroLoadProfile& w_profile,
                           const BasePoint& base, const InjectionSet& target, int scan_points = default_scan_points) {
    return certify(kind, model, w_profile, xi_weights(model, w_profile), base, target, scan_points);
}

} // namespace mplf
