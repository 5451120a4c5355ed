#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mplf {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/********************************************************************************
 * Error hierarchy. Everything thrown by the library derives from mplf::Error.
 *******************************************************************************/

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or physically inconsistent network description.
class ModelError : public Error {
public:
    using Error::Error;
};

/// The load-to-load admittance block cannot be factorized.
class SingularModelError : public ModelError {
public:
    using ModelError::ModelError;
};

/// Zero entry in |w| or L|w|; the normalized quantities are undefined.
class DegenerateProfileError : public ModelError {
public:
    using ModelError::ModelError;
};

/// A phase voltage or phase-to-phase voltage collapsed while it carries load.
class DegenerateVoltageError : public Error {
public:
    using Error::Error;
};

class InvalidBaseError : public Error {
public:
    using Error::Error;
};

class SingularJacobianError : public Error {
public:
    using Error::Error;
};

class SingularSensitivityError : public Error {
public:
    using Error::Error;
};

class CertificateRequiredError : public Error {
public:
    using Error::Error;
};

/// Input file problems; the message carries the offending field path.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Iteration budget exhausted. Carries the last iterate and step history.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, CVector last_iterate, std::vector<double> step_norms)
        : Error(what), last_iterate_(std::move(last_iterate)), step_norms_(std::move(step_norms)) {}

    const CVector& last_iterate() const noexcept { return last_iterate_; }
    const std::vector<double>& step_norms() const noexcept { return step_norms_; }

private:
    CVector last_iterate_;
    std::vector<double> step_norms_;
};

/********************************************************************************
 * Small numeric helpers shared by the modules.
 *******************************************************************************/

inline double inf_norm(const CVector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

inline double inf_norm(const RVector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

/// Induced infinity norm: maximum absolute row sum.
template <typename Derived>
double induced_inf_norm(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Real form of the R-linear map dz -> A dz + B conj(dz), acting on [Re dz; Im dz].
inline RMatrix realify(const CMatrix& a, const CMatrix& b) {
    const Index r = a.rows();
    const Index c = a.cols();
    RMatrix out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = a.real() + b.real();
    out.topRightCorner(r, c) = b.imag() - a.imag();
    out.bottomLeftCorner(r, c) = a.imag() + b.imag();
    out.bottomRightCorner(r, c) = a.real() - b.real();
    return out;
}

inline RVector stack_real_imag(const CVector& z) {
    RVector out(2 * z.size());
    out << z.real(), z.imag();
    return out;
}

inline CVector unstack_real_imag(const RVector& x) {
    const Index n = x.size() / 2;
    CVector z(n);
    for (Index i = 0; i < n; ++i) z(i) = Complex(x(i), x(n + i));
    return z;
}

} // namespace mplf
