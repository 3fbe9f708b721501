/// @file  prox.hpp
/// @brief Proximal operators, PSD projection and the conjugate-gradient
///        solve behind the ADMM Gram-matrix update.

#pragma once

#include <ordmargin/core.hpp>
#include <ordmargin/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace ordmargin {

/// Soft threshold sign(u) * max(|u| - tau, 0).
inline double shrink(double u, double tau) {
    const double mag = std::abs(u) - tau;
    if (mag <= 0.0)
        return 0.0;
    return u > 0.0 ? mag : -mag;
}

template <typename Derived>
Eigen::MatrixXd shrink(const Eigen::MatrixBase<Derived>& m, double tau) {
    return m.unaryExpr([tau](double u) { return shrink(u, tau); });
}

/// Minimiser over e of (weight/mu) * max(y*e, 0) + 0.5 * (e - s)^2.
inline double hingeProx(double s, int y, double weight, double mu) {
    const double tau = weight / mu;
    const double ys = static_cast<double>(y) * s;
    if (ys > tau)
        return s - static_cast<double>(y) * tau;
    if (ys >= 0.0)
        return 0.0;
    return s;
}

/// Symmetric part (M + M^T) / 2.
template <typename Derived>
Eigen::MatrixXd symmetricPart(const Eigen::MatrixBase<Derived>& m) {
    return 0.5 * (m + m.transpose());
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(const Eigen::MatrixXd& sym,
                                                            const char* where) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw SolverError(std::string("eigendecomposition failed in ") + where);
    return eig;
}

} // namespace detail

/// Singular value thresholding of the symmetrised argument. For a symmetric
/// matrix the singular values are |eigenvalues|, so each eigenvalue becomes
/// sign(l) * max(|l| - tau, 0). If `nuclearNorm` is given it receives the
/// nuclear norm of the result.
inline Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau, double* nuclearNorm = nullptr) {
    if (tau < 0.0)
        throw ConfigError("svt threshold must be non-negative");
    const Eigen::MatrixXd sym = symmetricPart(m);
    if (tau == 0.0) {
        if (nuclearNorm) {
            auto eig = detail::eigen(sym, "svt");
            *nuclearNorm = eig.eigenvalues().cwiseAbs().sum();
        }
        return sym;
    }
    auto eig = detail::eigen(sym, "svt");
    Eigen::VectorXd lambda = eig.eigenvalues().unaryExpr([tau](double l) { return shrink(l, tau); });
    if (nuclearNorm)
        *nuclearNorm = lambda.cwiseAbs().sum();
    const auto& V = eig.eigenvectors();
    return V * lambda.asDiagonal() * V.transpose();
}

/// Nearest symmetric positive semidefinite matrix in Frobenius norm:
/// clamp the negative eigenvalues of the symmetric part to zero.
inline Eigen::MatrixXd nearestPsd(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols())
        throw DataError("nearestPsd needs a square matrix");
    const Eigen::MatrixXd sym = symmetricPart(a);
    auto eig = detail::eigen(sym, "nearestPsd");
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const auto& V = eig.eigenvectors();
    Eigen::MatrixXd out = V * lambda.asDiagonal() * V.transpose();
    return symmetricPart(out);
}

/// True if every eigenvalue of the symmetric part is >= -relTol * max(|eig|).
inline bool isPsd(const Eigen::MatrixXd& g, double relTol = 1e-8) {
    auto eig = detail::eigen(symmetricPart(g), "isPsd");
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    return eig.eigenvalues().minCoeff() >= -relTol * std::max(scale, 1e-300);
}

struct CgSettings {
    double relativeTolerance = 1e-8;
    int maxIterations = 0; ///< 0 selects 10 * n^2
    bool warmStart = true;

    void validate() const {
        if (!(relativeTolerance > 0.0))
            throw ConfigError("CG tolerance must be positive");
        if (maxIterations < 0)
            throw ConfigError("CG iteration cap must be positive");
    }
};

struct CgResult {
    Eigen::VectorXd x; ///< vec(G), column-major, length n^2
    int iterations = 0;
    double relativeResidual = 0.0;

    /// x reshaped to n x n and symmetrised.
    Eigen::MatrixXd matrix(int n) const {
        return symmetricPart(Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n));
    }
};

/// y = 2 (K^T K + I) v, with K applied implicitly through its sparse rows.
inline void gSystemApply(const DesignOperator& op, const Eigen::VectorXd& v,
                         Eigen::VectorXd& scratch, Eigen::VectorXd& y) {
    scratch.resize(op.rows());
    op.apply(v.data(), scratch.data());
    y = v;
    op.applyTransposeAdd(scratch.data(), y.data());
    y *= 2.0;
}

/// Solves 2 (K^T K + I) vec(G) = w by conjugate gradients.
/// Throws SolverError when the relative residual does not reach the tolerance
/// within the iteration cap.
inline CgResult solveGSystem(const DesignOperator& op, const Eigen::VectorXd& w,
                             const CgSettings& settings,
                             const std::optional<Eigen::VectorXd>& warmStart = std::nullopt) {
    settings.validate();
    const Index dim = op.cols();
    if (w.size() != dim)
        throw DataError("G-system right-hand side must have length n^2");

    CgResult res;
    const double wnorm = w.norm();
    if (wnorm == 0.0) {
        res.x = Eigen::VectorXd::Zero(dim);
        return res;
    }
    const int cap = settings.maxIterations > 0 ? settings.maxIterations
                                               : static_cast<int>(std::min<Index>(10 * dim, 1 << 30));

    Eigen::VectorXd scratch, ap;
    if (settings.warmStart && warmStart && warmStart->size() == dim) {
        res.x = *warmStart;
        gSystemApply(op, res.x, scratch, ap);
    } else {
        res.x = Eigen::VectorXd::Zero(dim);
        ap = Eigen::VectorXd::Zero(dim);
    }
    Eigen::VectorXd r = w - ap;
    double rr = r.squaredNorm();
    const double target = settings.relativeTolerance * wnorm;
    if (std::sqrt(rr) <= target) {
        res.relativeResidual = std::sqrt(rr) / wnorm;
        return res;
    }
    Eigen::VectorXd p = r;
    for (int it = 1; it <= cap; ++it) {
        gSystemApply(op, p, scratch, ap);
        const double alpha = rr / p.dot(ap);
        res.x.noalias() += alpha * p;
        r.noalias() -= alpha * ap;
        const double rrNew = r.squaredNorm();
        res.iterations = it;
        if (std::sqrt(rrNew) <= target) {
            res.relativeResidual = std::sqrt(rrNew) / wnorm;
            return res;
        }
        p = r + (rrNew / rr) * p;
        rr = rrNew;
    }
    res.relativeResidual = std::sqrt(rr) / wnorm;
    throw SolverError("conjugate gradient did not converge in " + std::to_string(cap) +
                      " iterations (relative residual " +
                      std::to_string(res.relativeResidual) + ")");
}

} // namespace ordmargin
