/// @file  baselines.hpp
/// @brief GNMDS-p, STE-p and TSTE-p: projected gradient descent on a Gram
///        matrix with backtracking line search and a rank-p PSD projection
///        after every step.

#pragma once

#include <ordmargin/core.hpp>
#include <ordmargin/errors.hpp>
#include <ordmargin/prox.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ordmargin {

enum class BaselineMethod { Gnmds, Ste, Tste };

inline std::string_view methodName(BaselineMethod m) {
    switch (m) {
    case BaselineMethod::Gnmds:
        return "gnmds";
    case BaselineMethod::Ste:
        return "ste";
    case BaselineMethod::Tste:
        return "tste";
    }
    return "unknown";
}

inline BaselineMethod parseBaselineMethod(std::string_view name) {
    if (name == "gnmds")
        return BaselineMethod::Gnmds;
    if (name == "ste")
        return BaselineMethod::Ste;
    if (name == "tste")
        return BaselineMethod::Tste;
    throw ConfigError("unknown baseline method '" + std::string(name) + "'");
}

struct LineSearchSettings {
    double shrinkFactor = 0.5;
    double sufficientDecrease = 1e-4;
    double initialStep = 1.0;
    double minStep = 1e-12;
};

struct BaselineConfig {
    BaselineMethod method = BaselineMethod::Gnmds;
    int targetRank = 2;
    double gamma0 = 1.0; ///< GNMDS hinge target
    double alpha = 0.0;  ///< Student-t degrees of freedom; 0 selects p - 1
    int maxIterations = 1000;
    double gradientTolerance = 1e-5;
    LineSearchSettings lineSearch;
    std::uint64_t seed = 0;

    double effectiveAlpha() const { return alpha > 0.0 ? alpha : targetRank - 1.0; }

    void validate() const {
        if (targetRank < 1)
            throw ConfigError("baseline target rank must be at least 1");
        if (method == BaselineMethod::Tste && !(effectiveAlpha() > 0.0))
            throw ConfigError("tste.alpha must be positive (p - 1 is 0 for p = 1)");
        if (method == BaselineMethod::Gnmds && !(gamma0 > 0.0))
            throw ConfigError("gnmds.gamma0 must be positive");
        if (!(lineSearch.shrinkFactor > 0.0 && lineSearch.shrinkFactor < 1.0))
            throw ConfigError("line-search shrink factor must lie in (0, 1)");
        if (!(lineSearch.initialStep > 0.0) || !(lineSearch.sufficientDecrease > 0.0))
            throw ConfigError("line-search constants must be positive");
        if (maxIterations < 1 || !(gradientTolerance > 0.0))
            throw ConfigError("baseline iteration cap and tolerance must be positive");
    }
};

struct LossAndGradient {
    double loss = 0.0;
    Eigen::MatrixXd gradient;
};

namespace detail {

inline double sqDist(const Eigen::MatrixXd& G, int a, int b) {
    return G(a, a) + G(b, b) - G(a, b) - G(b, a);
}

/// grad += w * d(sqDist(a,b))/dG
inline void addDistGrad(Eigen::MatrixXd& grad, int a, int b, double w) {
    grad(a, a) += w;
    grad(b, b) += w;
    grad(a, b) -= w;
    grad(b, a) -= w;
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace detail

/// Mean loss over the constraints and its gradient in G.
///
/// With d_near / d_far the squared distances of the pair the label marks as
/// more / less similar, and margin m = d_far - d_near:
///  - GNMDS: max(gamma0 - m, 0)
///  - STE:   log(1 + exp(-m))
///  - TSTE:  -log(t_near / (t_near + t_far)), t = (1 + d/alpha)^(-(alpha+1)/2)
inline LossAndGradient baselineLoss(BaselineMethod method, const ComparisonSet& set,
                                    const Eigen::MatrixXd& G, double gamma0 = 1.0,
                                    double alpha = 1.0) {
    if (set.empty())
        throw DataError("baseline loss of an empty constraint set");
    if (G.rows() != set.items() || G.cols() != set.items())
        throw DataError("Gram matrix shape does not match item count");
    LossAndGradient out;
    out.gradient = Eigen::MatrixXd::Zero(G.rows(), G.cols());
    const double c = 0.5 * (alpha + 1.0);
    double total = 0.0;
    for (std::size_t q = 0; q < set.size(); ++q) {
        const auto& con = set[q];
        int na = con.i, nb = con.j, fa = con.l, fb = con.k;
        if (set.label(q) < 0) {
            std::swap(na, fa);
            std::swap(nb, fb);
        }
        const double dNear = detail::sqDist(G, na, nb);
        const double dFar = detail::sqDist(G, fa, fb);
        const double m = dFar - dNear;
        double gNear = 0.0, gFar = 0.0; // d loss / d dNear, d loss / d dFar
        switch (method) {
        case BaselineMethod::Gnmds:
            if (gamma0 - m > 0.0) {
                total += gamma0 - m;
                gNear = 1.0;
                gFar = -1.0;
            }
            break;
        case BaselineMethod::Ste: {
            total += detail::softplus(-m);
            const double s = detail::logistic(-m);
            gNear = s;
            gFar = -s;
            break;
        }
        case BaselineMethod::Tste: {
            const double logRatio =
                c * (std::log1p(dNear / alpha) - std::log1p(dFar / alpha)); // log(t_far/t_near)
            total += detail::softplus(logRatio);
            const double share = detail::logistic(logRatio); // t_far / (t_near + t_far)
            gNear = share * c / (alpha + dNear);
            gFar = -share * c / (alpha + dFar);
            break;
        }
        }
        if (gNear != 0.0 || gFar != 0.0) {
            detail::addDistGrad(out.gradient, na, nb, gNear);
            detail::addDistGrad(out.gradient, fa, fb, gFar);
        }
    }
    const double inv = 1.0 / static_cast<double>(set.size());
    out.loss = total * inv;
    out.gradient *= inv;
    return out;
}

inline LossAndGradient baselineLoss(const BaselineConfig& cfg, const ComparisonSet& set,
                                    const Eigen::MatrixXd& G) {
    return baselineLoss(cfg.method, set, G, cfg.gamma0, cfg.effectiveAlpha());
}

/// Keeps the p algebraically largest eigenvalues (clamped at 0) of the
/// symmetric part and zeroes the rest.
inline Eigen::MatrixXd projectRankPsd(const Eigen::MatrixXd& G, int p) {
    if (G.rows() != G.cols())
        throw DataError("projectRankPsd needs a square matrix");
    if (p < 1 || p > G.rows())
        throw ConfigError("projection rank out of range");
    auto eig = detail::eigen(symmetricPart(G), "projectRankPsd");
    const Eigen::VectorXd top = eig.eigenvalues().tail(p).cwiseMax(0.0);
    const Eigen::MatrixXd Vp = eig.eigenvectors().rightCols(p);
    return symmetricPart(Vp * top.asDiagonal() * Vp.transpose());
}

struct BaselineIteration {
    int iteration = 0;
    double loss = 0.0;
    double step = 0.0;
    double projectedGradientNorm = 0.0;
};

struct BaselineResult {
    GramMatrix G;
    std::vector<BaselineIteration> log;
    bool converged = false;
    bool lineSearchFailed = false;
    int iterations = 0;
};

/// Seeded rank-p start: X0 entries N(0,1)/sqrt(n), G0 = X0^T X0.
inline Eigen::MatrixXd randomRankPsd(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(p, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Index c = 0; c < X.cols(); ++c)
        for (Index r = 0; r < X.rows(); ++r)
            X(r, c) = normal(rng) * scale;
    return X.transpose() * X;
}

/// Projected gradient descent. Each iteration backtracks from twice the last
/// accepted step (the configured initial step on the first iteration) until
///     f(G') <= f(G) - (c / t) ||G' - G||_F^2,   G' = P_p(G - t grad),
/// and stops once ||G' - G||_F / t falls below the gradient tolerance.
inline BaselineResult solveBaseline(const ComparisonSet& set, const BaselineConfig& cfg) {
    cfg.validate();
    if (set.empty())
        throw DataError("baseline solver needs at least one constraint");
    if (cfg.targetRank > set.items())
        throw ConfigError("baseline target rank exceeds item count");
    const auto& ls = cfg.lineSearch;

    BaselineResult res;
    Eigen::MatrixXd G = randomRankPsd(set.items(), cfg.targetRank, cfg.seed);
    LossAndGradient cur = baselineLoss(cfg, set, G);
    double step = ls.initialStep;
    for (int it = 1; it <= cfg.maxIterations; ++it) {
        if (cur.gradient.squaredNorm() == 0.0) {
            res.converged = true;
            break;
        }
        double t = (it == 1) ? ls.initialStep : step / ls.shrinkFactor;
        Eigen::MatrixXd cand;
        LossAndGradient next;
        bool accepted = false;
        while (t >= ls.minStep) {
            cand = projectRankPsd(G - t * cur.gradient, cfg.targetRank);
            next = baselineLoss(cfg, set, cand);
            const double moved = (cand - G).squaredNorm();
            if (next.loss <= cur.loss - ls.sufficientDecrease / t * moved) {
                accepted = true;
                break;
            }
            t *= ls.shrinkFactor;
        }
        if (!accepted) {
            // No admissible step: stationary up to round-off, or a genuine failure.
            const Eigen::MatrixXd probe =
                projectRankPsd(G - ls.initialStep * cur.gradient, cfg.targetRank);
            const double pg = (probe - G).norm() / ls.initialStep;
            res.converged = pg <= cfg.gradientTolerance;
            res.lineSearchFailed = !res.converged;
            break;
        }
        const double pgNorm = (cand - G).norm() / t;
        G = std::move(cand);
        cur = std::move(next);
        step = t;
        res.iterations = it;
        res.log.push_back({it, cur.loss, t, pgNorm});
        if (pgNorm <= cfg.gradientTolerance) {
            res.converged = true;
            break;
        }
    }
    res.G = G;
    return res;
}

} // namespace ordmargin
