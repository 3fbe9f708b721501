/// @file  dmoe.hpp
/// @brief Distributional-margin ordinal embedding: an ADMM solver that pins
///        the margin mean at gamma0 and penalises deviations on both sides,
///        with a nuclear-norm surrogate for the rank constraint.
///
/// The split problem, over G, G1, G2, e1, e2, is
///
///     min  sum (y . e1)_+  +  nu * sum (y . e2)_+  +  lambda * ||G1||_*
///     s.t. G = G1,  G = G2,  G2 PSD,  e1 = eQ,  e2 = -eQ
///
/// where eQ[q] = y_q * gamma0 - <Kt_q, G> and Kt_q = -K_q is the operator
/// oriented so that satisfied constraints give a positive value. Substituting
/// the constraints gives the per-constraint loss
/// max(gamma0 - m, 0) + nu * max(m - gamma0, 0) on the margin m.

#pragma once

#include <ordmargin/core.hpp>
#include <ordmargin/errors.hpp>
#include <ordmargin/prox.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace ordmargin {

struct DmoeConfig {
    double gamma0 = 1.0;  ///< target margin mean
    double nu = 1.0;      ///< weight of margins above gamma0
    double lambda = 0.01; ///< nuclear-norm weight
    double mu0 = 1.0;
    double rho = 1.05;
    double muMax = 1e8;
    double objectiveTolerance = 1e-3;
    double residualTolerance = 1e-3;
    int maxOuterIterations = 500;
    int targetRank = 0; ///< used only when factoring the result; 0 = unspecified
    CgSettings cg;

    void validate() const {
        if (!(gamma0 > 0.0))
            throw ConfigError("dmoe.gamma0 must be positive");
        if (!(nu >= 0.0))
            throw ConfigError("dmoe.nu must be non-negative");
        if (!(lambda >= 0.0))
            throw ConfigError("dmoe.lambda must be non-negative");
        if (!(mu0 > 0.0))
            throw ConfigError("dmoe.mu0 must be positive");
        if (!(rho > 1.0))
            throw ConfigError("dmoe.rho must exceed 1");
        if (!(muMax >= mu0))
            throw ConfigError("dmoe.mu_max must be at least mu0");
        if (!(objectiveTolerance > 0.0) || !(residualTolerance > 0.0))
            throw ConfigError("dmoe tolerances must be positive");
        if (maxOuterIterations < 1)
            throw ConfigError("dmoe.max_iterations must be at least 1");
        cg.validate();
    }
};

/// Primal feasibility gaps of the four splitting constraints.
struct PrimalResiduals {
    double e1 = 0.0; ///< ||e1 - eQ||
    double e2 = 0.0; ///< ||e2 + eQ||
    double g1 = 0.0; ///< ||G - G1||_F
    double g2 = 0.0; ///< ||G - G2||_F

    double max() const { return std::max({e1, e2, g1, g2}); }
};

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    PrimalResiduals residuals;
    double mu = 0.0;
    int cgIterations = 0;
};

struct SolverState {
    Eigen::MatrixXd G, G1, G2;
    Eigen::VectorXd e1, e2;
    Eigen::VectorXd z1, z2;
    Eigen::MatrixXd Z3, Z4;
    Eigen::VectorXd eQ; ///< consistent with G
    double mu = 1.0;
    int iteration = 0;
    double g1NuclearNorm = 0.0;
    std::vector<double> objectiveHistory;
    PrimalResiduals residuals;
    std::optional<Eigen::VectorXd> cgWarmStart;
    int lastCgIterations = 0;
};

/// The comparison data in the form the sub-problems consume.
struct DmoeProblem {
    int n = 0;
    DesignOperator op;
    Eigen::VectorXd y;

    explicit DmoeProblem(const ComparisonSet& set) : n(set.items()), op(set) {
        y.resize(static_cast<Index>(set.size()));
        for (std::size_t q = 0; q < set.size(); ++q)
            y[static_cast<Index>(q)] = set.label(q);
    }

    Index constraints() const { return y.size(); }
};

/// eQ = y * gamma0 - Kt vec(G), i.e. y[q] * eQ[q] = gamma0 - margin[q].
inline Eigen::VectorXd computeEQ(const DmoeProblem& prob, const Eigen::MatrixXd& G, double gamma0) {
    Eigen::VectorXd eq = prob.op.apply(G); // <K_q, G> = -<Kt_q, G>
    eq += gamma0 * prob.y;
    return eq;
}

inline Eigen::VectorXd computeEQ(const ComparisonSet& set, const Eigen::MatrixXd& G, double gamma0) {
    return computeEQ(DmoeProblem(set), G, gamma0);
}

/// Constraint-substituted objective: sum of the two-sided hinge plus
/// lambda times the given nuclear norm.
inline double dmoeObjective(const DmoeProblem& prob, const Eigen::VectorXd& eQ,
                            double g1NuclearNorm, const DmoeConfig& cfg) {
    double below = 0.0, above = 0.0;
    for (Index q = 0; q < eQ.size(); ++q) {
        const double t = prob.y[q] * eQ[q]; // gamma0 - margin
        if (t > 0.0)
            below += t;
        else
            above -= t;
    }
    return below + cfg.nu * above + cfg.lambda * g1NuclearNorm;
}

/// Value of the augmented Lagrangian at the current state.
inline double augmentedLagrangian(const DmoeProblem& prob, const SolverState& s,
                                  const DmoeConfig& cfg) {
    const Eigen::VectorXd eQ = computeEQ(prob, s.G, cfg.gamma0);
    const double mu = s.mu;
    auto phiVec = [mu](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
        return 0.5 * mu * v.squaredNorm() + u.dot(v);
    };
    auto phiMat = [mu](const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
        return 0.5 * mu * v.squaredNorm() + (u.array() * v.array()).sum();
    };
    double hinge1 = 0.0, hinge2 = 0.0;
    for (Index q = 0; q < prob.constraints(); ++q) {
        hinge1 += std::max(prob.y[q] * s.e1[q], 0.0);
        hinge2 += std::max(prob.y[q] * s.e2[q], 0.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetricPart(s.G1),
                                                        Eigen::EigenvaluesOnly);
    const double nuclear = eig.eigenvalues().cwiseAbs().sum();
    return hinge1 + cfg.nu * hinge2 + cfg.lambda * nuclear + phiVec(s.z1, s.e1 - eQ) +
           phiVec(s.z2, s.e2 + eQ) + phiMat(s.Z3, s.G - s.G1) + phiMat(s.Z4, s.G - s.G2);
}

/// Zero iterate: G = G1 = G2 = 0, multipliers 0, e1 = eQ, e2 = -eQ.
inline SolverState initialState(const DmoeProblem& prob, const DmoeConfig& cfg) {
    SolverState s;
    const Index n = prob.n;
    const Index m = prob.constraints();
    s.G = Eigen::MatrixXd::Zero(n, n);
    s.G1 = s.G;
    s.G2 = s.G;
    s.Z3 = s.G;
    s.Z4 = s.G;
    s.z1 = Eigen::VectorXd::Zero(m);
    s.z2 = Eigen::VectorXd::Zero(m);
    s.eQ = computeEQ(prob, s.G, cfg.gamma0);
    s.e1 = s.eQ;
    s.e2 = -s.eQ;
    s.mu = cfg.mu0;
    return s;
}

/// e1 = argmin (1/mu) sum (y . e1)_+ + 1/2 ||e1 - (eQ - z1/mu)||^2.
inline Eigen::VectorXd updateE1(const SolverState& s, const DmoeProblem& prob, const DmoeConfig&) {
    Eigen::VectorXd out(prob.constraints());
    for (Index q = 0; q < out.size(); ++q) {
        const double sq = s.eQ[q] - s.z1[q] / s.mu;
        out[q] = hingeProx(sq, static_cast<int>(prob.y[q]), 1.0, s.mu);
    }
    return out;
}

/// e2 = argmin (nu/mu) sum (y . e2)_+ + 1/2 ||e2 - (-eQ - z2/mu)||^2.
inline Eigen::VectorXd updateE2(const SolverState& s, const DmoeProblem& prob, const DmoeConfig& cfg) {
    Eigen::VectorXd out(prob.constraints());
    for (Index q = 0; q < out.size(); ++q) {
        const double sq = -s.eQ[q] - s.z2[q] / s.mu;
        out[q] = hingeProx(sq, static_cast<int>(prob.y[q]), cfg.nu, s.mu);
    }
    return out;
}

/// Right-hand side w of 2 (Kt^T Kt + I) vec(G) = w, from the stationarity
/// of the augmented Lagrangian in G.
inline Eigen::VectorXd gSystemRhs(const SolverState& s, const DmoeProblem& prob,
                                  const DmoeConfig& cfg) {
    const double inv = 1.0 / s.mu;
    const Eigen::VectorXd v =
        2.0 * cfg.gamma0 * prob.y - s.e1 - inv * s.z1 + s.e2 + inv * s.z2;
    Eigen::MatrixXd w = s.G1 - inv * s.Z3 + s.G2 - inv * s.Z4;
    // Kt^T v = -K^T v
    Eigen::VectorXd negV = -v;
    prob.op.applyTransposeAdd(negV.data(), w.data());
    return Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
}

/// Exact minimiser of the augmented Lagrangian over G. On a CG failure the
/// tolerance is loosened 100x once before the error propagates.
inline Eigen::MatrixXd updateG(SolverState& s, const DmoeProblem& prob, const DmoeConfig& cfg) {
    const Eigen::VectorXd w = gSystemRhs(s, prob, cfg);
    CgResult res;
    try {
        res = solveGSystem(prob.op, w, cfg.cg, s.cgWarmStart);
    } catch (const SolverError&) {
        CgSettings loose = cfg.cg;
        loose.relativeTolerance *= 100.0;
        res = solveGSystem(prob.op, w, loose, s.cgWarmStart);
    }
    s.lastCgIterations = res.iterations;
    s.cgWarmStart = res.x;
    return res.matrix(prob.n);
}

/// G1 = svt(G + Z3/mu, lambda/mu).
inline Eigen::MatrixXd updateG1(SolverState& s, const DmoeConfig& cfg) {
    return svt(s.G + s.Z3 / s.mu, cfg.lambda / s.mu, &s.g1NuclearNorm);
}

/// G2 = nearestPsd(G + Z4/mu).
inline Eigen::MatrixXd updateG2(const SolverState& s, const DmoeConfig&) {
    return nearestPsd(s.G + s.Z4 / s.mu);
}

/// Recomputes eQ from the current G, then takes the dual ascent step and
/// grows mu (capped at muMax).
inline void updateMultipliers(SolverState& s, const DmoeProblem& prob, const DmoeConfig& cfg) {
    s.eQ = computeEQ(prob, s.G, cfg.gamma0);
    const Eigen::VectorXd r1 = s.e1 - s.eQ;
    const Eigen::VectorXd r2 = s.e2 + s.eQ;
    const Eigen::MatrixXd r3 = s.G - s.G1;
    const Eigen::MatrixXd r4 = s.G - s.G2;
    s.z1 += s.mu * r1;
    s.z2 += s.mu * r2;
    s.Z3 += s.mu * r3;
    s.Z4 += s.mu * r4;
    s.residuals = {r1.norm(), r2.norm(), r3.norm(), r4.norm()};
    s.mu = std::min(cfg.rho * s.mu, cfg.muMax);
}

struct DmoeResult {
    GramMatrix G; ///< nearestPsd of the consensus iterate
    SolverState state;
    std::vector<IterationRecord> log;
    bool converged = false;
    int iterations = 0;
};

/// Stepwise driver; keeps the iteration log available if a step throws.
class DmoeSolver {
public:
    DmoeSolver(const ComparisonSet& set, DmoeConfig cfg) : cfg_(cfg), prob_(set) {
        cfg_.validate();
        if (set.empty())
            throw DataError("DMOE needs at least one constraint");
        state_ = initialState(prob_, cfg_);
    }

    /// One pass of: e1, e2 -> G -> G1, G2 -> eQ, multipliers, mu.
    void step() {
        auto& s = state_;
        s.e1 = updateE1(s, prob_, cfg_);
        s.e2 = updateE2(s, prob_, cfg_);
        s.G = updateG(s, prob_, cfg_);
        s.G1 = updateG1(s, cfg_);
        s.G2 = updateG2(s, cfg_);
        const double mu = s.mu;
        updateMultipliers(s, prob_, cfg_);
        s.iteration += 1;
        const double obj = dmoeObjective(prob_, s.eQ, s.g1NuclearNorm, cfg_);
        s.objectiveHistory.push_back(obj);
        log_.push_back({s.iteration, obj, s.residuals, mu, s.lastCgIterations});
    }

    /// Objective change below tolerance and every primal residual below
    /// residualTolerance.
    bool converged() const {
        const auto& h = state_.objectiveHistory;
        if (h.size() < 2)
            return false;
        const double change = std::abs(h[h.size() - 1] - h[h.size() - 2]);
        return change < cfg_.objectiveTolerance &&
               state_.residuals.max() <= cfg_.residualTolerance;
    }

    DmoeResult run() {
        while (state_.iteration < cfg_.maxOuterIterations) {
            step();
            if (converged())
                break;
        }
        return result();
    }

    DmoeResult result() const {
        DmoeResult r;
        r.G = nearestPsd(state_.G);
        r.state = state_;
        r.log = log_;
        r.converged = converged();
        r.iterations = state_.iteration;
        return r;
    }

    const SolverState& state() const { return state_; }
    SolverState& state() { return state_; }
    const std::vector<IterationRecord>& log() const { return log_; }
    const DmoeProblem& problem() const { return prob_; }
    const DmoeConfig& config() const { return cfg_; }

private:
    DmoeConfig cfg_;
    DmoeProblem prob_;
    SolverState state_;
    std::vector<IterationRecord> log_;
};

inline DmoeResult solveDmoe(const ComparisonSet& set, const DmoeConfig& cfg) {
    DmoeSolver solver(set, cfg);
    return solver.run();
}

} // namespace ordmargin
