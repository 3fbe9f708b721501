#include "checks.hpp"
#include "oracles.hpp"

#include <ordmargin/dmoe.hpp>

#include <gtest/gtest.h>

using namespace ordmargin;

namespace {

/// Planted triplets with a share of labels flipped, so some constraints
/// are violated at any embedding.
ComparisonSet noisySet(int n, int count, double flipShare, std::uint64_t seed) {
    auto planted = oracle::plantedTriplets(n, 2, count, seed);
    oracle::Gen gen(seed + 1000);
    std::vector<Triplet> t;
    std::vector<int> y;
    for (std::size_t q = 0; q < planted.set.size(); ++q) {
        t.push_back(planted.set.triplet(q));
        y.push_back(gen.uniform(0, 1) < flipShare ? -1 : 1);
    }
    return ComparisonSet::fromTriplets(n, t, y);
}

/// Bounded penalty and tight tolerances, so runs reach the optimum rather
/// than stalling once mu has grown large.
DmoeConfig tight(DmoeConfig cfg) {
    cfg.muMax = 10.0;
    cfg.objectiveTolerance = 1e-10;
    cfg.residualTolerance = 1e-8;
    cfg.maxOuterIterations = 50000;
    cfg.cg.relativeTolerance = 1e-12;
    return cfg;
}

/// Hinge-only configuration used for planted recovery.
DmoeConfig recoveryConfig() {
    DmoeConfig cfg;
    cfg.nu = 0.0;
    cfg.rho = 1.01;
    cfg.maxOuterIterations = 2000;
    return cfg;
}

} // namespace

TEST(DmoeConfig, Validation) {
    DmoeConfig c;
    EXPECT_NO_THROW(c.validate());
    c.rho = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.gamma0 = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.nu = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.objectiveTolerance = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.maxOuterIterations = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(DmoeSolver(ComparisonSet::fromTriplets(4, {}), DmoeConfig{}), DataError);
}

TEST(ComputeEQ, FixedPointAndZeroGram) {
    // 1-D points 0, 1, sqrt(2): d2(0,1) = 1, d2(0,2) = 2, margin = 1.
    Eigen::RowVector3d x(0.0, 1.0, std::sqrt(2.0));
    const Eigen::MatrixXd G = x.transpose() * x;
    const auto set = ComparisonSet::fromTriplets(3, {{0, 1, 2}});
    EXPECT_NEAR(computeEQ(set, G, 1.0)[0], 0.0, 1e-12);

    const auto noisy = noisySet(6, 40, 0.3, 1);
    const Eigen::VectorXd e0 = computeEQ(noisy, Eigen::MatrixXd::Zero(6, 6), 1.5);
    for (std::size_t q = 0; q < noisy.size(); ++q)
        EXPECT_EQ(e0[static_cast<Index>(q)], 1.5 * noisy.label(q));
}

TEST(ComputeEQ, MatchesMarginIdentity) {
    oracle::Gen gen(2);
    for (int t = 0; t < 20; ++t) {
        const auto set = noisySet(7, 50, 0.4, 10 + t);
        const Eigen::MatrixXd G = gen.psd(7, 3);
        const double g0 = gen.uniform(0.1, 3.0);
        const Eigen::VectorXd e = computeEQ(set, G, g0);
        for (std::size_t q = 0; q < set.size(); ++q) {
            const auto& c = set[q];
            const double m = set.label(q) * (oracle::sqDist(G, c.l, c.k) - oracle::sqDist(G, c.i, c.j));
            EXPECT_NEAR(set.label(q) * e[static_cast<Index>(q)], g0 - m, 1e-12 * (1.0 + std::abs(m)));
        }
    }
}

TEST(UpdateE, ProxCollapsesForLargePenalty) {
    const auto set = noisySet(6, 30, 0.3, 3);
    DmoeConfig cfg;
    DmoeProblem prob(set);
    oracle::Gen gen(3);
    SolverState s = initialState(prob, cfg);
    s.G = gen.psd(6, 2);
    s.eQ = computeEQ(prob, s.G, cfg.gamma0);
    s.mu = 1e12;
    EXPECT_LE((updateE1(s, prob, cfg) - s.eQ).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LE((updateE2(s, prob, cfg) + s.eQ).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(UpdateE, InactiveHingeIsIdentity) {
    const auto set = noisySet(6, 30, 0.3, 4);
    DmoeConfig cfg;
    DmoeProblem prob(set);
    SolverState s = initialState(prob, cfg);
    s.mu = 2.0;
    // s1 = eQ - z1/mu with y * s1 < 0 everywhere.
    s.z1 = s.mu * (s.eQ + prob.y);
    const Eigen::VectorXd s1 = s.eQ - s.z1 / s.mu;
    EXPECT_EQ(updateE1(s, prob, cfg), s1);
}

TEST(UpdateE, MatchScalarOracle) {
    oracle::Gen gen(5);
    for (double nu : {0.0, 0.7, 1.0}) {
        const auto set = noisySet(6, 40, 0.3, 5);
        DmoeConfig cfg;
        cfg.nu = nu;
        DmoeProblem prob(set);
        SolverState s = initialState(prob, cfg);
        s.G = gen.psd(6, 2);
        s.eQ = computeEQ(prob, s.G, cfg.gamma0);
        s.z1 = gen.matrix(40, 1);
        s.z2 = gen.matrix(40, 1);
        s.mu = gen.uniform(0.5, 3.0);
        const Eigen::VectorXd e1 = updateE1(s, prob, cfg);
        const Eigen::VectorXd e2 = updateE2(s, prob, cfg);
        for (Index q = 0; q < 40; ++q) {
            const int y = static_cast<int>(prob.y[q]);
            const double s1 = s.eQ[q] - s.z1[q] / s.mu;
            const double s2 = -s.eQ[q] - s.z2[q] / s.mu;
            auto obj = [&](double w, double c) {
                return [=](double e) { return w / s.mu * std::max(y * e, 0.0) + 0.5 * (e - c) * (e - c); };
            };
            EXPECT_NEAR(e1[q], oracle::goldenSection(obj(1.0, s1), s1 - 5, s1 + 5), 1e-6);
            EXPECT_NEAR(e2[q], oracle::goldenSection(obj(nu, s2), s2 - 5, s2 + 5), 1e-6);
            if (nu == 0.0)
                EXPECT_EQ(e2[q], s2);
            if (nu == 1.0)
                EXPECT_EQ(e2[q], hingeProx(s2, y, 1.0, s.mu));
        }
    }
}

TEST(UpdateG, EmptySetAveragesConsensusBlocks) {
    const auto set = ComparisonSet::fromTriplets(5, {});
    DmoeConfig cfg;
    DmoeProblem prob(set);
    oracle::Gen gen(6);
    SolverState s = initialState(prob, cfg);
    s.G1 = gen.symmetric(5);
    s.G2 = gen.psd(5, 5);
    EXPECT_LE((updateG(s, prob, cfg) - 0.5 * (s.G1 + s.G2)).norm(), 1e-10);
}

TEST(UpdateG, StationaryOnSmallInstance) {
    const auto set = noisySet(5, 20, 0.25, 7);
    DmoeConfig cfg;
    cfg.cg.relativeTolerance = 1e-12;
    DmoeSolver solver(set, cfg);
    for (int it = 0; it < 3; ++it)
        solver.step();
    SolverState s = solver.state();
    const auto& prob = solver.problem();
    s.e1 = updateE1(s, prob, cfg);
    s.e2 = updateE2(s, prob, cfg);
    s.G = updateG(s, prob, cfg);
    const Eigen::MatrixXd grad = oracle::finiteDifference(
        [&](const Eigen::MatrixXd& G) {
            SolverState t = s;
            t.G = G;
            return augmentedLagrangian(prob, t, cfg);
        },
        s.G, 1e-5);
    EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-5);
}

TEST(UpdateG, DoesNotIncreaseLagrangianFromConsensus) {
    const auto set = noisySet(6, 30, 0.2, 8);
    DmoeConfig cfg;
    DmoeProblem prob(set);
    oracle::Gen gen(8);
    SolverState s = initialState(prob, cfg);
    s.G = gen.psd(6, 2);
    s.G1 = s.G;
    s.G2 = s.G;
    s.eQ = computeEQ(prob, s.G, cfg.gamma0);
    s.e1 = s.eQ;
    s.e2 = -s.eQ;
    const double before = augmentedLagrangian(prob, s, cfg);
    s.G = updateG(s, prob, cfg);
    EXPECT_LE(augmentedLagrangian(prob, s, cfg), before + 1e-12);
}

TEST(UpdateG1, LimitsAndPerturbations) {
    oracle::Gen gen(9);
    SolverState s;
    s.G = gen.symmetric(5);
    s.Z3 = gen.symmetric(5);
    s.mu = 2.0;
    DmoeConfig cfg;
    cfg.lambda = 0.0;
    EXPECT_LE((updateG1(s, cfg) - symmetricPart(s.G + s.Z3 / s.mu)).norm(), 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetricPart(s.G + s.Z3 / s.mu));
    cfg.lambda = 1.01 * s.mu * eig.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_LE(updateG1(s, cfg).norm(), 1e-12);

    cfg.lambda = 0.8;
    const Eigen::MatrixXd G1 = updateG1(s, cfg);
    auto obj = [&](const Eigen::MatrixXd& Z) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(Z, Eigen::EigenvaluesOnly);
        return cfg.lambda * e.eigenvalues().cwiseAbs().sum() + 0.5 * s.mu * (s.G - Z).squaredNorm() +
               (s.Z3.array() * (s.G - Z).array()).sum();
    };
    const double best = obj(G1);
    for (int c = 0; c < 100; ++c)
        EXPECT_LE(best, obj(G1 + gen.uniform(1e-4, 0.1) * gen.symmetric(5)) + 1e-12);
}

TEST(UpdateG2, ProjectsOntoPsdCone) {
    oracle::Gen gen(10);
    SolverState s;
    s.mu = 1.0;
    DmoeConfig cfg;
    s.G = gen.psd(4, 2);
    s.Z4 = Eigen::MatrixXd::Zero(4, 4);
    EXPECT_LE((updateG2(s, cfg) - s.G).norm(), 1e-12);
    s.G = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    s.Z4 = Eigen::MatrixXd::Zero(2, 2);
    EXPECT_LE((updateG2(s, cfg) - Eigen::MatrixXd(Eigen::Vector2d(1.0, 0.0).asDiagonal())).norm(), 1e-14);
    for (int t = 0; t < 50; ++t) {
        s.G = gen.matrix(5, 5);
        s.Z4 = gen.symmetric(5);
        s.mu = gen.uniform(0.5, 4.0);
        const Eigen::MatrixXd target = s.G + s.Z4 / s.mu;
        EXPECT_NEAR((target - updateG2(s, cfg)).norm(), oracle::psdDistance(target), 1e-8);
    }
}

TEST(UpdateMultipliers, Examples) {
    const auto set = noisySet(5, 15, 0.2, 11);
    DmoeConfig cfg;
    DmoeProblem prob(set);
    oracle::Gen gen(11);
    SolverState s = initialState(prob, cfg);
    s.G = gen.psd(5, 2);
    s.G1 = s.G;
    s.G2 = s.G;
    s.eQ = computeEQ(prob, s.G, cfg.gamma0);
    s.e1 = s.eQ;
    s.e2 = -s.eQ;
    s.z1 = gen.matrix(15, 1);
    const SolverState before = s;
    updateMultipliers(s, prob, cfg);
    EXPECT_EQ(s.z1, before.z1);
    EXPECT_EQ(s.Z3, before.Z3);
    EXPECT_DOUBLE_EQ(s.mu, cfg.rho * before.mu);
    EXPECT_EQ(s.residuals.max(), 0.0);

    SolverState z = initialState(prob, cfg);
    z.G = gen.psd(5, 2);
    z.e1 = gen.matrix(15, 1);
    updateMultipliers(z, prob, cfg);
    EXPECT_LE((z.z1 - cfg.mu0 * (z.e1 - computeEQ(prob, z.G, cfg.gamma0))).norm(), 1e-14);

    z.mu = cfg.muMax;
    updateMultipliers(z, prob, cfg);
    EXPECT_EQ(z.mu, cfg.muMax);
}

TEST(BlockOptimality, EverySubproblemIsStationary) {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const auto set = noisySet(5, 25, 0.2, seed);
        DmoeConfig cfg;
        cfg.lambda = 0.5;
        cfg.cg.relativeTolerance = 1e-12;
        const auto v = oracle::blockOptimality(set, cfg, 2, 4, seed);
        EXPECT_LE(v.e1, 1e-4);
        EXPECT_LE(v.e2, 1e-4);
        EXPECT_LE(v.g, 1e-4);
        EXPECT_LE(v.g1, 1e-4);
        EXPECT_LE(v.g2, 1e-4);
    }
}

TEST(SolveDmoe, PlantedRecovery) {
    const auto planted = oracle::plantedTriplets(10, 2, 500, 31);
    const auto res = solveDmoe(planted.set, recoveryConfig());
    EXPECT_TRUE(res.converged);
    EXPECT_LE(generalizationError(planted.set, res.G), 0.02);
    EXPECT_LE(res.state.residuals.max(), 1e-3);
    EXPECT_TRUE(isPsd(res.G));
}

TEST(SolveDmoe, ResidualsShrinkAfterIterationFive) {
    for (std::uint64_t seed : {41u, 42u}) {
        const auto set = noisySet(8, 120, 0.1, seed);
        const auto res = solveDmoe(set, DmoeConfig{});
        ASSERT_GE(res.log.size(), 5u);
        const auto& r5 = res.log[4].residuals;
        const auto& fin = res.state.residuals;
        EXPECT_LE(fin.e1, r5.e1);
        EXPECT_LE(fin.e2, r5.e2);
        EXPECT_LE(fin.g1, r5.g1);
        EXPECT_LE(fin.g2, r5.g2);
        if (res.converged)
            EXPECT_LE(fin.max(), 1e-3);
    }
}

TEST(SolveDmoe, MuIsMonotoneAndCapped) {
    const auto set = noisySet(6, 40, 0.1, 43);
    DmoeConfig cfg;
    cfg.muMax = 1.5;
    const auto res = solveDmoe(set, cfg);
    for (std::size_t a = 1; a < res.log.size(); ++a)
        EXPECT_GE(res.log[a].mu, res.log[a - 1].mu);
    EXPECT_LE(res.state.mu, 1.5);
}

TEST(SolveDmoe, DuplicatedConstraintsMatchHalvedLambda) {
    const auto set = noisySet(6, 40, 0.15, 51);
    DmoeConfig single = tight(DmoeConfig{});
    single.lambda = 0.05;
    DmoeConfig doubled = single;
    doubled.lambda = 0.1;
    const auto a = solveDmoe(set, single);
    const auto b = solveDmoe(set.concat(set), doubled);
    ASSERT_TRUE(a.converged);
    ASSERT_TRUE(b.converged);
    DmoeProblem pa(set);
    auto objective = [&](const Eigen::MatrixXd& G) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(G, Eigen::EigenvaluesOnly);
        return dmoeObjective(pa, computeEQ(pa, G, single.gamma0), e.eigenvalues().cwiseAbs().sum(),
                             single);
    };
    const double fa = objective(a.G), fb = objective(b.G);
    EXPECT_NEAR(fa, fb, 1e-5 * (1.0 + fa));
    EXPECT_LE((a.G - b.G).norm(), 1e-3 * (1.0 + a.G.norm()));
}

TEST(SolveDmoe, LargeLambdaShrinksToZero) {
    const auto set = ComparisonSet::fromTriplets(4, {{0, 1, 2}});
    DmoeConfig cfg;
    cfg.lambda = 1e3;
    const auto res = solveDmoe(set, cfg);
    EXPECT_LE(res.G.norm(), 1e-3);
    EXPECT_NEAR(margins(set, res.G)[0], 0.0, 1e-3);
}

TEST(SolveDmoe, LabelFlipSymmetry) {
    const auto set = noisySet(7, 60, 0.2, 61);
    const auto a = solveDmoe(set, DmoeConfig{});
    const auto b = solveDmoe(set.flipped(), DmoeConfig{});
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_LE((a.G - b.G).norm(), 1e-8 * (1.0 + a.G.norm()));
}

TEST(SolveDmoe, NuclearNormDecreasesWithLambda) {
    const auto set = noisySet(6, 50, 0.15, 71);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
        DmoeConfig cfg = tight(DmoeConfig{});
        cfg.lambda = lambda;
        const auto res = solveDmoe(set, cfg);
        ASSERT_TRUE(res.converged) << "lambda " << lambda;
        const double nuclear = res.state.g1NuclearNorm;
        EXPECT_LE(nuclear, previous + 1e-4 * (1.0 + previous)) << "lambda " << lambda;
        previous = nuclear;
    }
}

TEST(SolveDmoe, DeterministicLogs) {
    const auto set = noisySet(8, 80, 0.1, 81);
    const auto a = solveDmoe(set, DmoeConfig{});
    const auto b = solveDmoe(set, DmoeConfig{});
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log[i].objective, b.log[i].objective);
        EXPECT_EQ(a.log[i].residuals.max(), b.log[i].residuals.max());
    }
    EXPECT_EQ(a.G, b.G);
}

TEST(SolveDmoe, IterationCapReturnsUnconverged) {
    const auto set = noisySet(8, 80, 0.1, 91);
    DmoeConfig cfg;
    cfg.maxOuterIterations = 3;
    const auto res = solveDmoe(set, cfg);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 3);
    EXPECT_TRUE(isPsd(res.G));
}

TEST(SolveDmoe, CgFailureSurfacesAsSolverError) {
    const auto set = noisySet(8, 80, 0.1, 92);
    DmoeConfig cfg;
    cfg.cg.relativeTolerance = 1e-15;
    cfg.cg.maxIterations = 1;
    DmoeSolver solver(set, cfg);
    EXPECT_THROW(solver.run(), SolverError);
}
