#include "piezo/evosolve.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace piezo;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            m(i, j) = nd(gen);
        }
    }
    return m;
}

TimeGrid grid(double nu, double dt, int n)
{
    TimeGrid g;
    g.nu = nu;
    g.dt = dt;
    g.n_steps = n;
    return g;
}

Trajectory random_traj(const TimeGrid& g, Eigen::Index dim, unsigned seed)
{
    return Trajectory(g, random_mat(dim, g.n_steps, seed));
}

EvoSystem scalar(double m0, double m1)
{
    EvoSystem s;
    s.M0 = sparse_diag(Vec::Constant(1, m0));
    s.M1 = RationalFamily::zero(1);
    s.M1.instant = sparse_diag(Vec::Constant(1, m1));
    s.A = SpMat(1, 1);
    s.layout = StateLayout({{"u", 1}});
    return s;
}

// M0 semidefinite (last two rows zero), skew A, instant conductivity and one
// resolvent block.
EvoSystem random_system(unsigned seed)
{
    const int n = 6;
    EvoSystem s;
    Mat X = random_mat(4, 4, seed);
    Mat M0 = Mat::Zero(n, n);
    M0.topLeftCorner(4, 4) = X * X.transpose() / 4.0 + Mat::Identity(4, 4);
    s.M0 = M0.sparseView();
    const Mat Y = random_mat(n, n, seed + 1);
    s.A = Mat(Y - Y.transpose()).sparseView();
    s.M1 = RationalFamily::zero(n);
    s.M1.instant = sparse_diag(Vec::Constant(n, 0.5));
    ResolventBlock b;
    b.B1 = (0.3 * random_mat(n, 2, seed + 2)).sparseView();
    b.B2 = Mat(Mat(b.B1).transpose()).sparseView();
    b.G = Mat::Identity(2, 2);
    const Mat Z = random_mat(2, 2, seed + 3);
    b.alpha = Z * Z.transpose();
    s.M1.blocks.push_back(b);
    s.layout = StateLayout({{"u", n}});
    return s;
}

// Global dense solve over all steps with the auxiliary unknowns kept explicit.
Trajectory all_at_once(const EvoSystem& s, const Trajectory& F)
{
    const TimeGrid& g = F.grid();
    const Eigen::Index n = s.size();
    const Eigen::Index N = g.n_steps;
    const ResolventBlock& b = s.M1.blocks.at(0);
    const Eigen::Index m = b.G.rows();
    const Eigen::Index stride = n + m;
    Mat big = Mat::Zero(N * stride, N * stride);
    Vec rhs = Vec::Zero(N * stride);
    const Mat M0 = Mat(s.M0), L = Mat(s.M1.instant) + Mat(s.A);
    for (Eigen::Index k = 0; k < N; ++k) {
        const Eigen::Index r = k * stride;
        big.block(r, r, n, n) = M0 / g.dt + L;
        if (k > 0) {
            big.block(r, r - stride, n, n) = -M0 / g.dt;
        }
        big.block(r, r + n, n, m) = Mat(b.B1);
        rhs.segment(r, n) = F.step(k);
        big.block(r + n, r + n, m, m) = b.G;
        for (Eigen::Index j = 0; j <= k; ++j) {
            big.block(r + n, j * stride + n, m, m) += g.dt * b.alpha;
        }
        big.block(r + n, r, m, n) = -Mat(b.B2);
    }
    const Vec x = big.fullPivLu().solve(rhs);
    Trajectory U(g, n);
    for (Eigen::Index k = 0; k < N; ++k) {
        U.step(k) = x.segment(k * stride, n);
    }
    return U;
}

} // namespace

TEST(Solve, MatchesAllAtOnceOracle)
{
    for (unsigned seed : {1u, 2u, 3u}) {
        EvoSystem s = random_system(seed);
        ASSERT_TRUE(certify(s, {1.0, 2.0}).well_posed);
        const Trajectory F = random_traj(grid(1.0, 0.05, 15), s.size(), seed + 10);
        const SolveReport r = solve(s, F);
        const Trajectory U = all_at_once(s, F);
        EXPECT_LE((r.trajectory - U).values().norm(), 1e-10 * U.values().norm());
        EXPECT_LE(r.residual_max, 1e-12);
    }
}

TEST(Solve, AuxiliaryStatesMatchToeplitzOracle)
{
    EvoSystem s = random_system(4);
    certify(s, {1.0});
    const Trajectory F = random_traj(grid(1.0, 0.1, 12), s.size(), 5);
    const SolveReport r = solve(s, F);
    const ResolventBlock& b = s.M1.blocks[0];
    const Trajectory input(F.grid(), Mat(Mat(b.B2) * r.trajectory.values()));
    const Trajectory w = dense_auxiliary_oracle(b, input);
    EXPECT_LE((w - r.aux[0]).values().norm(), 1e-12 * (1.0 + w.values().norm()));
    EXPECT_LE((integrate_causal(r.aux[0]) - r.aux_integral[0]).values().norm(), 1e-13);
}

TEST(Solve, ScalarDecayFirstOrder)
{
    // M0 = M1 = 1, A = 0, U0 = 1 -> exp(-t), solved as a source problem for U - U0.
    std::vector<double> err;
    for (double dt : {0.04, 0.02, 0.01}) {
        EvoSystem s = scalar(1.0, 1.0);
        certify(s, {0.5});
        const TimeGrid g = grid(0.5, dt, static_cast<int>(std::lround(2.0 / dt)));
        // F - M1 U0 for the shifted unknown.
        const Trajectory F = Trajectory::constant(g, Vec::Constant(1, -1.0));
        const SolveReport r = solve(s, F);
        double e = 0.0;
        for (int n = 0; n < g.n_steps; ++n) {
            // U0 sits at t = -dt.
            e = std::max(e, std::abs(r.trajectory.step(n)[0] + 1.0 - std::exp(-(g.time(n) + dt))));
        }
        err.push_back(e);
    }
    EXPECT_LE(err[0], 0.04);
    EXPECT_GE(std::log2(err[0] / err[1]), 0.9);
    EXPECT_GE(std::log2(err[1] / err[2]), 0.9);
}

TEST(Solve, StepSourceClosedForm)
{
    EvoSystem s = scalar(2.0, 0.5);
    certify(s, {1.0});
    const TimeGrid g = grid(1.0, 0.001, 3000);
    const SolveReport r = solve(s, Trajectory::constant(g, Vec::Ones(1)));
    const double t = g.time(g.n_steps - 1) + g.dt;
    EXPECT_NEAR(r.trajectory.step(g.n_steps - 1)[0], 2.0 * (1.0 - std::exp(-0.25 * t)), 5e-4);
}

TEST(Solve, RefusesUncertified)
{
    EvoSystem s = scalar(1.0, 1.0);
    const Trajectory F = Trajectory::constant(grid(1.0, 0.1, 3), Vec::Ones(1));
    EXPECT_THROW(solve(s, F), Error);
    SolveOptions opt;
    opt.allow_uncertified = true;
    EXPECT_NO_THROW(solve(s, F, opt));
    EXPECT_THROW(solve(s, Trajectory::constant(grid(1.0, 0.1, 3), Vec::Ones(2)), opt), Error);
}

TEST(Solve, CertificateFailsForDegenerateMaterial)
{
    EvoSystem s = scalar(0.0, 0.0);
    const PosdefReport r = certify(s, {1.0, 2.0});
    EXPECT_FALSE(r.well_posed);
    EXPECT_FALSE(s.certified);
}

TEST(Causality, BackwardEulerIsCausal)
{
    for (unsigned seed : {1u, 7u}) {
        EvoSystem s = random_system(seed);
        certify(s, {1.0});
        const Trajectory F = random_traj(grid(1.0, 0.05, 40), s.size(), seed);
        for (double a : {0.3, 1.0, 1.7}) {
            EXPECT_LE(causality_defect(make_solver(s), F, a), 1e-14 * weighted_norm(F));
        }
    }
}

TEST(Causality, CentredSchemeIsFlagged)
{
    EvoSystem s = random_system(2);
    certify(s, {1.0});
    const TimeGrid g = grid(1.0, 0.05, 40);
    const Trajectory step = cutoff(Trajectory::constant(g, Vec::Ones(s.size())), 1.0, CutSide::After);
    const SolverFn centred = [&](const Trajectory& f) { return centred_reference_solve(s, f); };
    EXPECT_GT(causality_defect(centred, step, 1.0), 1e-6);
}

TEST(Stability, RatioBelowInverseC0)
{
    for (unsigned seed : {1u, 2u, 3u}) {
        EvoSystem s = random_system(seed);
        const TimeGrid g = grid(1.0, 0.05, 30);
        const PosdefReport p = certify(s, {g.nu});
        ASSERT_TRUE(p.well_posed);
        for (unsigned k = 0; k < 20; ++k) {
            const SolveReport r = solve(s, random_traj(g, s.size(), 100 * seed + k));
            EXPECT_LE(r.stability_ratio, (1.0 + 1e-6) / p.c0);
        }
    }
}

TEST(Stability, ZeroSourceZeroSolution)
{
    EvoSystem s = random_system(5);
    certify(s, {1.0});
    const SolveReport r = solve(s, Trajectory(grid(1.0, 0.1, 5), s.size()));
    EXPECT_EQ(r.trajectory.values().norm(), 0.0);
    EXPECT_EQ(r.stability_ratio, 0.0);
}

TEST(StepMatrix, SymmetricPartPositive)
{
    EvoSystem s = random_system(6);
    certify(s, {1.0});
    const Mat sym = Mat(step_symmetric_part(s, 0.1));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues()(0), 0.0);
}
