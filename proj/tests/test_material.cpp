#include "piezo/material.hpp"

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

Mat random_spd(Eigen::Index n, unsigned seed, double shift = 0.5)
{
    const Mat X = random_mat(n, n, seed);
    return X * X.transpose() / static_cast<double>(n) + shift * Mat::Identity(n, n);
}

double lambda_min(const Mat& m)
{
    return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose())).eigenvalues()(0);
}

std::array<double, 81> isotropic_tensor(double lambda, double mu)
{
    std::array<double, 81> c{};
    auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                for (int l = 0; l < 3; ++l) {
                    c[i * 27 + j * 9 + k * 3 + l] =
                        lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                }
            }
        }
    }
    return c;
}

} // namespace

TEST(Coefficients, DefaultsValidate)
{
    for (int dim : {1, 2, 3}) {
        const Discretization d = make_discretization(GridSpec::box(dim, 2));
        const Coefficients c = default_coefficients(dim, 0.5, 7);
        EXPECT_NO_THROW(validate(c, d));
        EXPECT_LE(c.e[0].cwiseAbs().maxCoeff(), 0.5);
        EXPECT_EQ(c.e[0].rows(), sym_components(dim));
    }
}

TEST(Coefficients, ValidateRejectsBadInput)
{
    const Discretization d = make_discretization(GridSpec::box(2, 2));
    Coefficients c = default_coefficients(2);
    c.rho = FieldCoefficient::constant(-1.0);
    EXPECT_THROW(validate(c, d), Error);
    c = default_coefficients(2);
    c.C = {Mat::Identity(2, 2)};
    EXPECT_THROW(validate(c, d), Error);
    c = default_coefficients(2);
    c.mu.values = Vec::Ones(5);
    EXPECT_THROW(validate(c, d), Error);
}

TEST(Elasticity, TensorToMandelMatchesIsotropic)
{
    for (int dim : {1, 2, 3}) {
        const Mat m = mandel_from_tensor(isotropic_tensor(1.3, 0.7), dim);
        EXPECT_LE((m - mandel_isotropic(dim, 1.3, 0.7)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Elasticity, RejectsMissingMinorSymmetry)
{
    auto c = isotropic_tensor(1.0, 1.0);
    c[0 * 27 + 1 * 9 + 0 * 3 + 1] += 0.1; // C_0101 without C_1001
    EXPECT_THROW(mandel_from_tensor(c, 3), Error);
    auto m = isotropic_tensor(1.0, 1.0);
    m[0 * 27 + 0 * 9 + 1 * 3 + 1] += 0.1; // C_0011 without C_1100
    EXPECT_THROW(mandel_from_tensor(m, 3), Error);
}

TEST(M0, SymmetricIncludingNonlocalEps)
{
    for (int dim : {1, 2, 3}) {
        const Discretization d = make_discretization(GridSpec::box(dim, 3));
        Coefficients c = default_coefficients(dim);
        const Eigen::Index nE = d.E().size();
        c.eps.kernel.a = random_mat(nE, 2, 5) * 0.3;
        c.eps.kernel.b = c.eps.kernel.a;
        c.rho.values = Vec::LinSpaced(d.v().size(), 1.0, 2.0);
        EXPECT_LE(symmetry_defect(assemble_M0(c, d)), 1e-13);
    }
}

TEST(M0, BlocksAgainstDirectFormulas)
{
    // Scalar coefficients, e = 0: M0 = diag(rho, C^{-1}, eps, mu) in scaled coordinates.
    const Discretization d = make_discretization(GridSpec::box(2, 3));
    Coefficients c = default_coefficients(2, 0.0);
    c.rho = FieldCoefficient::constant(2.0);
    c.eps = FieldCoefficient::constant(3.0);
    c.mu = FieldCoefficient::constant(5.0);
    c.C = {mandel_isotropic(2, 1.0, 0.5)};
    const Mat M0 = Mat(assemble_M0(c, d));
    const Eigen::Index nv = d.v().size(), nT = d.T().size(), nE = d.E().size();
    EXPECT_LE((M0.topLeftCorner(nv, nv) - 2.0 * Mat::Identity(nv, nv)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((M0.block(nv + nT, nv + nT, nE, nE) - 3.0 * Mat::Identity(nE, nE)).cwiseAbs().maxCoeff(), 1e-14);
    const Mat Cinv = mandel_isotropic(2, 1.0, 0.5).inverse();
    const int ncell = d.cells();
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            EXPECT_NEAR(M0(nv + a * ncell, nv + b * ncell), Cinv(a, b), 1e-14);
        }
    }
}

TEST(NonlocalCoefficient, WeightedSymmetricWhenKernelSymmetric)
{
    const Vec w = Vec::LinSpaced(6, 0.1, 0.6);
    LowRankKernel k;
    k.a = random_mat(6, 2, 9);
    k.b = k.a;
    const DiscreteOperator op = nonlocal_coefficient(Vec::Constant(6, 2.0), k, w);
    const Mat WM = w.asDiagonal() * Mat(op.matrix);
    EXPECT_LE((WM - WM.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    const Vec x = random_mat(6, 1, 1);
    const Vec expected = 2.0 * x + k.a * (k.b.transpose() * w.asDiagonal() * x);
    EXPECT_LE((op.apply(x) - expected).norm(), 1e-13);
}

TEST(Posdef, DefaultCoefficientsCertified)
{
    for (int dim : {1, 2}) {
        const Discretization d = make_discretization(GridSpec::box(dim, 3));
        const Coefficients c = default_coefficients(dim);
        const PosdefReport r = check_posdef(assemble_M0(c, d), assemble_M1(c, d), {1.0, 2.0, 4.0});
        EXPECT_TRUE(r.well_posed);
        EXPECT_GT(r.c0, 0.0);
        for (std::size_t k = 1; k < r.per_nu.size(); ++k) {
            EXPECT_GE(r.per_nu[k].second, r.per_nu[k - 1].second - 1e-12);
        }
    }
}

TEST(Posdef, SingularEpsWithoutConductivityFails)
{
    const Discretization d = make_discretization(GridSpec::box(1, 4));
    Coefficients c = default_coefficients(1, 0.0);
    c.eps = FieldCoefficient::constant(0.0);
    c.sigma = FieldCoefficient::constant(0.0);
    const PosdefReport r = check_posdef(assemble_M0(c, d), assemble_M1(c, d), {1.0, 2.0});
    EXPECT_FALSE(r.well_posed);
    EXPECT_LE(r.c0, 0.0);
    EXPECT_EQ(r.null_dim, d.E().size());
}

TEST(Posdef, ConductivityRescuesSingularEps)
{
    // nu eps + sigma >> 0 suffices even with eps = 0.
    const Discretization d = make_discretization(GridSpec::box(1, 4));
    Coefficients c = default_coefficients(1, 0.0);
    c.eps = FieldCoefficient::constant(0.0);
    c.sigma = FieldCoefficient::constant(0.8);
    const PosdefReport r = check_posdef(assemble_M0(c, d), assemble_M1(c, d), {1.0});
    EXPECT_TRUE(r.well_posed);
    EXPECT_NEAR(r.null_bound, 0.8, 1e-12);
}

TEST(Posdef, MinEigenvalueBisectionPath)
{
    // Tridiagonal 2,-1: eigenvalues 2 - 2 cos(k pi / (n + 1)).
    const int n = 2500;
    Triplets t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 2.0);
        if (i + 1 < n) {
            t.emplace_back(i, i + 1, -1.0);
            t.emplace_back(i + 1, i, -1.0);
        }
    }
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    const double expected = 2.0 - 2.0 * std::cos(M_PI / (n + 1));
    EXPECT_NEAR(min_eigenvalue(m), expected, 1e-10);
    EXPECT_NEAR(min_eigenvalue(SpMat(m - 0.5 * sparse_diag(Vec::Ones(n)))), expected - 0.5, 1e-10);
}

TEST(GaussCongruence, ResidualOnRandomBlocks)
{
    for (unsigned s = 0; s < 10; ++s) {
        const int n1 = 2 + s % 3, n2 = 3;
        const Mat X11 = random_spd(n1, s);
        const Mat X12 = random_mat(n1, n2, s + 50);
        Mat block(n1 + n2, n1 + n2);
        block << X11, X12, X12.transpose(), random_spd(n2, s + 99) + X12.transpose() * X11.inverse() * X12;
        const auto g = gauss_congruence<double>(block, n1);
        EXPECT_LE((g.W * block * g.W.transpose() - g.D).norm(), 1e-12 * block.norm());
        EXPECT_LE(g.D.topRightCorner(n1, n2).norm(), 1e-15);
        EXPECT_LE((g.D.topLeftCorner(n1, n1) - X11).norm(), 1e-15);
    }
}

TEST(GaussCongruence, RecoversCinvAndEpsForPiezoBlock)
{
    // [[C^{-1}, C^{-1} e], [e^T C^{-1}, eps + e^T C^{-1} e]] -> diag(C^{-1}, eps).
    const Mat C = random_spd(3, 4, 1.0);
    const Mat e = random_mat(3, 3, 5) * 0.4;
    const Mat eps = random_spd(3, 6);
    const Mat Ci = C.inverse();
    Mat block(6, 6);
    block << Ci, Ci * e, e.transpose() * Ci, eps + e.transpose() * Ci * e;
    const auto g = gauss_congruence<double>(block, 3);
    Mat target = Mat::Zero(6, 6);
    target.topLeftCorner(3, 3) = Ci;
    target.bottomRightCorner(3, 3) = eps;
    EXPECT_LE((g.W * block * g.W.transpose() - target).norm(), 1e-12 * block.norm());
    EXPECT_LE((g.W.bottomLeftCorner(3, 3) + e.transpose()).norm(), 1e-12);
}

TEST(GaussCongruence, LongDoubleInstantiation)
{
    using ML = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat b = random_spd(4, 3);
    const ML bl = b.cast<long double>();
    const auto g = gauss_congruence<long double>(bl, 2);
    EXPECT_LE(static_cast<double>((g.W * bl * g.W.transpose() - g.D).norm()), 1e-15);
    EXPECT_THROW(gauss_congruence<double>(Mat::Zero(3, 3), 1), Error);
}

TEST(Congruence, DefinitenessSignPreserved)
{
    for (unsigned s = 0; s < 20; ++s) {
        const Mat X = random_mat(5, 5, s);
        const Mat B = 0.5 * (X + X.transpose());
        const Mat W = Mat::Identity(5, 5) + 0.4 * random_mat(5, 5, s + 200) / std::sqrt(5.0);
        const double a = lambda_min(B);
        const double b = lambda_min(W * B * W.transpose());
        EXPECT_EQ(a > 0.0, b > 0.0);
    }
}

TEST(Congruence, TransformKeepsStructureAndRejectsSingularW)
{
    EvoSystem s;
    s.M0 = random_spd(4, 1).sparseView();
    s.M1 = RationalFamily::zero(4);
    s.M1.instant = sparse_diag(Vec::Ones(4));
    const Mat X = random_mat(4, 4, 2);
    s.A = Mat(X - X.transpose()).sparseView();
    s.layout = StateLayout({{"u", 4}});
    const Mat W = Mat::Identity(4, 4) + 0.3 * random_mat(4, 4, 3);
    const EvoSystem t = congruence_transform(s, W);
    EXPECT_LE(symmetry_defect(t.M0), 1e-15);
    EXPECT_LE(skew_defect(t.A), 1e-15);
    EXPECT_FALSE(t.certified);
    EXPECT_LE((Mat(t.M0) - W * Mat(s.M0) * W.transpose()).norm(), 1e-12);
    Mat sing = Mat::Identity(4, 4);
    sing(3, 3) = 0.0;
    EXPECT_THROW(congruence_transform(s, sing), Error);
}

TEST(RationalFamily, EvaluateMatchesDirectFormula)
{
    RationalFamily f = RationalFamily::zero(4);
    f.instant = sparse_diag(Vec::LinSpaced(4, 1.0, 2.0));
    ResolventBlock b;
    b.B1 = random_mat(4, 2, 1).sparseView();
    b.B2 = random_mat(2, 4, 2).sparseView();
    b.G = random_spd(2, 3);
    b.alpha = random_spd(2, 4);
    f.blocks.push_back(b);
    for (double z : {0.0, 0.3, 1.0}) {
        const Mat expected = Mat(f.instant) + Mat(b.B1) * (b.G + z * b.alpha).inverse() * Mat(b.B2);
        EXPECT_LE((f.evaluate_dense(z) - expected).norm(), 1e-13);
        EXPECT_LE((Mat(f.evaluate(z)) - expected).norm(), 1e-13);
    }
}

TEST(RationalFamily, EmbedAndSum)
{
    RationalFamily f = RationalFamily::zero(2);
    f.instant = sparse_diag(Vec::Constant(2, 3.0));
    const RationalFamily e = embed_family(f, 5, {4, 1});
    const Mat m = e.evaluate_dense(0.0);
    EXPECT_EQ(m(4, 4), 3.0);
    EXPECT_EQ(m(1, 1), 3.0);
    EXPECT_EQ(m(0, 0), 0.0);
    const Mat two = sum_families(e, e).evaluate_dense(0.0);
    EXPECT_EQ(two(4, 4), 6.0);
    EXPECT_THROW(embed_family(f, 5, {4}), Error);
}

TEST(BoundaryFamily, MatchesBlockDisplay)
{
    const Mat Q = random_mat(3, 2, 7) * 0.5;
    const Mat alpha = random_spd(3, 8);
    const Mat c = random_mat(2, 2, 9);
    const RationalFamily f = boundary_family(Q, alpha, c);
    for (double z : {0.0, 0.2}) {
        const Mat R = (Mat::Identity(3, 3) + Q * Q.transpose() + z * alpha).inverse();
        Mat S(5, 5);
        S << Mat::Identity(2, 2) + c * Q.transpose() * R * Q * c, c * Q.transpose() * R, R * Q * c, R;
        EXPECT_LE((f.evaluate_dense(z) - S).norm(), 1e-13);
    }
}
