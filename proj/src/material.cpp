#include "piezo/material.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <random>

namespace piezo {

StateLayout::StateLayout(const std::vector<std::pair<std::string, Eigen::Index>>& blocks)
{
    for (const auto& [name, n] : blocks) {
        require(!has(name), Error::Kind::InvalidInput, "StateLayout: duplicate block " + name);
        blocks_.push_back({name, size_, n});
        size_ += n;
    }
}

bool StateLayout::has(const std::string& name) const
{
    for (const auto& b : blocks_) {
        if (b.name == name) {
            return true;
        }
    }
    return false;
}

const StateBlock& StateLayout::block(const std::string& name) const
{
    for (const auto& b : blocks_) {
        if (b.name == name) {
            return b;
        }
    }
    throw Error(Error::Kind::InvalidInput, "StateLayout: no block named " + name);
}

void RationalFamily::validate() const
{
    require(instant.rows() == instant.cols(), Error::Kind::DimensionMismatch, "RationalFamily: instant not square");
    for (const auto& b : blocks) {
        const Eigen::Index m = b.G.rows();
        require(b.G.cols() == m && b.alpha.rows() == m && b.alpha.cols() == m, Error::Kind::DimensionMismatch,
                "RationalFamily: G/alpha shape mismatch");
        require(b.B1.rows() == size() && b.B1.cols() == m && b.B2.rows() == m && b.B2.cols() == size(),
                Error::Kind::DimensionMismatch, "RationalFamily: B1/B2 shape mismatch");
        require((b.G - b.G.transpose()).norm() <= 1e-12 * (1.0 + b.G.norm()), Error::Kind::InvalidInput,
                "RationalFamily: G must be symmetric");
        Eigen::LLT<Mat> llt(b.G);
        require(llt.info() == Eigen::Success, Error::Kind::InvalidInput, "RationalFamily: G must be positive definite");
    }
}

namespace {

Mat resolvent(const ResolventBlock& b, double z)
{
    const Mat K = b.G + z * b.alpha;
    Eigen::FullPivLU<Mat> lu(K);
    require(lu.isInvertible(), Error::Kind::Singular, "RationalFamily: G + alpha z is singular");
    return lu.inverse();
}

SpMat to_sparse(const Mat& m)
{
    return m.sparseView(0.0, 0.0);
}

} // namespace

SpMat RationalFamily::evaluate(double z) const
{
    SpMat out = instant;
    for (const auto& b : blocks) {
        out += b.B1 * to_sparse(resolvent(b, z)) * b.B2;
    }
    return out;
}

Mat RationalFamily::evaluate_dense(double z) const
{
    Mat out = Mat(instant);
    for (const auto& b : blocks) {
        out += Mat(b.B1) * resolvent(b, z) * Mat(b.B2);
    }
    return out;
}

RationalFamily RationalFamily::zero(Eigen::Index n)
{
    RationalFamily f;
    f.instant = SpMat(n, n);
    return f;
}

void EvoSystem::validate() const
{
    const Eigen::Index n = M0.rows();
    require(M0.cols() == n && A.rows() == n && A.cols() == n && M1.size() == n, Error::Kind::DimensionMismatch,
            "EvoSystem: operators must be square of one size");
    require(layout.size() == n, Error::Kind::DimensionMismatch, "EvoSystem: layout size mismatch");
    M1.validate();
    require(symmetry_defect(M0) <= 1e-13, Error::Kind::InvalidInput, "EvoSystem: M0 is not symmetric");
    require(skew_defect(A) <= 1e-13, Error::Kind::InvalidInput, "EvoSystem: A is not skew");
}

double symmetry_defect(const SpMat& m)
{
    const double n = m.norm();
    if (n == 0.0) {
        return 0.0;
    }
    return SpMat(m - SpMat(m.transpose())).norm() / n;
}

double skew_defect(const SpMat& a)
{
    const double n = a.norm();
    if (n == 0.0) {
        return 0.0;
    }
    return SpMat(a + SpMat(a.transpose())).norm() / n;
}

Discretization make_discretization(const GridSpec& grid)
{
    Discretization d;
    d.grid = grid;
    d.grad = build_pair(grid, PairKind::Grad);
    d.curl = build_pair(grid, PairKind::Curl);
    const FieldSpace cells3 = FieldSpace::cellwise(grid, 3, "E_cell");
    d.cell_average = cell_average_matrix(d.E(), cells3);
    return d;
}

FieldCoefficient FieldCoefficient::constant(double c)
{
    FieldCoefficient f;
    f.values = Vec::Constant(1, c);
    return f;
}

Coefficients default_coefficients(int dim, double e_bound, unsigned seed)
{
    Coefficients c;
    c.rho = FieldCoefficient::constant(1.0);
    c.eps = FieldCoefficient::constant(1.0);
    c.mu = FieldCoefficient::constant(1.0);
    c.sigma = FieldCoefficient::constant(1.0);
    const int nc = sym_components(dim);
    c.C = {Mat::Identity(nc, nc)};
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-e_bound, e_bound);
    Mat e(nc, 3);
    for (int i = 0; i < nc; ++i) {
        for (int k = 0; k < 3; ++k) {
            e(i, k) = u(gen);
        }
    }
    c.e = {e};
    return c;
}

Mat mandel_isotropic(int dim, double lambda, double mu_l)
{
    const int nc = sym_components(dim);
    Mat m = 2.0 * mu_l * Mat::Identity(nc, nc);
    m.topLeftCorner(dim, dim).array() += lambda;
    return m;
}

Mat mandel_from_tensor(const std::array<double, 81>& c, int dim)
{
    auto at = [&](int i, int j, int k, int l) { return c[i * 27 + j * 9 + k * 3 + l]; };
    double scale = 0.0;
    for (double x : c) {
        scale = std::max(scale, std::abs(x));
    }
    const double tol = 1e-12 * std::max(scale, 1e-300);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                for (int l = 0; l < 3; ++l) {
                    const double v = at(i, j, k, l);
                    const bool ok = std::abs(v - at(i, j, l, k)) <= tol && std::abs(v - at(j, i, k, l)) <= tol &&
                                    std::abs(v - at(k, l, i, j)) <= tol;
                    require(ok, Error::Kind::InvalidInput, "elasticity tensor violates the symmetry relations");
                }
            }
        }
    }
    const auto pairs3 = sym_component_pairs(3);
    Mat full(6, 6);
    for (int I = 0; I < 6; ++I) {
        for (int J = 0; J < 6; ++J) {
            const auto [i, j] = pairs3[I];
            const auto [k, l] = pairs3[J];
            const double wi = (i == j) ? 1.0 : std::sqrt(2.0);
            const double wj = (k == l) ? 1.0 : std::sqrt(2.0);
            full(I, J) = wi * wj * at(i, j, k, l);
        }
    }
    // Restrict to the in-plane components of `dim` (xx, yy, xy in 2D; xx in 1D).
    std::vector<int> keep;
    if (dim == 1) {
        keep = {0};
    } else if (dim == 2) {
        keep = {0, 1, 5};
    } else {
        keep = {0, 1, 2, 3, 4, 5};
    }
    Mat out(keep.size(), keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
        for (std::size_t b = 0; b < keep.size(); ++b) {
            out(a, b) = full(keep[a], keep[b]);
        }
    }
    return out;
}

namespace {

void check_field(const FieldCoefficient& f, const FieldSpace& space, const std::string& what)
{
    require(f.values.size() == 1 || f.values.size() == space.size(), Error::Kind::DimensionMismatch,
            what + ": value count must be 1 or the number of dofs");
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        require(std::isfinite(f.values[i]), Error::Kind::InvalidInput, what + ": non-finite value");
    }
    if (!f.kernel.empty()) {
        require(f.kernel.a.rows() == space.size() && f.kernel.b.rows() == space.size() &&
                    f.kernel.a.cols() == f.kernel.b.cols(),
                Error::Kind::DimensionMismatch, what + ": kernel dimensions do not match the grid");
    }
}

// lambda_min / lambda_max of a symmetric matrix; throws if not symmetric positive.
void check_spd(const Mat& m, const std::string& what, double rel = 1e-12)
{
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
            Error::Kind::InvalidInput, what + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    require(hi > 0.0 && lo >= rel * hi, Error::Kind::Singular, what + " is singular or indefinite");
}

const Mat& per_cell(const std::vector<Mat>& v, int cell)
{
    return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(cell)];
}

} // namespace

void validate(const Coefficients& coeffs, const Discretization& disc)
{
    check_field(coeffs.rho, disc.v(), "rho");
    check_field(coeffs.eps, disc.E(), "eps");
    check_field(coeffs.mu, disc.H(), "mu");
    check_field(coeffs.sigma, disc.E(), "sigma");
    const int nc = sym_components(disc.grid.dim);
    const int ncell = disc.cells();
    require(coeffs.C.size() == 1 || static_cast<int>(coeffs.C.size()) == ncell, Error::Kind::DimensionMismatch,
            "C: need one tensor or one per active cell");
    require(coeffs.e.size() == 1 || static_cast<int>(coeffs.e.size()) == ncell, Error::Kind::DimensionMismatch,
            "e: need one tensor or one per active cell");
    for (const Mat& C : coeffs.C) {
        require(C.rows() == nc && C.cols() == nc, Error::Kind::DimensionMismatch, "C: wrong Mandel size");
        check_spd(C, "C");
    }
    for (const Mat& e : coeffs.e) {
        require(e.rows() == nc && e.cols() == 3, Error::Kind::DimensionMismatch, "e: wrong shape");
        require(e.allFinite(), Error::Kind::InvalidInput, "e: non-finite entry");
    }
    // rho and mu must be positive definite, eps nonnegative.
    auto lam = [](const FieldCoefficient& f, const FieldSpace& space) {
        if (f.kernel.empty()) {
            return f.values.minCoeff();
        }
        const SpMat m = scaled_coefficient(f, space);
        require(symmetry_defect(m) <= 1e-13, Error::Kind::InvalidInput, "nonlocal coefficient kernel must be symmetric");
        return min_eigenvalue(SpMat(0.5 * (m + SpMat(m.transpose()))));
    };
    require(lam(coeffs.rho, disc.v()) > 0.0, Error::Kind::InvalidInput, "rho must be symmetric positive definite");
    require(lam(coeffs.mu, disc.H()) > 0.0, Error::Kind::InvalidInput, "mu must be symmetric positive definite");
    require(lam(coeffs.eps, disc.E()) >= -1e-12, Error::Kind::InvalidInput, "eps must be symmetric nonnegative");
}

SpMat scaled_coefficient(const FieldCoefficient& f, const FieldSpace& space)
{
    const Eigen::Index n = space.size();
    const Vec d = f.values.size() == 1 ? Vec::Constant(n, f.values[0]) : f.values;
    SpMat out = sparse_diag(d);
    if (!f.kernel.empty()) {
        const Vec s = space.weights().cwiseSqrt();
        const Mat a = s.asDiagonal() * f.kernel.a;
        const Mat b = s.asDiagonal() * f.kernel.b;
        out += to_sparse(a * b.transpose());
    }
    return out;
}

DiscreteOperator nonlocal_coefficient(const Vec& alpha0, const LowRankKernel& kernel, const Vec& weights,
                                      const std::string& space)
{
    require(alpha0.size() == weights.size(), Error::Kind::DimensionMismatch, "nonlocal_coefficient: size mismatch");
    SpMat m = sparse_diag(alpha0);
    if (!kernel.empty()) {
        require(kernel.a.rows() == weights.size() && kernel.b.rows() == weights.size() &&
                    kernel.a.cols() == kernel.b.cols(),
                Error::Kind::DimensionMismatch, "nonlocal_coefficient: kernel dimensions do not match the grid");
        m += to_sparse(kernel.a * (weights.asDiagonal() * kernel.b).transpose());
    }
    return DiscreteOperator(m, space, space, weights, weights);
}

MaterialBlocks material_blocks(const Coefficients& coeffs, const Discretization& disc)
{
    validate(coeffs, disc);
    MaterialBlocks mb;
    const int nc = sym_components(disc.grid.dim);
    const int ncell = disc.cells();
    mb.rho = scaled_coefficient(coeffs.rho, disc.v());
    mb.eps = scaled_coefficient(coeffs.eps, disc.E());
    mb.mu = scaled_coefficient(coeffs.mu, disc.H());
    mb.sigma = scaled_coefficient(coeffs.sigma, disc.E());

    // T dof of (component c, cell j) is c * ncell + j; the cellwise weight is the same
    // for every component, so C^{-1} is unchanged by scaling.
    Triplets tc, te;
    for (int j = 0; j < ncell; ++j) {
        const Mat& C = per_cell(coeffs.C, j);
        const Mat Cinv = C.ldlt().solve(Mat::Identity(nc, nc));
        const Mat Csym = 0.5 * (Cinv + Cinv.transpose());
        const Mat& e = per_cell(coeffs.e, j);
        for (int a = 0; a < nc; ++a) {
            for (int b = 0; b < nc; ++b) {
                if (Csym(a, b) != 0.0) {
                    tc.emplace_back(a * ncell + j, b * ncell + j, Csym(a, b));
                }
            }
            for (int k = 0; k < 3; ++k) {
                if (e(a, k) != 0.0) {
                    te.emplace_back(a * ncell + j, k * ncell + j, e(a, k));
                }
            }
        }
    }
    mb.Cinv = SpMat(nc * ncell, nc * ncell);
    mb.Cinv.setFromTriplets(tc.begin(), tc.end());
    SpMat ecell(nc * ncell, 3 * ncell);
    ecell.setFromTriplets(te.begin(), te.end());
    const SpMat e_nodal = ecell * disc.cell_average;
    mb.e = sparse_diag(disc.T().weights().cwiseSqrt()) * e_nodal *
           sparse_diag(disc.E().weights().cwiseSqrt().cwiseInverse());
    mb.Cinv_e = mb.Cinv * mb.e;
    SpMat coupling = SpMat(mb.e.transpose()) * mb.Cinv_e;
    coupling = 0.5 * (coupling + SpMat(coupling.transpose()));
    const SpMat eps_sym = 0.5 * (mb.eps + SpMat(mb.eps.transpose()));
    mb.eps_total = eps_sym + coupling;
    mb.rho = 0.5 * (mb.rho + SpMat(mb.rho.transpose()));
    mb.mu = 0.5 * (mb.mu + SpMat(mb.mu.transpose()));
    return mb;
}

namespace {

void place(Triplets& t, const SpMat& m, Eigen::Index r0, Eigen::Index c0)
{
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
        }
    }
}

} // namespace

SpMat assemble_M0(const Coefficients& coeffs, const Discretization& disc)
{
    const MaterialBlocks mb = material_blocks(coeffs, disc);
    const Eigen::Index nv = disc.v().size(), nT = disc.T().size(), nE = disc.E().size(), nH = disc.H().size();
    const Eigen::Index oT = nv, oE = nv + nT, oH = nv + nT + nE;
    Triplets t;
    place(t, mb.rho, 0, 0);
    place(t, mb.Cinv, oT, oT);
    place(t, mb.Cinv_e, oT, oE);
    place(t, SpMat(mb.Cinv_e.transpose()), oE, oT);
    place(t, mb.eps_total, oE, oE);
    place(t, mb.mu, oH, oH);
    SpMat M0(oH + nH, oH + nH);
    M0.setFromTriplets(t.begin(), t.end());
    return M0;
}

RationalFamily assemble_M1(const Coefficients& coeffs, const Discretization& disc)
{
    const MaterialBlocks mb = material_blocks(coeffs, disc);
    const Eigen::Index nv = disc.v().size(), nT = disc.T().size(), nE = disc.E().size(), nH = disc.H().size();
    Triplets t;
    place(t, mb.sigma, nv + nT, nv + nT);
    RationalFamily f = RationalFamily::zero(nv + nT + nE + nH);
    f.instant.setFromTriplets(t.begin(), t.end());
    return f;
}

RationalFamily boundary_family(const Mat& Q, const Mat& alpha, const Mat& c)
{
    const Eigen::Index nE = c.rows();
    const Eigen::Index nG = Q.rows();
    require(c.cols() == nE, Error::Kind::DimensionMismatch, "boundary_family: curl dot must be square");
    require(Q.cols() == nE, Error::Kind::DimensionMismatch, "boundary_family: Q must map the curl boundary space");
    require(alpha.rows() == nG && alpha.cols() == nG, Error::Kind::DimensionMismatch,
            "boundary_family: alpha must act on the Grad boundary space");
    const Eigen::Index n = nE + nG;
    RationalFamily f = RationalFamily::zero(n);
    {
        Triplets t;
        for (Eigen::Index i = 0; i < nE; ++i) {
            t.emplace_back(i, i, 1.0);
        }
        f.instant.setFromTriplets(t.begin(), t.end());
    }
    if (nG == 0) {
        return f;
    }
    // Rows/cols ordered (tau_H, tau_T): B1 = [c Q^T; 1], B2 = [Q c, 1].
    Mat B1(n, nG), B2(nG, n);
    B1.topRows(nE) = c * Q.transpose();
    B1.bottomRows(nG).setIdentity();
    B2.leftCols(nE) = Q * c;
    B2.rightCols(nG).setIdentity();
    ResolventBlock b;
    b.B1 = to_sparse(B1);
    b.B2 = to_sparse(B2);
    b.G = Mat::Identity(nG, nG) + Q * Q.transpose();
    b.G = 0.5 * (b.G + b.G.transpose()).eval();
    b.alpha = alpha;
    f.blocks.push_back(std::move(b));
    f.validate();
    return f;
}

RationalFamily embed_family(const RationalFamily& f, Eigen::Index n, const std::vector<int>& index)
{
    require(static_cast<Eigen::Index>(index.size()) == f.size(), Error::Kind::DimensionMismatch,
            "embed_family: index map size mismatch");
    SpMat P(n, f.size());
    Triplets t;
    for (std::size_t i = 0; i < index.size(); ++i) {
        require(index[i] >= 0 && index[i] < n, Error::Kind::DimensionMismatch, "embed_family: index out of range");
        t.emplace_back(index[i], static_cast<int>(i), 1.0);
    }
    P.setFromTriplets(t.begin(), t.end());
    RationalFamily out;
    out.instant = P * f.instant * SpMat(P.transpose());
    for (const auto& b : f.blocks) {
        ResolventBlock nb = b;
        nb.B1 = P * b.B1;
        nb.B2 = b.B2 * SpMat(P.transpose());
        out.blocks.push_back(std::move(nb));
    }
    return out;
}

RationalFamily sum_families(const RationalFamily& a, const RationalFamily& b)
{
    require(a.size() == b.size(), Error::Kind::DimensionMismatch, "sum_families: size mismatch");
    RationalFamily out = a;
    out.instant += b.instant;
    out.blocks.insert(out.blocks.end(), b.blocks.begin(), b.blocks.end());
    return out;
}

double min_eigenvalue(const SpMat& sym, Eigen::Index dense_limit)
{
    const Eigen::Index n = sym.rows();
    if (n == 0) {
        return std::numeric_limits<double>::infinity();
    }
    if (n <= dense_limit) {
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(sym), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }
    // Gershgorin bounds, then bisection on "sym - s I is positive definite".
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    Vec diag = sym.diagonal();
    Vec radius = Vec::Zero(n);
    for (int k = 0; k < sym.outerSize(); ++k) {
        for (SpMat::InnerIterator it(sym, k); it; ++it) {
            if (it.row() != it.col()) {
                radius[it.row()] += std::abs(it.value());
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        lo = std::min(lo, diag[i] - radius[i]);
        hi = std::max(hi, diag[i] + radius[i]);
    }
    hi = std::min(hi, diag.minCoeff());
    const SpMat I = sparse_diag(Vec::Ones(n));
    Eigen::SimplicialLLT<SpMat> llt;
    llt.analyzePattern(SpMat(sym + I));
    const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        llt.factorize(sym - mid * I);
        if (llt.info() == Eigen::Success) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

PosdefReport check_posdef(const SpMat& M0, const RationalFamily& M1, const std::vector<double>& nu_range)
{
    require(M0.rows() == M0.cols() && M1.size() == M0.rows(), Error::Kind::DimensionMismatch,
            "check_posdef: size mismatch");
    require(!nu_range.empty(), Error::Kind::InvalidInput, "check_posdef: empty nu range");
    const SpMat m1 = M1.evaluate(0.0);
    const SpMat S = 0.5 * (m1 + SpMat(m1.transpose()));
    const SpMat M0s = 0.5 * (M0 + SpMat(M0.transpose()));
    PosdefReport r;
    r.c0 = std::numeric_limits<double>::infinity();
    for (double nu : nu_range) {
        require(nu > 0.0, Error::Kind::InvalidInput, "check_posdef: nu must be positive");
        const double lam = min_eigenvalue(SpMat(nu * M0s + S));
        r.per_nu.emplace_back(nu, lam);
        r.c0 = std::min(r.c0, lam);
    }
    // Null space of M0: dense eigensolve when small, structurally zero rows otherwise.
    const Eigen::Index n = M0.rows();
    Mat N;
    if (n <= 2000) {
        Eigen::SelfAdjointEigenSolver<Mat> es{Mat(M0s)};
        const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        std::vector<int> idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(es.eigenvalues()(i)) <= 1e-12 * top) {
                idx.push_back(static_cast<int>(i));
            }
        }
        N.resize(n, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            N.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(idx[j]);
        }
    } else {
        Vec rowabs = Vec::Zero(n);
        for (int k = 0; k < M0s.outerSize(); ++k) {
            for (SpMat::InnerIterator it(M0s, k); it; ++it) {
                rowabs[it.row()] += std::abs(it.value());
            }
        }
        std::vector<int> idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (rowabs[i] == 0.0) {
                idx.push_back(static_cast<int>(i));
            }
        }
        N = Mat::Zero(n, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            N(idx[j], static_cast<Eigen::Index>(j)) = 1.0;
        }
    }
    r.null_dim = static_cast<int>(N.cols());
    if (r.null_dim == 0) {
        r.null_bound = std::numeric_limits<double>::infinity();
    } else {
        const Mat R = N.transpose() * (S * N);
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (R + R.transpose()), Eigen::EigenvaluesOnly);
        r.null_bound = es.eigenvalues()(0);
    }
    r.well_posed = r.c0 > 0.0;
    return r;
}

double reciprocal_condition(const Mat& W)
{
    require(W.rows() == W.cols(), Error::Kind::DimensionMismatch, "reciprocal_condition: matrix not square");
    if (W.rows() == 0) {
        return 1.0;
    }
    Eigen::JacobiSVD<Mat> svd(W);
    const Vec& s = svd.singularValues();
    return s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0);
}

EvoSystem congruence_transform(const EvoSystem& system, const Mat& W)
{
    const Eigen::Index n = system.size();
    require(W.rows() == n && W.cols() == n, Error::Kind::DimensionMismatch, "congruence_transform: W size mismatch");
    require(reciprocal_condition(W) >= 1e-12, Error::Kind::Singular, "congruence_transform: W is numerically singular");
    const SpMat Ws = to_sparse(W);
    const SpMat Wt = SpMat(Ws.transpose());
    EvoSystem out;
    out.layout = system.layout;
    SpMat m0 = Ws * system.M0 * Wt;
    out.M0 = 0.5 * (m0 + SpMat(m0.transpose()));
    SpMat a = Ws * system.A * Wt;
    out.A = 0.5 * (a - SpMat(a.transpose()));
    out.M1.instant = Ws * system.M1.instant * Wt;
    for (const auto& b : system.M1.blocks) {
        ResolventBlock nb = b;
        nb.B1 = Ws * b.B1;
        nb.B2 = b.B2 * Wt;
        out.M1.blocks.push_back(std::move(nb));
    }
    out.certified = false;
    out.c0 = 0.0;
    return out;
}

} // namespace piezo
