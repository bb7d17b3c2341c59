#pragma once

// Material law: M0 with the piezo coupling, the conductivity and boundary resolvent
// blocks of M1, the positivity certificate and congruence transforms.

#include "piezo/spatialops.hpp"
#include "piezo/system.hpp"

#include <array>
#include <optional>

namespace piezo {

/// The field spaces of one grid: the Grad pair (v, T), the curl pair (E, H) and the
/// edge-to-cell average used by the coupling e.
struct Discretization {
    GridSpec grid;
    OperatorPair grad;
    OperatorPair curl;
    SpMat cell_average; // E -> cell 3-vectors (cells x 3, component-major)

    const FieldSpace& v() const { return grad.dom_space; }
    const FieldSpace& T() const { return grad.cod_space; }
    const FieldSpace& E() const { return curl.dom_space; }
    const FieldSpace& H() const { return curl.cod_space; }
    int cells() const { return T().component(0).size(); }
};

Discretization make_discretization(const GridSpec& grid);

/// Columns a_k, b_k of the kernel sum_k a_k(x) b_k(y).
struct LowRankKernel {
    Mat a;
    Mat b;
    bool empty() const { return a.cols() == 0; }
};

/// diag(values) + sum_k a_k (W b_k)^T on one field space; `values` of size 1 broadcasts.
struct FieldCoefficient {
    Vec values = Vec::Ones(1);
    LowRankKernel kernel;

    static FieldCoefficient constant(double c);
};

struct Coefficients {
    FieldCoefficient rho;
    FieldCoefficient eps;
    FieldCoefficient mu;
    FieldCoefficient sigma = FieldCoefficient::constant(0.0);
    /// Mandel-form elasticity per active cell, or one entry broadcast to every cell.
    std::vector<Mat> C;
    /// Piezo coupling per cell: sym_components(dim) x 3 (stress rows, E columns).
    std::vector<Mat> e;
};

/// rho = C = eps = mu = identity, sigma = identity, e random with entries in [-bound, bound].
Coefficients default_coefficients(int dim, double e_bound = 0.5, unsigned seed = 7);

/// 2 mu_l I + lambda 1 1^T restricted to the diagonal components of `dim`.
Mat mandel_isotropic(int dim, double lambda, double mu_l);

/// Componentwise elasticity C_{ijkl} (i fastest is irrelevant: index i*27+j*9+k*3+l).
/// Rejects tensors violating C_ijkl = C_ijlk = C_jikl = C_klij (relative tol 1e-12).
Mat mandel_from_tensor(const std::array<double, 81>& c, int dim);

void validate(const Coefficients& coeffs, const Discretization& disc);

/// Scaled-coordinate operator of a field coefficient: diag + (W^{1/2} a)(W^{1/2} b)^T.
SpMat scaled_coefficient(const FieldCoefficient& f, const FieldSpace& space);

/// diag(alpha0) + sum_k a_k (W b_k)^T in nodal coordinates.
DiscreteOperator nonlocal_coefficient(const Vec& alpha0, const LowRankKernel& kernel, const Vec& weights,
                                      const std::string& space = "f");

/// Scaled-coordinate blocks of M0 for the layout (v, T, E, H).
struct MaterialBlocks {
    SpMat rho;
    SpMat Cinv;
    SpMat Cinv_e;      // T x E
    SpMat eps;         // eps alone
    SpMat eps_total;   // eps + e^* C^{-1} e
    SpMat mu;
    SpMat sigma;
    SpMat e;           // scaled coupling, T x E
};

MaterialBlocks material_blocks(const Coefficients& coeffs, const Discretization& disc);

/// M0 on (v, T, E, H).
SpMat assemble_M0(const Coefficients& coeffs, const Discretization& disc);
/// sigma in the E block, nothing else.
RationalFamily assemble_M1(const Coefficients& coeffs, const Discretization& disc);

/// The boundary part of M1 on (tau_H, tau_T): S(z) with curl dot c, Q: tau_H -> tau_T space.
RationalFamily boundary_family(const Mat& Q, const Mat& alpha, const Mat& c);

/// Place `f` (acting on `index.size()` coordinates) into an n-dimensional family.
RationalFamily embed_family(const RationalFamily& f, Eigen::Index n, const std::vector<int>& index);
RationalFamily sum_families(const RationalFamily& a, const RationalFamily& b);

struct PosdefReport {
    std::vector<std::pair<double, double>> per_nu; // (nu, lambda_min)
    double c0 = 0.0;
    int null_dim = 0;
    double null_bound = 0.0; // lambda_min of sym M1(0) on null(M0); +inf if null(M0) = {0}
    bool well_posed = false;
};

/// Smallest eigenvalue of a symmetric sparse matrix (dense below `dense_limit`,
/// otherwise bisection on Cholesky success).
double min_eigenvalue(const SpMat& sym, Eigen::Index dense_limit = 2000);

PosdefReport check_posdef(const SpMat& M0, const RationalFamily& M1, const std::vector<double>& nu_range);

template <typename Scalar>
struct GaussCongruence {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Matrix W;
    Matrix D;
};

/// block = [[X11, X12], [X21, X22]] with X11 of size n1. W = [[1, 0], [-X21 X11^{-1}, 1]],
/// D = W block W^T = diag(X11, X22 - X21 X11^{-1} X12). For the M0 strain/E block the
/// elimination factor X21 X11^{-1} is e^*.
template <typename Scalar>
GaussCongruence<Scalar> gauss_congruence(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& block,
                                         Eigen::Index n1)
{
    using Matrix = typename GaussCongruence<Scalar>::Matrix;
    const Eigen::Index n = block.rows();
    require(block.cols() == n && n1 >= 0 && n1 <= n, Error::Kind::DimensionMismatch,
            "gauss_congruence: bad block split");
    const Matrix X11 = block.topLeftCorner(n1, n1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(X11);
    if (n1 > 0) {
        const auto lam = es.eigenvalues();
        const Scalar top = lam.cwiseAbs().maxCoeff();
        require(top > Scalar(0) && lam.cwiseAbs().minCoeff() >= Scalar(1e-12) * top, Error::Kind::Singular,
                "gauss_congruence: leading block is singular");
    }
    const Matrix factor = n1 > 0 ? Matrix(X11.ldlt().solve(block.bottomLeftCorner(n - n1, n1).transpose()).transpose())
                                 : Matrix(n - n1, 0);
    GaussCongruence<Scalar> out;
    out.W = Matrix::Identity(n, n);
    out.W.bottomLeftCorner(n - n1, n1) = -factor;
    out.D = Matrix::Zero(n, n);
    out.D.topLeftCorner(n1, n1) = X11;
    out.D.bottomRightCorner(n - n1, n - n1) =
        block.bottomRightCorner(n - n1, n - n1) - factor * block.topRightCorner(n1, n - n1);
    return out;
}

/// (W M0 W^T, W M1 W^T, W A W^T). Rejects W with reciprocal condition below 1e-12.
EvoSystem congruence_transform(const EvoSystem& system, const Mat& W);
/// Reciprocal 2-norm condition number of a dense matrix.
double reciprocal_condition(const Mat& W);

} // namespace piezo
