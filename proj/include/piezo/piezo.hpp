#pragma once

// The coupled piezo-electro-magnetic systems on one grid.
//
// Dirichlet:  state (v_int, T, E_int, H); A has -Grad_hom in slot (T, v) and curl_hom in
//             slot (H, E), the upper blocks are the negative transposes (-Div, -curl).
// Leontovich: state (v, T, tau_T, E, H, tau_H) with v and E on every dof. A carries the
//             columns (-Grad; iota_Grad^*) and (curl; iota_curl^*); M0 vanishes on the tau
//             blocks and M1 carries S(z) there, so the tau rows read
//             S(d0^{-1}) (tau_H; tau_T) + (iota^* E; iota^* v) = (f1; g0).
//
// tau_T lives in coordinates of the Grad boundary space (the codomain of Div dot) and
// tau_H in those of the curl boundary space.

#include "piezo/bdspace.hpp"
#include "piezo/evosolve.hpp"

#include <complex>
#include <memory>

namespace piezo {

enum class BoundaryMode { Dirichlet, Inhomogeneous, Leontovich };

struct LeontovichParams {
    Mat Q;     // nb_Grad x nb_curl
    Mat alpha; // nb_Grad x nb_Grad
};

/// Q = q_scale * (Gaussian / sqrt(nb_curl)), alpha = alpha_scale * X X^T / nb_Grad.
LeontovichParams random_leontovich_params(int nb_grad, int nb_curl, double q_scale, double alpha_scale,
                                          unsigned seed);

struct PiezoSystem {
    EvoSystem evo;
    BoundaryMode mode = BoundaryMode::Dirichlet;
    std::shared_ptr<const Discretization> disc;
    std::shared_ptr<const BoundaryPairData> grad_bd; // Leontovich / inhomogeneous only
    std::shared_ptr<const BoundaryPairData> curl_bd;
    LeontovichParams params;
    Mat proj_v; // iota_Grad^* in scaled coordinates: nb_Grad x |v|
    Mat proj_E; // iota_curl^* in scaled coordinates: nb_curl x |E|
    SpMat M0_full;  // (v, T, E, H) on every dof, scaled
    RationalFamily M1_full;
    SpMat A_full;   // full operators in the lower blocks
    int boundary_block = -1; // index of the S resolvent block in evo.M1
};

/// Scaled-coordinate full operators.
SpMat scaled_grad(const Discretization& disc);
SpMat scaled_curl(const Discretization& disc);

PiezoSystem build_dirichlet_system(const GridSpec& grid, const Coefficients& coeffs);
PiezoSystem build_leontovich_system(const GridSpec& grid, const Coefficients& coeffs, const LeontovichParams& params);
/// Same, reusing precomputed boundary spaces.
PiezoSystem build_leontovich_system(const GridSpec& grid, const Coefficients& coeffs, const LeontovichParams& params,
                                    std::shared_ptr<const BoundaryPairData> grad_bd,
                                    std::shared_ptr<const BoundaryPairData> curl_bd);

/// Attaches the boundary spaces used by lift_boundary_data.
void attach_boundary_spaces(PiezoSystem& system);

/// The block display on (tau_H, tau_T): S(z) = [[1 + c Q^T R Q c, c Q^T R], [R Q c, R]],
/// R = (1 + Q Q^T + alpha z)^{-1}.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> S_of_z(const Mat& Q, const Mat& alpha, const Mat& c, Scalar z)
{
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index nE = c.rows();
    const Eigen::Index nG = Q.rows();
    require(c.cols() == nE && Q.cols() == nE && alpha.rows() == nG && alpha.cols() == nG,
            Error::Kind::DimensionMismatch, "S_of_z: shape mismatch");
    const M Qs = Q.cast<Scalar>();
    const M cs = c.cast<Scalar>();
    const M K = M::Identity(nG, nG) + Qs * Qs.transpose() + alpha.cast<Scalar>() * z;
    Eigen::FullPivLU<M> lu(K);
    require(lu.isInvertible(), Error::Kind::Singular, "S_of_z: 1 + Q Q^T + alpha z is singular");
    const M R = lu.inverse();
    M S(nE + nG, nE + nG);
    S.topLeftCorner(nE, nE) = M::Identity(nE, nE) + cs * Qs.transpose() * R * Qs * cs;
    S.topRightCorner(nE, nG) = cs * Qs.transpose() * R;
    S.bottomLeftCorner(nG, nE) = R * Qs * cs;
    S.bottomRightCorner(nG, nG) = R;
    return S;
}

/// [[1, -c Q^T], [-Q c, 1 + alpha z]].
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> S_original(const Mat& Q, const Mat& alpha, const Mat& c, Scalar z)
{
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index nE = c.rows();
    const Eigen::Index nG = Q.rows();
    M O(nE + nG, nE + nG);
    O.topLeftCorner(nE, nE) = M::Identity(nE, nE);
    O.topRightCorner(nE, nG) = -(c * Q.transpose()).cast<Scalar>();
    O.bottomLeftCorner(nG, nE) = -(Q * c).cast<Scalar>();
    O.bottomRightCorner(nG, nG) = M::Identity(nG, nG) + alpha.cast<Scalar>() * z;
    return O;
}

/// Per step |S(tau_H; tau_T) + (iota^* E; iota^* v) - (f1; g0)| using the solver's
/// auxiliary states.
Vec boundary_residual(const PiezoSystem& system, const SolveReport& report, const Trajectory& F);

/// |tau_T - Div dot iota_Div^* T| and |tau_H - (curl dot)^T iota^* H| per step; these
/// inherit the dotted-operator defects and are reported, not asserted.
std::pair<Vec, Vec> tau_consistency(const PiezoSystem& system, const Trajectory& U);

struct BoundaryData {
    Trajectory v_bnd; // coefficients in the Grad boundary space
    Trajectory E_bnd; // coefficients in the curl boundary space
};

struct LiftedProblem {
    Trajectory rhs;
    Trajectory lift;  // added to the extended homogeneous solution
    SpMat extension;  // system state -> full-layout state
    Trajectory reconstruct(const Trajectory& U) const;
};

/// rhs = F - (d0 M0 + M1 + A_full) Ulift restricted to the homogeneous rows, with
/// Ulift = (iota v_bnd; 0; iota E_bnd; 0).
LiftedProblem lift_boundary_data(const PiezoSystem& system, const BoundaryData& data, const Trajectory& F);

/// rhs = F - M1(d0^{-1})(chi U0) - chi A U0; reconstruct adds U0 at every step. The
/// initial state sits at t0 - dt.
LiftedProblem lift_initial_data(const EvoSystem& system, const Vec& U0, const Trajectory& F);

/// Nodal (unscaled) values of a field block on every dof of its space; Dirichlet
/// states are zero-extended.
Vec nodal_field(const PiezoSystem& system, const Vec& state, const std::string& name);
/// Same for the full-layout (v, T, E, H) state produced by LiftedProblem::reconstruct.
Vec nodal_field_full(const PiezoSystem& system, const Vec& full_state, const std::string& name);

} // namespace piezo
