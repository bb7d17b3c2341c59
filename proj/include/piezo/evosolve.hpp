#pragma once

// Backward-Euler stepping for (d0 M0 + M1(d0^{-1}) + A) U = F. Each resolvent block
// B1 (G + alpha d0^{-1})^{-1} B2 carries an auxiliary state w with running integral Jw:
//   (G + alpha dt) w_n = B2 U_n - alpha Jw_{n-1},   Jw_n = Jw_{n-1} + dt w_n.
// Eliminating w gives one constant step matrix, factorized once.

#include "piezo/material.hpp"
#include "piezo/timeweight.hpp"

namespace piezo {

struct SolveOptions {
    /// Solve even if the system is not certified (c0 <= 0).
    bool allow_uncertified = false;
};

struct SolveReport {
    Trajectory trajectory;
    std::vector<Trajectory> aux;          // w per resolvent block
    std::vector<Trajectory> aux_integral; // Jw per resolvent block
    double stability_ratio = 0.0;
    double residual_max = 0.0;
};

/// Runs check_posdef over `nu_range` and records c0 / certified on the system.
PosdefReport certify(EvoSystem& system, const std::vector<double>& nu_range);

/// Symmetric part of M0/dt + M1_eff(dt) (the dissipative part of the step matrix).
SpMat step_symmetric_part(const EvoSystem& system, double dt);

SolveReport solve(const EvoSystem& system, const Trajectory& F, const SolveOptions& options = {});
SolverFn make_solver(const EvoSystem& system, const SolveOptions& options = {});

/// |U|_nu / |F|_nu with both norms taken at weight `nu` (0 when F = 0).
double stability_ratio(const SolveReport& report, const Trajectory& F, double nu);

/// Auxiliary states recomputed from a trajectory (input B2 U_n).
std::vector<Trajectory> auxiliary_states(const RationalFamily& M1, const Trajectory& U);

/// Per-step |(M0 D + M1 + A) U_n - F_n| / (1 + |F_n|), auxiliary states recomputed from U.
Vec step_residuals(const EvoSystem& system, const Trajectory& U, const Trajectory& F);
double residual(const EvoSystem& system, const SolveReport& report, const Trajectory& F);

/// Dense all-at-once oracle for one block: solves G w_n + alpha (Jw)_n = g_n for the whole
/// window with the running sum written as a lower-triangular Toeplitz matrix.
Trajectory dense_auxiliary_oracle(const ResolventBlock& block, const Trajectory& input);

/// All-at-once centred-in-time scheme (M1 frozen at z = 0). Not causal; used as the
/// reference that causality_defect must flag.
Trajectory centred_reference_solve(const EvoSystem& system, const Trajectory& F);

} // namespace piezo
