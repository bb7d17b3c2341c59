#pragma once

// Scenario files: INI sections read with boost property_tree. Keys not listed
// below are rejected so that typos surface as parse errors.
//
//   [system]        type = piezo | scalar | rotation; m0, m1, u0 (scalar only)
//   [grid]          dim, cells (one or per-axis), length (one or per-axis), mask = none | lshape
//   [time]          nu, dt, n_steps, t0
//   [coefficients]  rho, eps, mu, sigma, eps_kernel, C = identity | isotropic | tensor,
//                   C_lambda, C_mu, C_tensor (81 numbers), e_bound, e_seed
//   [boundary]      mode = dirichlet | inhomogeneous | leontovich
//   [boundary.data] v_kind, v_amplitude, E_kind, E_amplitude, omega (inhomogeneous data);
//                   g0, f1 (Leontovich boundary sources, same generator `source_kind`)
//   [leontovich]    Q = zero | scalar | random, q_scale, alpha = zero | scalar | random,
//                   alpha_scale, seed
//   [source]        kind = zero | step | gaussian | sine | random, field = v | T | E | H | all,
//                   amplitude, t_on, center, width, omega, seed
//   [output]        dir, prefix
//   [verify]        nu_range, random_sources, allow_uncertified, seed

#include "piezo/piezo.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>

namespace piezo {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SystemType { Piezo, Scalar, Rotation };

/// Time profile shared by sources and boundary data.
struct Generator {
    std::string kind = "zero"; // zero | step | ramp | sine | gaussian | random
    double amplitude = 0.0;
    double t_on = 0.0;
    double center = 0.5;
    double width = 0.1;
    double omega = 1.0;
    unsigned seed = 1;

    /// Deterministic scalar profile; `random` is handled by the caller.
    double value(double t) const;
};

struct Scenario {
    std::string name = "scenario";
    SystemType system = SystemType::Piezo;
    double m0 = 1.0, m1 = 1.0, u0 = 0.0;

    GridSpec grid = GridSpec::box(1, 8);
    TimeGrid time;

    double rho = 1.0, eps = 1.0, mu = 1.0, sigma = 1.0, eps_kernel = 0.0;
    std::string C_kind = "identity";
    double C_lambda = 1.0, C_mu = 0.5;
    std::array<double, 81> C_tensor{};
    double e_bound = 0.5;
    unsigned e_seed = 7;

    BoundaryMode mode = BoundaryMode::Dirichlet;
    Generator v_data, E_data;
    double g0 = 0.0, f1 = 0.0;
    std::string Q_kind = "random", alpha_kind = "random";
    double q_scale = 0.5, alpha_scale = 0.5;
    unsigned leontovich_seed = 11;

    Generator source;
    std::string source_field = "all";

    std::filesystem::path out_dir = ".";
    std::string prefix;

    std::vector<double> nu_range{1.0, 2.0, 4.0};
    int random_sources = 20;
    bool allow_uncertified = false;
    unsigned verify_seed = 3;
};

/// Throws ScenarioError on any syntax or validation problem.
Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_string(const std::string& text, const std::string& name = "scenario");

Coefficients scenario_coefficients(const Scenario& sc);
PiezoSystem build_system(const Scenario& sc);

/// Everything a run produces, before it is written out.
struct RunOutput {
    std::vector<std::string> columns;
    Mat table;                 // one row per step
    std::vector<std::string> final_fields;
    std::vector<Vec> final_values; // nodal values per field
    double c0 = 0.0;
    bool certified = false;
};

/// Exit codes of the command-line entry point.
enum ExitCode { Ok = 0, CheckFailed = 1, ParseFailure = 2, CertificationFailure = 3, SolverFailure = 4 };

/// Thrown by run_scenario; carries the exit code.
struct RunError : std::runtime_error {
    ExitCode code;
    RunError(ExitCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

RunOutput run_scenario(const Scenario& sc);
/// Writes <prefix>.csv and <prefix>_final.csv into out_dir; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> write_run(const Scenario& sc, const RunOutput& out);

/// Closed-form solution of the scalar / rotation toys at time t (initial state at t0 - dt).
Vec closed_form(const Scenario& sc, double t);

/// The invariant suite for the scenario's system. Every check is an object
/// {value, tol, pass}; informational entries carry tol = null and pass = true.
nlohmann::json verify_scenario(const Scenario& sc);

/// One row per value; columns depend on the axis (h | dt | nu).
struct SweepTable {
    std::vector<std::string> columns;
    Mat rows;
};
SweepTable sweep_scenario(const Scenario& sc, const std::string& axis, const std::vector<double>& values,
                          int threads = 1);

/// Dimensions and dotted-operator defects, plus the first basis columns of each space.
struct BdspaceDump {
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> basis_columns; // space,column,dof,value rows
};
BdspaceDump bdspace_scenario(const Scenario& sc, int max_columns = 4);

/// Max nodal error of the two 1D Grad boundary-space extensions against
/// sinh(L - x)/sinh(L) and sinh(x)/sinh(L).
double grad_basis_error_1d(const BoundaryPairData& bd);

std::string format_double(double x);
std::string csv(const std::vector<std::string>& columns, const Mat& rows);

/// PIEZO_THREADS, default 1.
int thread_count_from_env();

} // namespace piezo
