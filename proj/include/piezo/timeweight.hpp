#pragma once

// Discrete exponentially weighted time axis: t_n = t0 + n*dt, n = 0..n_steps-1,
// weighted by exp(-2 nu t_n) dt (right-endpoint rule). The causal running sum
// and the backward difference below are exact inverses of each other.

#include "piezo/types.hpp"

#include <functional>
#include <limits>

namespace piezo {

struct TimeGrid {
    double nu = 1.0;
    double dt = 0.01;
    int n_steps = 1;
    double t0 = 0.0;

    double time(int n) const { return t0 + n * dt; }
    double weight(int n) const;
    void validate() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Time-indexed states; column n of `values` is the state at t_n.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(TimeGrid grid, Eigen::Index dim);
    Trajectory(TimeGrid grid, Mat values);

    const TimeGrid& grid() const { return grid_; }
    Eigen::Index dim() const { return values_.rows(); }
    int steps() const { return grid_.n_steps; }

    auto step(int n) { return values_.col(n); }
    auto step(int n) const { return values_.col(n); }

    Mat& values() { return values_; }
    const Mat& values() const { return values_; }

    Trajectory& operator+=(const Trajectory& other);
    Trajectory& operator-=(const Trajectory& other);
    Trajectory& operator*=(double s);

    friend Trajectory operator+(Trajectory a, const Trajectory& b) { return a += b; }
    friend Trajectory operator-(Trajectory a, const Trajectory& b) { return a -= b; }
    friend Trajectory operator*(double s, Trajectory a) { return a *= s; }

    static Trajectory constant(TimeGrid grid, const Vec& value);

private:
    void check_compatible(const Trajectory& other) const;

    TimeGrid grid_;
    Mat values_;
};

double weighted_norm(const Trajectory& traj);
double weighted_inner(const Trajectory& a, const Trajectory& b);

/// (Ju)_n = (Ju)_{n-1} + dt u_n with (Ju)_{-1} = 0.
Trajectory integrate_causal(const Trajectory& traj);

/// (Du)_n = (u_n - u_{n-1}) / dt with u_{-1} = 0; left inverse and right inverse of
/// integrate_causal.
Trajectory differentiate_causal(const Trajectory& traj);

enum class CutSide {
    Before, // keep t_n < a
    After   // keep t_n >= a
};

Trajectory cutoff(const Trajectory& traj, double a, CutSide side);

using SolverFn = std::function<Trajectory(const Trajectory&)>;

/// Weighted norm of the part before `a` of the response to the part of F0 at or after `a`.
double causality_defect(const SolverFn& solve, const Trajectory& F0, double a);

} // namespace piezo
