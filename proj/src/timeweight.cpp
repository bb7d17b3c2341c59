#include "piezo/timeweight.hpp"

#include <cmath>

namespace piezo {

double TimeGrid::weight(int n) const
{
    return std::exp(-2.0 * nu * time(n)) * dt;
}

void TimeGrid::validate() const
{
    require(nu > 0.0 && std::isfinite(nu), Error::Kind::InvalidInput, "time grid: nu must be positive");
    require(dt > 0.0 && std::isfinite(dt), Error::Kind::InvalidInput, "time grid: dt must be positive");
    require(n_steps >= 1, Error::Kind::InvalidInput, "time grid: n_steps must be >= 1");
    require(std::isfinite(t0), Error::Kind::InvalidInput, "time grid: t0 must be finite");
}

Trajectory::Trajectory(TimeGrid grid, Eigen::Index dim)
    : grid_(grid), values_(Mat::Zero(dim, grid.n_steps))
{
    grid_.validate();
}

Trajectory::Trajectory(TimeGrid grid, Mat values) : grid_(grid), values_(std::move(values))
{
    grid_.validate();
    require(values_.cols() == grid_.n_steps, Error::Kind::DimensionMismatch,
            "trajectory: column count must equal n_steps");
}

Trajectory Trajectory::constant(TimeGrid grid, const Vec& value)
{
    Trajectory out(grid, value.size());
    out.values_.colwise() = value;
    return out;
}

void Trajectory::check_compatible(const Trajectory& other) const
{
    require(grid_ == other.grid_ && dim() == other.dim(), Error::Kind::DimensionMismatch,
            "trajectory: incompatible grids or dimensions");
}

Trajectory& Trajectory::operator+=(const Trajectory& other)
{
    check_compatible(other);
    values_ += other.values_;
    return *this;
}

Trajectory& Trajectory::operator-=(const Trajectory& other)
{
    check_compatible(other);
    values_ -= other.values_;
    return *this;
}

Trajectory& Trajectory::operator*=(double s)
{
    values_ *= s;
    return *this;
}

double weighted_inner(const Trajectory& a, const Trajectory& b)
{
    require(a.grid() == b.grid() && a.dim() == b.dim(), Error::Kind::DimensionMismatch,
            "weighted_inner: incompatible trajectories");
    double sum = 0.0;
    for (int n = 0; n < a.steps(); ++n) {
        sum += a.grid().weight(n) * a.step(n).dot(b.step(n));
    }
    return sum;
}

double weighted_norm(const Trajectory& traj)
{
    double sum = 0.0;
    for (int n = 0; n < traj.steps(); ++n) {
        sum += traj.grid().weight(n) * traj.step(n).squaredNorm();
    }
    return std::sqrt(sum);
}

Trajectory integrate_causal(const Trajectory& traj)
{
    Trajectory out(traj.grid(), traj.dim());
    const double dt = traj.grid().dt;
    Vec acc = Vec::Zero(traj.dim());
    for (int n = 0; n < traj.steps(); ++n) {
        acc += dt * traj.step(n);
        out.step(n) = acc;
    }
    return out;
}

Trajectory differentiate_causal(const Trajectory& traj)
{
    Trajectory out(traj.grid(), traj.dim());
    const double dt = traj.grid().dt;
    out.step(0) = traj.step(0) / dt;
    for (int n = 1; n < traj.steps(); ++n) {
        out.step(n) = (traj.step(n) - traj.step(n - 1)) / dt;
    }
    return out;
}

Trajectory cutoff(const Trajectory& traj, double a, CutSide side)
{
    Trajectory out = traj;
    for (int n = 0; n < traj.steps(); ++n) {
        const bool after = traj.grid().time(n) >= a;
        const bool keep = (side == CutSide::After) ? after : !after;
        if (!keep) {
            out.step(n).setZero();
        }
    }
    return out;
}

double causality_defect(const SolverFn& solve, const Trajectory& F0, double a)
{
    const Trajectory response = solve(cutoff(F0, a, CutSide::After));
    return weighted_norm(cutoff(response, a, CutSide::Before));
}

} // namespace piezo
