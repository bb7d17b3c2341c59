#include "piezo/evosolve.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace piezo {

namespace {

struct BlockStep {
    Mat Rdt;     // (G + alpha dt)^{-1}
    Mat Rdt_alpha; // Rdt alpha
};

std::vector<BlockStep> block_steps(const RationalFamily& M1, double dt)
{
    std::vector<BlockStep> out;
    for (const auto& b : M1.blocks) {
        BlockStep s;
        const Mat K = b.G + dt * b.alpha;
        Eigen::FullPivLU<Mat> lu(K);
        require(lu.isInvertible(), Error::Kind::Singular, "solve: G + alpha dt is singular");
        s.Rdt = lu.inverse();
        s.Rdt_alpha = s.Rdt * b.alpha;
        out.push_back(std::move(s));
    }
    return out;
}

SpMat effective_M1(const RationalFamily& M1, const std::vector<BlockStep>& steps)
{
    SpMat out = M1.instant;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        out += M1.blocks[k].B1 * SpMat(steps[k].Rdt.sparseView(0.0, 0.0)) * M1.blocks[k].B2;
    }
    return out;
}

std::string where(const EvoSystem& s, double nu, double dt)
{
    std::ostringstream os;
    os << " (n = " << s.size() << ", nu = " << nu << ", dt = " << dt << ")";
    return os.str();
}

} // namespace

PosdefReport certify(EvoSystem& system, const std::vector<double>& nu_range)
{
    const PosdefReport r = check_posdef(system.M0, system.M1, nu_range);
    system.c0 = r.c0;
    system.certified = r.well_posed;
    return r;
}

SpMat step_symmetric_part(const EvoSystem& system, double dt)
{
    const SpMat m = system.M0 / dt + effective_M1(system.M1, block_steps(system.M1, dt));
    return 0.5 * (m + SpMat(m.transpose()));
}

SolveReport solve(const EvoSystem& system, const Trajectory& F, const SolveOptions& options)
{
    system.validate();
    const TimeGrid& tg = F.grid();
    require(F.dim() == system.size(), Error::Kind::DimensionMismatch, "solve: source dimension mismatch");
    require(system.certified || options.allow_uncertified, Error::Kind::InvalidInput,
            "solve: system is not certified (c0 <= 0); set the override to solve anyway");
    const double dt = tg.dt;
    const auto steps = block_steps(system.M1, dt);
    const SpMat M0dt = system.M0 / dt;
    SpMat K = M0dt + effective_M1(system.M1, steps) + system.A;
    K.makeCompressed();

    if (system.certified) {
        Eigen::SimplicialLLT<SpMat> llt(step_symmetric_part(system, dt));
        require(llt.info() == Eigen::Success, Error::Kind::Singular,
                "solve: symmetric part of the step matrix is not positive definite" + where(system, tg.nu, dt));
    }
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(K);
    lu.factorize(K);
    require(lu.info() == Eigen::Success, Error::Kind::Singular, "solve: step matrix is singular" + where(system, tg.nu, dt));

    SolveReport rep;
    rep.trajectory = Trajectory(tg, system.size());
    std::vector<Vec> Jw;
    for (const auto& b : system.M1.blocks) {
        rep.aux.emplace_back(tg, b.G.rows());
        rep.aux_integral.emplace_back(tg, b.G.rows());
        Jw.push_back(Vec::Zero(b.G.rows()));
    }
    Vec prev = Vec::Zero(system.size());
    for (int n = 0; n < tg.n_steps; ++n) {
        Vec rhs = F.step(n) + M0dt * prev;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            rhs += system.M1.blocks[k].B1 * (steps[k].Rdt_alpha * Jw[k]);
        }
        Vec u = lu.solve(rhs);
        require(lu.info() == Eigen::Success && u.allFinite(), Error::Kind::Singular,
                "solve: step solve failed" + where(system, tg.nu, dt));
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const auto& b = system.M1.blocks[k];
            const Vec w = steps[k].Rdt * (b.B2 * u - b.alpha * Jw[k]);
            Jw[k] += dt * w;
            rep.aux[k].step(n) = w;
            rep.aux_integral[k].step(n) = Jw[k];
        }
        rep.trajectory.step(n) = u;
        prev = u;
    }
    rep.stability_ratio = stability_ratio(rep, F, tg.nu);
    rep.residual_max = residual(system, rep, F);
    return rep;
}

SolverFn make_solver(const EvoSystem& system, const SolveOptions& options)
{
    return [system, options](const Trajectory& F) { return solve(system, F, options).trajectory; };
}

double stability_ratio(const SolveReport& report, const Trajectory& F, double nu)
{
    TimeGrid g = F.grid();
    g.nu = nu;
    const double f = weighted_norm(Trajectory(g, F.values()));
    if (f == 0.0) {
        return 0.0;
    }
    return weighted_norm(Trajectory(g, report.trajectory.values())) / f;
}

std::vector<Trajectory> auxiliary_states(const RationalFamily& M1, const Trajectory& U)
{
    const TimeGrid& tg = U.grid();
    const auto steps = block_steps(M1, tg.dt);
    std::vector<Trajectory> out;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& b = M1.blocks[k];
        Trajectory w(tg, b.G.rows());
        Vec Jw = Vec::Zero(b.G.rows());
        for (int n = 0; n < tg.n_steps; ++n) {
            const Vec wn = steps[k].Rdt * (b.B2 * Vec(U.step(n)) - b.alpha * Jw);
            Jw += tg.dt * wn;
            w.step(n) = wn;
        }
        out.push_back(std::move(w));
    }
    return out;
}

Vec step_residuals(const EvoSystem& system, const Trajectory& U, const Trajectory& F)
{
    require(U.grid() == F.grid() && U.dim() == system.size() && F.dim() == system.size(), Error::Kind::DimensionMismatch,
            "residual: shape mismatch");
    const TimeGrid& tg = U.grid();
    const auto aux = auxiliary_states(system.M1, U);
    Vec out(tg.n_steps);
    Vec prev = Vec::Zero(system.size());
    for (int n = 0; n < tg.n_steps; ++n) {
        const Vec u = U.step(n);
        Vec r = system.M0 * ((u - prev) / tg.dt) + system.M1.instant * u + system.A * u - F.step(n);
        for (std::size_t k = 0; k < aux.size(); ++k) {
            r += system.M1.blocks[k].B1 * Vec(aux[k].step(n));
        }
        out[n] = r.norm() / (1.0 + F.step(n).norm());
        prev = u;
    }
    return out;
}

double residual(const EvoSystem& system, const SolveReport& report, const Trajectory& F)
{
    const Vec r = step_residuals(system, report.trajectory, F);
    return r.size() ? r.maxCoeff() : 0.0;
}

Trajectory dense_auxiliary_oracle(const ResolventBlock& block, const Trajectory& input)
{
    const TimeGrid& tg = input.grid();
    const Eigen::Index m = block.G.rows();
    require(input.dim() == m, Error::Kind::DimensionMismatch, "dense_auxiliary_oracle: input size mismatch");
    const Eigen::Index N = tg.n_steps;
    // (I_N (x) G + J (x) alpha) w = g, J lower triangular with entries dt.
    Mat big = Mat::Zero(N * m, N * m);
    for (Eigen::Index n = 0; n < N; ++n) {
        big.block(n * m, n * m, m, m) += block.G;
        for (Eigen::Index j = 0; j <= n; ++j) {
            big.block(n * m, j * m, m, m) += tg.dt * block.alpha;
        }
    }
    const Vec g = Eigen::Map<const Vec>(input.values().data(), N * m);
    const Vec w = big.partialPivLu().solve(g);
    return Trajectory(tg, Mat(Eigen::Map<const Mat>(w.data(), m, N)));
}

Trajectory centred_reference_solve(const EvoSystem& system, const Trajectory& F)
{
    const TimeGrid& tg = F.grid();
    const Eigen::Index n = system.size();
    const Eigen::Index N = tg.n_steps;
    const SpMat L = system.M1.evaluate(0.0) + system.A;
    Triplets t;
    auto put = [&](const SpMat& m, Eigen::Index bi, Eigen::Index bj, double s) {
        for (int k = 0; k < m.outerSize(); ++k) {
            for (SpMat::InnerIterator it(m, k); it; ++it) {
                t.emplace_back(bi * n + it.row(), bj * n + it.col(), s * it.value());
            }
        }
    };
    for (Eigen::Index k = 0; k < N; ++k) {
        put(L, k, k, 1.0);
        if (k + 1 < N) {
            // M0 (U_{k+1} - U_{k-1}) / (2 dt), U_{-1} = 0
            put(system.M0, k, k + 1, 0.5 / tg.dt);
            if (k > 0) {
                put(system.M0, k, k - 1, -0.5 / tg.dt);
            }
        } else {
            put(system.M0, k, k, 1.0 / tg.dt);
            if (k > 0) {
                put(system.M0, k, k - 1, -1.0 / tg.dt);
            }
        }
    }
    SpMat big(n * N, n * N);
    big.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMat> lu(big);
    require(lu.info() == Eigen::Success, Error::Kind::Singular, "centred_reference_solve: global system singular");
    const Vec rhs = Eigen::Map<const Vec>(F.values().data(), n * N);
    const Vec u = lu.solve(rhs);
    return Trajectory(tg, Mat(Eigen::Map<const Mat>(u.data(), n, N)));
}

} // namespace piezo
