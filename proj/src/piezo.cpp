#include "piezo/piezo.hpp"

#include <random>

namespace piezo {

namespace {

DiscreteOperator unit_op(const SpMat& m, const std::string& dom, const std::string& cod)
{
    return DiscreteOperator(m, dom, cod, Vec::Ones(m.cols()), Vec::Ones(m.rows()));
}

std::vector<int> iota(int offset, int n)
{
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = offset + i;
    }
    return out;
}

std::vector<int> shifted(const std::vector<int>& idx, int offset)
{
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[i] = idx[i] + offset;
    }
    return out;
}

// Columns of the identity: full x |idx|.
SpMat selection(int full, const std::vector<int>& idx)
{
    SpMat P(full, static_cast<Eigen::Index>(idx.size()));
    Triplets t;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        t.emplace_back(idx[j], static_cast<int>(j), 1.0);
    }
    P.setFromTriplets(t.begin(), t.end());
    return P;
}

RationalFamily restrict_family(const RationalFamily& f, const SpMat& P)
{
    RationalFamily out;
    const SpMat Pt = SpMat(P.transpose());
    out.instant = Pt * f.instant * P;
    for (const auto& b : f.blocks) {
        ResolventBlock nb = b;
        nb.B1 = Pt * b.B1;
        nb.B2 = b.B2 * P;
        out.blocks.push_back(std::move(nb));
    }
    return out;
}

// iota^* in scaled coordinates: basis^T K W^{-1/2}.
Mat scaled_projection(const BoundarySpace& bs)
{
    const Vec inv_sqrt = bs.parent.dom_weights.cwiseSqrt().cwiseInverse();
    return (bs.basis.transpose() * bs.metric) * inv_sqrt.asDiagonal();
}

struct FullLayout {
    int nv, nT, nE, nH;
    int oT() const { return nv; }
    int oE() const { return nv + nT; }
    int oH() const { return nv + nT + nE; }
    int size() const { return nv + nT + nE + nH; }
};

FullLayout full_layout(const Discretization& d)
{
    return {d.v().size(), d.T().size(), d.E().size(), d.H().size()};
}

void fill_full(PiezoSystem& s, const Coefficients& coeffs)
{
    const Discretization& d = *s.disc;
    s.M0_full = assemble_M0(coeffs, d);
    s.M1_full = assemble_M1(coeffs, d);
    const FullLayout L = full_layout(d);
    const SpMat Gs = scaled_grad(d);
    const SpMat Cs = scaled_curl(d);
    std::vector<Vec> slots = {Vec::Ones(L.nv), Vec::Ones(L.nT), Vec::Ones(L.nE), Vec::Ones(L.nH)};
    s.A_full = assemble_skew_block(slots, {{1, 0, unit_op(-Gs, "v", "T")}, {3, 2, unit_op(Cs, "E", "H")}}).matrix;
}

} // namespace

LeontovichParams random_leontovich_params(int nb_grad, int nb_curl, double q_scale, double alpha_scale, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    LeontovichParams p;
    p.Q.resize(nb_grad, nb_curl);
    for (int i = 0; i < nb_grad; ++i) {
        for (int j = 0; j < nb_curl; ++j) {
            p.Q(i, j) = nd(gen);
        }
    }
    if (nb_curl > 0) {
        p.Q *= q_scale / std::sqrt(static_cast<double>(nb_curl));
    }
    Mat X(nb_grad, nb_grad);
    for (int i = 0; i < nb_grad; ++i) {
        for (int j = 0; j < nb_grad; ++j) {
            X(i, j) = nd(gen);
        }
    }
    p.alpha = nb_grad > 0 ? Mat(alpha_scale * X * X.transpose() / nb_grad) : Mat(0, 0);
    return p;
}

SpMat scaled_grad(const Discretization& disc)
{
    return disc.grad.full.normalized();
}

SpMat scaled_curl(const Discretization& disc)
{
    return disc.curl.full.normalized();
}

PiezoSystem build_dirichlet_system(const GridSpec& grid, const Coefficients& coeffs)
{
    PiezoSystem s;
    s.mode = BoundaryMode::Dirichlet;
    s.disc = std::make_shared<const Discretization>(make_discretization(grid));
    fill_full(s, coeffs);
    const Discretization& d = *s.disc;
    const FullLayout L = full_layout(d);
    const std::vector<int> v_in = d.grad.mask.interior_dofs();
    const std::vector<int> E_in = d.curl.mask.interior_dofs();

    std::vector<int> keep = v_in;
    for (int i : iota(L.oT(), L.nT)) {
        keep.push_back(i);
    }
    for (int i : shifted(E_in, L.oE())) {
        keep.push_back(i);
    }
    for (int i : iota(L.oH(), L.nH)) {
        keep.push_back(i);
    }
    const SpMat P = selection(L.size(), keep);
    s.evo.M0 = SpMat(P.transpose()) * s.M0_full * P;
    s.evo.M1 = restrict_family(s.M1_full, P);

    const SpMat Ghom = select_cols(scaled_grad(d), v_in);
    const SpMat Chom = select_cols(scaled_curl(d), E_in);
    const int nvi = static_cast<int>(v_in.size());
    const int nEi = static_cast<int>(E_in.size());
    std::vector<Vec> slots = {Vec::Ones(nvi), Vec::Ones(L.nT), Vec::Ones(nEi), Vec::Ones(L.nH)};
    s.evo.A = assemble_skew_block(slots, {{1, 0, unit_op(-Ghom, "v", "T")}, {3, 2, unit_op(Chom, "E", "H")}}).matrix;
    s.evo.layout = StateLayout({{"v", nvi}, {"T", L.nT}, {"E", nEi}, {"H", L.nH}});
    s.evo.validate();
    return s;
}

PiezoSystem build_leontovich_system(const GridSpec& grid, const Coefficients& coeffs, const LeontovichParams& params)
{
    return build_leontovich_system(grid, coeffs, params,
                                   std::make_shared<const BoundaryPairData>(boundary_pair(grid, PairKind::Grad)),
                                   std::make_shared<const BoundaryPairData>(boundary_pair(grid, PairKind::Curl)));
}

PiezoSystem build_leontovich_system(const GridSpec& grid, const Coefficients& coeffs, const LeontovichParams& params,
                                    std::shared_ptr<const BoundaryPairData> grad_bd,
                                    std::shared_ptr<const BoundaryPairData> curl_bd)
{
    PiezoSystem s;
    s.mode = BoundaryMode::Leontovich;
    s.disc = std::make_shared<const Discretization>(make_discretization(grid));
    s.grad_bd = std::move(grad_bd);
    s.curl_bd = std::move(curl_bd);
    s.params = params;
    fill_full(s, coeffs);
    const Discretization& d = *s.disc;
    const FullLayout L = full_layout(d);
    const int nbG = s.grad_bd->primal.dim();
    const int nbE = s.curl_bd->primal.dim();
    require(params.Q.rows() == nbG && params.Q.cols() == nbE, Error::Kind::DimensionMismatch,
            "build_leontovich_system: Q must be nb_Grad x nb_curl");
    require(params.alpha.rows() == nbG && params.alpha.cols() == nbG, Error::Kind::DimensionMismatch,
            "build_leontovich_system: alpha must be nb_Grad x nb_Grad");
    require(params.Q.allFinite() && params.alpha.allFinite(), Error::Kind::InvalidInput,
            "build_leontovich_system: non-finite Q or alpha");
    s.proj_v = scaled_projection(s.grad_bd->primal);
    s.proj_E = scaled_projection(s.curl_bd->primal);

    s.evo.layout = StateLayout(
        {{"v", L.nv}, {"T", L.nT}, {"tau_T", nbG}, {"E", L.nE}, {"H", L.nH}, {"tau_H", nbE}});
    const auto& lay = s.evo.layout;
    const int n = static_cast<int>(lay.size());
    const int otT = static_cast<int>(lay.block("tau_T").offset);
    const int otH = static_cast<int>(lay.block("tau_H").offset);
    const int oE = static_cast<int>(lay.block("E").offset);

    // (v, T, E, H) -> extended positions.
    std::vector<int> map = iota(0, L.nv + L.nT);
    for (int i : iota(oE, L.nE + L.nH)) {
        map.push_back(i);
    }
    const SpMat P = selection(n, map);
    s.evo.M0 = P * s.M0_full * SpMat(P.transpose());
    RationalFamily base = embed_family(s.M1_full, n, map);
    std::vector<int> tau_map = iota(otH, nbE);
    for (int i : iota(otT, nbG)) {
        tau_map.push_back(i);
    }
    const RationalFamily bfam = boundary_family(params.Q, params.alpha, s.curl_bd->square.matrix);
    s.boundary_block = static_cast<int>(base.blocks.size());
    s.evo.M1 = sum_families(base, embed_family(bfam, n, tau_map));

    const SpMat Gs = scaled_grad(d);
    const SpMat Cs = scaled_curl(d);
    std::vector<Vec> slots = {Vec::Ones(L.nv), Vec::Ones(L.nT), Vec::Ones(nbG),
                              Vec::Ones(L.nE), Vec::Ones(L.nH), Vec::Ones(nbE)};
    std::vector<BlockEntry> blocks = {{1, 0, unit_op(-Gs, "v", "T")}, {4, 3, unit_op(Cs, "E", "H")}};
    if (nbG > 0) {
        blocks.push_back({2, 0, unit_op(s.proj_v.sparseView(0.0, 0.0), "v", "tau_T")});
    }
    if (nbE > 0) {
        blocks.push_back({5, 3, unit_op(s.proj_E.sparseView(0.0, 0.0), "E", "tau_H")});
    }
    s.evo.A = assemble_skew_block(slots, blocks).matrix;
    s.evo.validate();
    return s;
}

void attach_boundary_spaces(PiezoSystem& system)
{
    const GridSpec& g = system.disc->grid;
    if (!system.grad_bd) {
        system.grad_bd = std::make_shared<const BoundaryPairData>(boundary_pair(g, PairKind::Grad));
    }
    if (!system.curl_bd) {
        system.curl_bd = std::make_shared<const BoundaryPairData>(boundary_pair(g, PairKind::Curl));
    }
    system.proj_v = scaled_projection(system.grad_bd->primal);
    system.proj_E = scaled_projection(system.curl_bd->primal);
}

Vec boundary_residual(const PiezoSystem& system, const SolveReport& report, const Trajectory& F)
{
    require(system.mode == BoundaryMode::Leontovich, Error::Kind::InvalidInput,
            "boundary_residual: not a Leontovich system");
    const auto& lay = system.evo.layout;
    const auto& bT = lay.block("tau_T");
    const auto& bH = lay.block("tau_H");
    const auto& blk = system.evo.M1.blocks[system.boundary_block];
    const Trajectory& w = report.aux[system.boundary_block];
    const int N = report.trajectory.steps();
    Vec out(N);
    for (int n = 0; n < N; ++n) {
        const Vec u = report.trajectory.step(n);
        const Vec f = F.step(n);
        // The base family has no tau rows, so the tau rows of M1 are exactly S.
        const Vec Sw = blk.B1 * Vec(w.step(n));
        Vec rH = u.segment(bH.offset, bH.size) + Sw.segment(bH.offset, bH.size) +
                 system.proj_E * lay.segment(u, "E") - f.segment(bH.offset, bH.size);
        Vec rT = Sw.segment(bT.offset, bT.size) + system.proj_v * lay.segment(u, "v") - f.segment(bT.offset, bT.size);
        out[n] = rH.norm() + rT.norm();
    }
    return out;
}

std::pair<Vec, Vec> tau_consistency(const PiezoSystem& system, const Trajectory& U)
{
    require(system.mode == BoundaryMode::Leontovich, Error::Kind::InvalidInput,
            "tau_consistency: not a Leontovich system");
    const auto& lay = system.evo.layout;
    const BoundarySpace& BD = system.grad_bd->dual;
    const BoundarySpace& BH = system.curl_bd->dual;
    const Mat projT = scaled_projection(BD);
    const Mat projH = scaled_projection(BH);
    Vec eT(U.steps()), eH(U.steps());
    for (int n = 0; n < U.steps(); ++n) {
        const Vec u = U.step(n);
        const Vec tT = system.grad_bd->backward.matrix * (projT * lay.segment(u, "T"));
        const Vec tH = system.curl_bd->forward.matrix.transpose() * (projH * lay.segment(u, "H"));
        eT[n] = (lay.segment(u, "tau_T") - tT).norm();
        eH[n] = (lay.segment(u, "tau_H") - tH).norm();
    }
    return {eT, eH};
}

Trajectory LiftedProblem::reconstruct(const Trajectory& U) const
{
    require(U.grid() == lift.grid() && U.dim() == extension.cols(), Error::Kind::DimensionMismatch,
            "reconstruct: trajectory does not match the lifted problem");
    Mat full = extension * U.values();
    return Trajectory(U.grid(), Mat(full + lift.values()));
}

LiftedProblem lift_boundary_data(const PiezoSystem& system, const BoundaryData& data, const Trajectory& F)
{
    require(system.mode != BoundaryMode::Leontovich, Error::Kind::InvalidInput,
            "lift_boundary_data: needs the homogeneous Dirichlet system");
    require(system.grad_bd && system.curl_bd, Error::Kind::InvalidInput,
            "lift_boundary_data: boundary spaces not attached");
    const TimeGrid& tg = F.grid();
    require(data.v_bnd.grid() == tg && data.E_bnd.grid() == tg, Error::Kind::DimensionMismatch,
            "lift_boundary_data: boundary data on a different time grid");
    require(F.dim() == system.evo.size(), Error::Kind::DimensionMismatch, "lift_boundary_data: source size mismatch");
    const Discretization& d = *system.disc;
    const FullLayout L = full_layout(d);
    const BoundarySpace& BG = system.grad_bd->primal;
    const BoundarySpace& BE = system.curl_bd->primal;
    require(data.v_bnd.dim() == BG.dim() && data.E_bnd.dim() == BE.dim(), Error::Kind::DimensionMismatch,
            "lift_boundary_data: coefficient count mismatch");

    const Vec sv = d.v().weights().cwiseSqrt();
    const Vec sE = d.E().weights().cwiseSqrt();
    Trajectory lift(tg, L.size());
    for (int n = 0; n < tg.n_steps; ++n) {
        lift.step(n).segment(0, L.nv) = sv.cwiseProduct(embed(BG, data.v_bnd.step(n)));
        lift.step(n).segment(L.oE(), L.nE) = sE.cwiseProduct(embed(BE, data.E_bnd.step(n)));
    }
    const auto aux = auxiliary_states(system.M1_full, lift);

    std::vector<int> keep = d.grad.mask.interior_dofs();
    for (int i : iota(L.oT(), L.nT)) {
        keep.push_back(i);
    }
    for (int i : shifted(d.curl.mask.interior_dofs(), L.oE())) {
        keep.push_back(i);
    }
    for (int i : iota(L.oH(), L.nH)) {
        keep.push_back(i);
    }
    LiftedProblem out;
    out.extension = selection(L.size(), keep);
    out.lift = lift;
    out.rhs = F;
    const SpMat Pt = SpMat(out.extension.transpose());
    Vec prev = Vec::Zero(L.size());
    for (int n = 0; n < tg.n_steps; ++n) {
        const Vec u = lift.step(n);
        Vec full = system.M0_full * ((u - prev) / tg.dt) + system.M1_full.instant * u + system.A_full * u;
        for (std::size_t k = 0; k < aux.size(); ++k) {
            full += system.M1_full.blocks[k].B1 * Vec(aux[k].step(n));
        }
        out.rhs.step(n) -= Pt * full;
        prev = u;
    }
    return out;
}

LiftedProblem lift_initial_data(const EvoSystem& system, const Vec& U0, const Trajectory& F)
{
    require(U0.size() == system.size() && F.dim() == system.size(), Error::Kind::DimensionMismatch,
            "lift_initial_data: size mismatch");
    const TimeGrid& tg = F.grid();
    LiftedProblem out;
    out.lift = Trajectory::constant(tg, U0);
    out.extension = sparse_diag(Vec::Ones(system.size()));
    out.rhs = F;
    const auto aux = auxiliary_states(system.M1, out.lift);
    const Vec base = system.M1.instant * U0 + system.A * U0;
    for (int n = 0; n < tg.n_steps; ++n) {
        Vec m1 = base;
        for (std::size_t k = 0; k < aux.size(); ++k) {
            m1 += system.M1.blocks[k].B1 * Vec(aux[k].step(n));
        }
        out.rhs.step(n) -= m1;
    }
    return out;
}

Vec nodal_field(const PiezoSystem& system, const Vec& state, const std::string& name)
{
    const Discretization& d = *system.disc;
    const auto& lay = system.evo.layout;
    require(state.size() == lay.size(), Error::Kind::DimensionMismatch, "nodal_field: state size mismatch");
    const Vec seg = lay.segment(state, name);
    if (name == "tau_T" || name == "tau_H") {
        return seg;
    }
    const FieldSpace* fs = nullptr;
    const DofMask* mask = nullptr;
    if (name == "v") {
        fs = &d.v();
        mask = &d.grad.mask;
    } else if (name == "E") {
        fs = &d.E();
        mask = &d.curl.mask;
    } else if (name == "T") {
        fs = &d.T();
    } else if (name == "H") {
        fs = &d.H();
    } else {
        throw Error(Error::Kind::InvalidInput, "nodal_field: unknown field " + name);
    }
    Vec full = seg;
    if (mask && seg.size() != fs->size()) {
        full = mask->extension() * seg;
    }
    return full.cwiseQuotient(fs->weights().cwiseSqrt());
}

Vec nodal_field_full(const PiezoSystem& system, const Vec& full_state, const std::string& name)
{
    const Discretization& d = *system.disc;
    const FullLayout L = full_layout(d);
    require(full_state.size() == L.size(), Error::Kind::DimensionMismatch, "nodal_field_full: size mismatch");
    if (name == "v") {
        return full_state.segment(0, L.nv).cwiseQuotient(d.v().weights().cwiseSqrt());
    }
    if (name == "T") {
        return full_state.segment(L.oT(), L.nT).cwiseQuotient(d.T().weights().cwiseSqrt());
    }
    if (name == "E") {
        return full_state.segment(L.oE(), L.nE).cwiseQuotient(d.E().weights().cwiseSqrt());
    }
    if (name == "H") {
        return full_state.segment(L.oH(), L.nH).cwiseQuotient(d.H().weights().cwiseSqrt());
    }
    throw Error(Error::Kind::InvalidInput, "nodal_field_full: unknown field " + name);
}

} // namespace piezo
