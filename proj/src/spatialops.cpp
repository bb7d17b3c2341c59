#include "piezo/spatialops.hpp"

#include <cmath>
#include <ostream>
#include <set>

namespace piezo {

namespace {

void check_weights(const Vec& w, Eigen::Index n, const char* what)
{
    require(w.size() == n, Error::Kind::DimensionMismatch, std::string(what) + ": weight size mismatch");
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        require(w[i] > 0.0 && std::isfinite(w[i]), Error::Kind::InvalidInput,
                std::string(what) + ": weights must be positive");
    }
}

bool same_weights(const Vec& a, const Vec& b)
{
    return a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + a.cwiseAbs().maxCoeff());
}

} // namespace

DiscreteOperator::DiscreteOperator(SpMat m, std::string dom, std::string cod, Vec wd, Vec wc)
    : matrix(std::move(m)), dom_space(std::move(dom)), cod_space(std::move(cod)), dom_weights(std::move(wd)),
      cod_weights(std::move(wc))
{
    validate();
}

void DiscreteOperator::validate() const
{
    check_weights(dom_weights, matrix.cols(), "DiscreteOperator domain");
    check_weights(cod_weights, matrix.rows(), "DiscreteOperator codomain");
}

Vec DiscreteOperator::apply(const Vec& x) const
{
    require(x.size() == cols(), Error::Kind::DimensionMismatch, "DiscreteOperator::apply: size mismatch");
    return matrix * x;
}

DiscreteOperator DiscreteOperator::weighted_adjoint() const
{
    SpMat adj = sparse_diag(dom_weights.cwiseInverse()) * SpMat(matrix.transpose()) * sparse_diag(cod_weights);
    return DiscreteOperator(std::move(adj), cod_space, dom_space, cod_weights, dom_weights);
}

SpMat DiscreteOperator::normalized() const
{
    return sparse_diag(cod_weights.cwiseSqrt()) * matrix * sparse_diag(dom_weights.cwiseSqrt().cwiseInverse());
}

DiscreteOperator DiscreteOperator::zero(std::string dom, std::string cod, Vec wd, Vec wc)
{
    SpMat m(wc.size(), wd.size());
    return DiscreteOperator(std::move(m), std::move(dom), std::move(cod), std::move(wd), std::move(wc));
}

void write_coordinate(std::ostream& os, const SpMat& m)
{
    const auto old = os.precision(17);
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
    os.precision(old);
}

std::vector<int> DofMask::interior_dofs() const
{
    std::vector<char> flag(full_size, 0);
    for (int b : boundary_dofs) {
        flag[b] = 1;
    }
    std::vector<int> out;
    for (int i = 0; i < full_size; ++i) {
        if (!flag[i]) {
            out.push_back(i);
        }
    }
    return out;
}

SpMat DofMask::extension() const
{
    validate();
    const std::vector<int> inner = interior_dofs();
    SpMat ext(full_size, static_cast<Eigen::Index>(inner.size()));
    Triplets t;
    for (std::size_t j = 0; j < inner.size(); ++j) {
        t.emplace_back(inner[j], static_cast<int>(j), 1.0);
    }
    ext.setFromTriplets(t.begin(), t.end());
    return ext;
}

void DofMask::validate() const
{
    std::set<int> seen;
    for (int b : boundary_dofs) {
        require(b >= 0 && b < full_size, Error::Kind::DimensionMismatch, "DofMask: index out of range");
        require(seen.insert(b).second, Error::Kind::InvalidInput, "DofMask: duplicate index");
    }
}

SpMat sparse_diag(const Vec& d)
{
    SpMat m(d.size(), d.size());
    Triplets t;
    t.reserve(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        t.emplace_back(i, i, d[i]);
    }
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat select_rows(const SpMat& m, const std::vector<int>& rows)
{
    SpMat sel(static_cast<Eigen::Index>(rows.size()), m.rows());
    Triplets t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.emplace_back(static_cast<int>(i), rows[i], 1.0);
    }
    sel.setFromTriplets(t.begin(), t.end());
    return sel * m;
}

SpMat select_cols(const SpMat& m, const std::vector<int>& cols)
{
    SpMat sel(m.cols(), static_cast<Eigen::Index>(cols.size()));
    Triplets t;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        t.emplace_back(cols[j], static_cast<int>(j), 1.0);
    }
    sel.setFromTriplets(t.begin(), t.end());
    return m * sel;
}

Vec select(const Vec& v, const std::vector<int>& idx)
{
    Vec out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    }
    return out;
}

std::vector<std::pair<int, int>> sym_component_pairs(int dim)
{
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < dim; ++i) {
        out.emplace_back(i, i);
    }
    if (dim == 2) {
        out.emplace_back(0, 1);
    } else if (dim == 3) {
        out.emplace_back(1, 2);
        out.emplace_back(0, 2);
        out.emplace_back(0, 1);
    }
    return out;
}

SpMat sym_grad_matrix(const FieldSpace& nodes, const FieldSpace& strain)
{
    const GridSpec& g = nodes.grid();
    const int d = g.dim;
    const auto pairs = sym_component_pairs(d);
    require(nodes.num_components() == d && strain.num_components() == static_cast<int>(pairs.size()),
            Error::Kind::DimensionMismatch, "sym_grad_matrix: component count mismatch");
    const int corners = 1 << d;
    Triplets t;
    for (int c = 0; c < strain.num_components(); ++c) {
        const auto [i, j] = pairs[c];
        // Diagonal: d_i v_i. Off-diagonal (Mandel): (d_j v_i + d_i v_j) / sqrt(2).
        const double f = (i == j) ? 1.0 : std::sqrt(0.5);
        const FieldComponent& sc = strain.component(c);
        for (int row_local = 0; row_local < sc.size(); ++row_local) {
            const Index3 cell = sc.lattice.point(sc.point_of_dof[row_local]);
            const int row = sc.offset + row_local;
            for (int o = 0; o < corners; ++o) {
                Index3 p = cell;
                for (int a = 0; a < d; ++a) {
                    p[a] += (o >> a) & 1;
                }
                auto add = [&](int comp, int axis) {
                    const double s = ((o >> axis) & 1) ? 1.0 : -1.0;
                    const double val = f * s / (g.h[axis] * (corners / 2));
                    t.emplace_back(row, nodes.component(comp).dof(p), val);
                };
                add(i, j);
                if (i != j) {
                    add(j, i);
                }
            }
        }
    }
    SpMat m(strain.size(), nodes.size());
    m.setFromTriplets(t.begin(), t.end());
    m.prune(0.0);
    return m;
}

SpMat curl_matrix(const FieldSpace& edges, const FieldSpace& faces)
{
    const GridSpec& g = edges.grid();
    require(edges.num_components() == 3 && faces.num_components() == 3, Error::Kind::DimensionMismatch,
            "curl_matrix: need 3-component edge and face spaces");
    Triplets t;
    for (int i = 0; i < 3; ++i) {
        const FieldComponent& hc = faces.component(i);
        for (int s = 1; s <= 2; ++s) {
            // (curl E)_i = d_j E_k - d_k E_j for (i,j,k) cyclic
            const int j = (i + s) % 3;
            const int k = (i + 3 - s) % 3;
            const double sign = (s == 1) ? 1.0 : -1.0;
            if (j >= g.dim) {
                continue;
            }
            const FieldComponent& ec = edges.component(k);
            for (int r = 0; r < hc.size(); ++r) {
                const Index3 q = hc.lattice.point(hc.point_of_dof[r]);
                Index3 lo = q;
                Index3 hi = q;
                hi[j] += 1;
                const int dlo = ec.dof(lo);
                const int dhi = ec.dof(hi);
                // Both endpoints touch the same active cell as the face, so they exist.
                require(dlo >= 0 && dhi >= 0, Error::Kind::Internal, "curl_matrix: missing edge dof");
                t.emplace_back(hc.offset + r, dhi, sign / g.h[j]);
                t.emplace_back(hc.offset + r, dlo, -sign / g.h[j]);
            }
        }
    }
    SpMat m(faces.size(), edges.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat cell_average_matrix(const FieldSpace& edges, const FieldSpace& cells3)
{
    const GridSpec& g = edges.grid();
    require(edges.num_components() == 3 && cells3.num_components() == 3, Error::Kind::DimensionMismatch,
            "cell_average_matrix: need 3 components");
    Triplets t;
    for (int k = 0; k < 3; ++k) {
        const FieldComponent& ec = edges.component(k);
        const FieldComponent& cc = cells3.component(k);
        std::vector<int> axes;
        for (int a = 0; a < g.dim; ++a) {
            if (a != k) {
                axes.push_back(a);
            }
        }
        const int corners = 1 << axes.size();
        for (int r = 0; r < cc.size(); ++r) {
            const Index3 cell = cc.lattice.point(cc.point_of_dof[r]);
            for (int o = 0; o < corners; ++o) {
                Index3 p = cell;
                for (std::size_t b = 0; b < axes.size(); ++b) {
                    p[axes[b]] += (o >> b) & 1;
                }
                const int col = ec.dof(p);
                require(col >= 0, Error::Kind::Internal, "cell_average_matrix: missing edge dof");
                t.emplace_back(cc.offset + r, col, 1.0 / corners);
            }
        }
    }
    SpMat m(cells3.size(), edges.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

namespace {

// One separable pass along `axis`, flipping the stagger bit. Works on full-lattice
// point indices; `avail` marks which source points carry data.
SpMat interpolation_pass(const GridSpec& g, unsigned stagger, int axis, const std::vector<char>& avail,
                         std::vector<char>& avail_out, unsigned& stagger_out)
{
    const Lattice src = Lattice::make(g, stagger);
    stagger_out = stagger ^ (1u << axis);
    const Lattice dst = Lattice::make(g, stagger_out);
    const bool to_nodes = src.staggered(axis);
    avail_out.assign(dst.size(), 0);
    Triplets t;
    auto ok = [&](Index3 p) { return src.contains(p) && avail[src.index(p)]; };
    for (int idx = 0; idx < dst.size(); ++idx) {
        const Index3 p = dst.point(idx);
        Index3 L = p, R = p, LL = p, RR = p;
        // Sources half a spacing to the left and right of the target.
        const int l = to_nodes ? p[axis] - 1 : p[axis];
        L[axis] = l;
        R[axis] = l + 1;
        LL[axis] = l - 1;
        RR[axis] = l + 2;
        if (ok(L) && ok(R)) {
            t.emplace_back(idx, src.index(L), 0.5);
            t.emplace_back(idx, src.index(R), 0.5);
        } else if (ok(L)) {
            if (ok(LL)) {
                t.emplace_back(idx, src.index(L), 1.5);
                t.emplace_back(idx, src.index(LL), -0.5);
            } else {
                t.emplace_back(idx, src.index(L), 1.0);
            }
        } else if (ok(R)) {
            if (ok(RR)) {
                t.emplace_back(idx, src.index(R), 1.5);
                t.emplace_back(idx, src.index(RR), -0.5);
            } else {
                t.emplace_back(idx, src.index(R), 1.0);
            }
        } else {
            continue;
        }
        avail_out[idx] = 1;
    }
    SpMat m(dst.size(), src.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

} // namespace

SpMat face_to_edge_interpolation(const FieldSpace& faces, const FieldSpace& edges)
{
    const GridSpec& g = faces.grid();
    require(faces.num_components() == 3 && edges.num_components() == 3, Error::Kind::DimensionMismatch,
            "face_to_edge_interpolation: need 3 components");
    Triplets t;
    for (int k = 0; k < 3; ++k) {
        const FieldComponent& hc = faces.component(k);
        const FieldComponent& ec = edges.component(k);
        // Face dofs -> full source lattice.
        SpMat lift(hc.lattice.size(), hc.size());
        {
            Triplets lt;
            for (int r = 0; r < hc.size(); ++r) {
                lt.emplace_back(hc.point_of_dof[r], r, 1.0);
            }
            lift.setFromTriplets(lt.begin(), lt.end());
        }
        std::vector<char> avail(hc.lattice.size(), 0);
        for (int r = 0; r < hc.size(); ++r) {
            avail[hc.point_of_dof[r]] = 1;
        }
        SpMat acc = lift;
        unsigned stagger = hc.lattice.stagger;
        for (int a = 0; a < g.dim; ++a) {
            std::vector<char> next;
            unsigned s_next = 0;
            SpMat pass = interpolation_pass(g, stagger, a, avail, next, s_next);
            acc = (pass * acc).eval();
            avail.swap(next);
            stagger = s_next;
        }
        require(stagger == ec.lattice.stagger, Error::Kind::Internal, "face_to_edge_interpolation: stagger mismatch");
        std::vector<int> row_to_dof(ec.lattice.size(), -1);
        for (int r = 0; r < ec.size(); ++r) {
            row_to_dof[ec.point_of_dof[r]] = r;
        }
        for (int col = 0; col < acc.outerSize(); ++col) {
            for (SpMat::InnerIterator it(acc, col); it; ++it) {
                const int r = row_to_dof[it.row()];
                if (r >= 0) {
                    t.emplace_back(ec.offset + r, hc.offset + col, it.value());
                }
            }
        }
    }
    SpMat m(edges.size(), faces.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

OperatorPair build_pair(const GridSpec& grid, PairKind kind)
{
    grid.validate();
    OperatorPair pair;
    pair.kind = kind;
    SpMat full;
    if (kind == PairKind::Grad) {
        pair.dom_space = FieldSpace::nodal(grid, grid.dim, "v");
        pair.cod_space = FieldSpace::cellwise(grid, sym_components(grid.dim), "T");
        full = sym_grad_matrix(pair.dom_space, pair.cod_space);
    } else {
        pair.dom_space = FieldSpace::edges(grid, "E");
        pair.cod_space = FieldSpace::faces(grid, "H");
        full = curl_matrix(pair.dom_space, pair.cod_space);
    }
    const std::string dom = pair.dom_space.name();
    const std::string cod = pair.cod_space.name();
    pair.mask.boundary_dofs = pair.dom_space.boundary_dofs();
    pair.mask.full_size = pair.dom_space.size();
    const std::vector<int> inner = pair.mask.interior_dofs();
    const Vec& wd = pair.dom_space.weights();
    const Vec& wc = pair.cod_space.weights();

    pair.full = DiscreteOperator(full, dom, cod, wd, wc);
    pair.hom = DiscreteOperator(full * pair.mask.extension(), dom + "_hom", cod, select(wd, inner), wc);
    DiscreteOperator adj = pair.hom.weighted_adjoint();
    if (kind == PairKind::Grad) {
        adj.matrix = -adj.matrix;
    }
    pair.dual = std::move(adj);
    return pair;
}

double containment_check(const DiscreteOperator& hom, const DiscreteOperator& full, const DofMask& mask)
{
    mask.validate();
    require(full.cols() == mask.full_size, Error::Kind::DimensionMismatch, "containment_check: mask/full size mismatch");
    require(hom.cols() == mask.full_size - static_cast<int>(mask.boundary_dofs.size()), Error::Kind::DimensionMismatch,
            "containment_check: hom domain size mismatch");
    require(hom.rows() == full.rows(), Error::Kind::DimensionMismatch, "containment_check: codomain mismatch");
    const SpMat diff = full.matrix * mask.extension() - hom.matrix;
    double worst = 0.0;
    for (int j = 0; j < diff.outerSize(); ++j) {
        double s = 0.0;
        for (SpMat::InnerIterator it(diff, j); it; ++it) {
            s += it.value() * it.value();
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

DiscreteOperator assemble_skew_block(const std::vector<Vec>& slot_weights, const std::vector<BlockEntry>& blocks)
{
    const int nslots = static_cast<int>(slot_weights.size());
    std::vector<Eigen::Index> offset(nslots + 1, 0);
    for (int s = 0; s < nslots; ++s) {
        offset[s + 1] = offset[s] + slot_weights[s].size();
    }
    Vec w(offset[nslots]);
    for (int s = 0; s < nslots; ++s) {
        w.segment(offset[s], slot_weights[s].size()) = slot_weights[s];
    }
    std::set<std::pair<int, int>> used;
    Triplets t;
    for (const auto& b : blocks) {
        require(b.row >= 0 && b.row < nslots && b.col >= 0 && b.col < nslots, Error::Kind::DimensionMismatch,
                "assemble_skew_block: slot out of range");
        require(b.col < b.row, Error::Kind::InvalidInput, "assemble_skew_block: blocks must be strictly lower");
        require(used.insert({b.row, b.col}).second, Error::Kind::InvalidInput, "assemble_skew_block: slot collision");
        require(b.op.rows() == slot_weights[b.row].size() && b.op.cols() == slot_weights[b.col].size(),
                Error::Kind::DimensionMismatch, "assemble_skew_block: block size mismatch");
        require(same_weights(b.op.cod_weights, slot_weights[b.row]) && same_weights(b.op.dom_weights, slot_weights[b.col]),
                Error::Kind::InvalidInput, "assemble_skew_block: weight incompatibility");
        const Vec& wr = slot_weights[b.row];
        const Vec& wc = slot_weights[b.col];
        for (int k = 0; k < b.op.matrix.outerSize(); ++k) {
            for (SpMat::InnerIterator it(b.op.matrix, k); it; ++it) {
                const Eigen::Index i = it.row();
                const Eigen::Index j = it.col();
                t.emplace_back(offset[b.row] + i, offset[b.col] + j, it.value());
                // upper block: -W_c^{-1} B^T W_r
                t.emplace_back(offset[b.col] + j, offset[b.row] + i, -it.value() * wr[i] / wc[j]);
            }
        }
    }
    SpMat a(w.size(), w.size());
    a.setFromTriplets(t.begin(), t.end());
    return DiscreteOperator(std::move(a), "block", "block", w, w);
}

DiscreteOperator assemble_skew_block(const std::vector<BlockEntry>& blocks)
{
    if (blocks.empty()) {
        return DiscreteOperator::zero("block", "block", Vec(), Vec());
    }
    int nslots = 0;
    for (const auto& b : blocks) {
        nslots = std::max(nslots, b.row + 1);
    }
    std::vector<Vec> slots(nslots);
    std::vector<char> seen(nslots, 0);
    for (const auto& b : blocks) {
        require(b.col >= 0 && b.row >= 0, Error::Kind::DimensionMismatch, "assemble_skew_block: negative slot");
        for (auto [s, w] : {std::pair<int, const Vec*>{b.row, &b.op.cod_weights}, {b.col, &b.op.dom_weights}}) {
            if (!seen[s]) {
                slots[s] = *w;
                seen[s] = 1;
            } else {
                require(same_weights(slots[s], *w), Error::Kind::InvalidInput,
                        "assemble_skew_block: weight incompatibility");
            }
        }
    }
    for (int s = 0; s < nslots; ++s) {
        require(seen[s], Error::Kind::InvalidInput, "assemble_skew_block: slot without block");
    }
    return assemble_skew_block(slots, blocks);
}

double weighted_skew_defect(const DiscreteOperator& op)
{
    require(op.rows() == op.cols(), Error::Kind::DimensionMismatch, "weighted_skew_defect: operator not square");
    const SpMat wa = sparse_diag(op.cod_weights) * op.matrix;
    const double n = wa.norm();
    if (n == 0.0) {
        return 0.0;
    }
    const SpMat sym = wa + SpMat(wa.transpose());
    return sym.norm() / n;
}

} // namespace piezo
