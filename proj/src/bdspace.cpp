#include "piezo/bdspace.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace piezo {

namespace {

double spectral_norm(const Mat& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

// Orthonormalize columns in the metric K, dropping directions whose Gram eigenvalue is
// below `rel_tol` times the largest.
Mat orthonormalize_eig(const Mat& cols, const SpMat& K, double rel_tol)
{
    if (cols.cols() == 0) {
        return Mat(cols.rows(), 0);
    }
    Mat gram = cols.transpose() * (K * cols);
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const Vec& lam = es.eigenvalues();
    const double top = lam.maxCoeff();
    std::vector<int> keep;
    for (Eigen::Index i = lam.size() - 1; i >= 0; --i) {
        if (top > 0.0 && lam[i] > rel_tol * top) {
            keep.push_back(static_cast<int>(i));
        }
    }
    Mat out(cols.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = cols * es.eigenvectors().col(keep[j]) / std::sqrt(lam[keep[j]]);
    }
    return out;
}

} // namespace

SpMat graph_metric(const DiscreteOperator& P)
{
    SpMat K = sparse_diag(P.dom_weights);
    K += SpMat(P.matrix.transpose()) * sparse_diag(P.cod_weights) * P.matrix;
    return K;
}

BoundarySpace compute_boundary_space(const DiscreteOperator& full, const DofMask& mask, std::string name)
{
    mask.validate();
    require(full.cols() == mask.full_size, Error::Kind::DimensionMismatch,
            "compute_boundary_space: mask does not match the operator domain");
    BoundarySpace bs;
    bs.name = std::move(name);
    bs.parent = full;
    bs.metric = graph_metric(full);
    const int nb = static_cast<int>(mask.boundary_dofs.size());
    const std::vector<int> inner = mask.interior_dofs();
    Mat raw = Mat::Zero(mask.full_size, nb);
    if (nb == 0) {
        bs.basis = raw;
        return bs;
    }
    for (int j = 0; j < nb; ++j) {
        raw(mask.boundary_dofs[j], j) = 1.0;
    }
    if (!inner.empty()) {
        const SpMat KI = select_cols(select_rows(bs.metric, inner), inner);
        const SpMat KIB = select_cols(select_rows(bs.metric, inner), mask.boundary_dofs);
        Eigen::SimplicialLDLT<SpMat> ldlt(KI);
        require(ldlt.info() == Eigen::Success, Error::Kind::Internal,
                "compute_boundary_space: interior graph system is singular");
        const Mat sol = ldlt.solve(-Mat(KIB));
        require(ldlt.info() == Eigen::Success, Error::Kind::Internal, "compute_boundary_space: interior solve failed");
        for (std::size_t i = 0; i < inner.size(); ++i) {
            raw.row(inner[i]) = sol.row(static_cast<Eigen::Index>(i));
        }
    }
    Mat gram = raw.transpose() * (bs.metric * raw);
    gram = 0.5 * (gram + gram.transpose()).eval();
    bs.graph_gram.compute(gram);
    require(bs.graph_gram.info() == Eigen::Success, Error::Kind::Internal,
            "compute_boundary_space: graph Gram is not positive definite");
    // basis = raw L^{-T}
    bs.basis = bs.graph_gram.matrixL().solve(raw.transpose()).transpose();
    return bs;
}

BoundarySpace compute_boundary_space(const OperatorPair& pair)
{
    return compute_boundary_space(pair.full, pair.mask, pair.dom_space.name() + "_bnd");
}

BoundarySpace span_space(const DiscreteOperator& P, const Mat& columns, std::string name)
{
    require(columns.rows() == P.cols(), Error::Kind::DimensionMismatch, "span_space: column length mismatch");
    BoundarySpace bs;
    bs.name = std::move(name);
    bs.parent = P;
    bs.metric = graph_metric(P);
    bs.basis = orthonormalize_eig(columns, bs.metric, 1e-13);
    return bs;
}

BoundarySpace image_space(const BoundarySpace& primal, const DiscreteOperator& dual_graph_op, std::string name)
{
    const Mat cols = primal.parent.matrix * primal.basis;
    return span_space(dual_graph_op, cols, std::move(name));
}

Vec embed(const BoundarySpace& bs, const Vec& coeffs)
{
    require(coeffs.size() == bs.dim(), Error::Kind::DimensionMismatch, "embed: coefficient length mismatch");
    return bs.basis * coeffs;
}

Vec project(const BoundarySpace& bs, const Vec& u)
{
    require(u.size() == bs.ambient(), Error::Kind::DimensionMismatch, "project: field length mismatch");
    return bs.basis.transpose() * (bs.metric * u);
}

double graph_inner(const BoundarySpace& bs, const Vec& u, const Vec& v)
{
    return u.dot(bs.metric * v);
}

double graph_norm(const BoundarySpace& bs, const Vec& u)
{
    return std::sqrt(std::max(0.0, graph_inner(bs, u, u)));
}

DottedOperator dotted_operator(const BoundarySpace& dom, const BoundarySpace& cod, const DiscreteOperator& P)
{
    require(P.cols() == dom.ambient() && P.rows() == cod.ambient(), Error::Kind::DimensionMismatch,
            "dotted_operator: operator does not map between the ambient spaces");
    DottedOperator out;
    out.dom = dom.name;
    out.cod = cod.name;
    out.matrix = cod.basis.transpose() * (cod.metric * (P.matrix * dom.basis));
    return out;
}

DottedOperator dotted_from_image(const BoundarySpace& dom, const BoundarySpace& cod, const Mat& image)
{
    require(image.cols() == dom.dim() && image.rows() == cod.ambient(), Error::Kind::DimensionMismatch,
            "dotted_from_image: image shape mismatch");
    DottedOperator out;
    out.dom = dom.name;
    out.cod = cod.name;
    out.matrix = cod.basis.transpose() * (cod.metric * image);
    return out;
}

double adjoint_identity_report(const DottedOperator& gd, const DottedOperator& dv, bool negate)
{
    require(gd.matrix.rows() == dv.matrix.cols() && gd.matrix.cols() == dv.matrix.rows(), Error::Kind::DimensionMismatch,
            "adjoint_identity_report: shapes are not transposed");
    const Mat diff = negate ? Mat(gd.matrix.transpose() + dv.matrix) : Mat(gd.matrix.transpose() - dv.matrix);
    return spectral_norm(diff);
}

double unitarity_defect(const DottedOperator& op)
{
    const Mat m = op.matrix.transpose() * op.matrix;
    return spectral_norm(m - Mat::Identity(m.rows(), m.cols()));
}

double relative_skew_defect(const DottedOperator& op)
{
    const double n = spectral_norm(op.matrix);
    if (n == 0.0) {
        return 0.0;
    }
    return spectral_norm(op.matrix + op.matrix.transpose()) / n;
}

Mat extended_divergence(const OperatorPair& grad_pair, const Mat& T)
{
    require(grad_pair.kind == PairKind::Grad, Error::Kind::InvalidInput, "extended_divergence: need the Grad pair");
    require(T.rows() == grad_pair.full.rows(), Error::Kind::DimensionMismatch, "extended_divergence: size mismatch");
    const std::vector<int> inner = grad_pair.mask.interior_dofs();
    const std::vector<int>& bnd = grad_pair.mask.boundary_dofs;
    const SpMat& G = grad_pair.full.matrix;
    const SpMat W = sparse_diag(grad_pair.full.cod_weights);
    const SpMat GB = select_cols(G, bnd);
    const Mat u_inner = grad_pair.dual.matrix * T;
    Mat out = Mat::Zero(grad_pair.mask.full_size, T.cols());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        out.row(inner[i]) = u_inner.row(static_cast<Eigen::Index>(i));
    }
    if (!bnd.empty()) {
        // min_b |GB b - (T - G u_inner)|_W; the normal matrix may be singular on masks.
        const Mat rhs = SpMat(GB.transpose()) * W * (T - G * out);
        const Mat normal = Mat(SpMat(GB.transpose()) * W * GB);
        const Mat b = normal.completeOrthogonalDecomposition().solve(rhs);
        for (std::size_t i = 0; i < bnd.size(); ++i) {
            out.row(bnd[i]) = b.row(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

DiscreteOperator interpolated_curl(const OperatorPair& curl_pair)
{
    require(curl_pair.kind == PairKind::Curl, Error::Kind::InvalidInput, "interpolated_curl: need the curl pair");
    const SpMat R = face_to_edge_interpolation(curl_pair.cod_space, curl_pair.dom_space);
    return DiscreteOperator(R * curl_pair.full.matrix, curl_pair.dom_space.name(), curl_pair.dom_space.name(),
                            curl_pair.dom_space.weights(), curl_pair.dom_space.weights());
}

BoundaryPairData boundary_pair(const GridSpec& grid, PairKind kind)
{
    BoundaryPairData d;
    d.pair = build_pair(grid, kind);
    d.primal = compute_boundary_space(d.pair);
    if (kind == PairKind::Grad) {
        d.dual = image_space(d.primal, d.pair.dual, "T_bnd");
        d.forward = dotted_operator(d.primal, d.dual, d.pair.full);
        d.backward = dotted_from_image(d.dual, d.primal, extended_divergence(d.pair, d.dual.basis));
    } else {
        d.dual = image_space(d.primal, d.pair.dual, "H_bnd");
        d.forward = dotted_operator(d.primal, d.dual, d.pair.full);
        d.square = dotted_operator(d.primal, d.primal, interpolated_curl(d.pair));
    }
    return d;
}

} // namespace piezo
