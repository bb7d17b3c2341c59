#pragma once

// Boundary data spaces: the orthocomplement of the homogeneous-boundary domain
// inside the full domain, taken in the graph inner product <u,v> + <Pu,Pv>.
// Bases are orthonormal in that metric, so embed is an isometry in coordinates
// and project is basis^T K u.

#include "piezo/spatialops.hpp"

namespace piezo {

struct BoundarySpace {
    std::string name;
    DiscreteOperator parent; // the full operator P defining the graph metric
    SpMat metric;            // K = W_dom + P^T W_cod P
    Mat basis;               // ambient x dim, K-orthonormal columns
    /// Gram of the raw extension columns; Cholesky when they are independent.
    Eigen::LLT<Mat> graph_gram;

    int dim() const { return static_cast<int>(basis.cols()); }
    Eigen::Index ambient() const { return basis.rows(); }
};

SpMat graph_metric(const DiscreteOperator& P);

/// For each boundary dof b solve the interior rows of K u = 0 with u_b = 1 and every
/// other boundary dof 0, then orthonormalize. dim = |mask|.
BoundarySpace compute_boundary_space(const DiscreteOperator& full, const DofMask& mask, std::string name = "");
BoundarySpace compute_boundary_space(const OperatorPair& pair);

/// Span of `columns` in the graph metric of P, orthonormalized; numerically dependent
/// directions are dropped.
BoundarySpace span_space(const DiscreteOperator& P, const Mat& columns, std::string name = "");

/// The boundary space of the dual operator: image of the primal boundary space under the
/// full primal operator. For the Grad pair this is the orthocomplement of the domain of
/// the homogeneous Div in the graph metric of Div (nodal boundary rows of P^T W T vanish
/// there), for the curl pair the same with curl.
BoundarySpace image_space(const BoundarySpace& primal, const DiscreteOperator& dual_graph_op, std::string name = "");

Vec embed(const BoundarySpace& bs, const Vec& coeffs);
Vec project(const BoundarySpace& bs, const Vec& u);
double graph_inner(const BoundarySpace& bs, const Vec& u, const Vec& v);
double graph_norm(const BoundarySpace& bs, const Vec& u);

struct DottedOperator {
    Mat matrix; // cod.dim x dom.dim in orthonormal coordinates
    std::string dom;
    std::string cod;
};

/// project_cod o P o embed_dom.
DottedOperator dotted_operator(const BoundarySpace& dom, const BoundarySpace& cod, const DiscreteOperator& P);
/// Same, given the images P(dom.basis) directly.
DottedOperator dotted_from_image(const BoundarySpace& dom, const BoundarySpace& cod, const Mat& image);

/// |gd^T - dv| (spectral norm). For the curl case pass the same operator twice with
/// `negate = true` to get |c^T + c|.
double adjoint_identity_report(const DottedOperator& gd, const DottedOperator& dv, bool negate = false);
/// |M^T M - I| (spectral norm).
double unitarity_defect(const DottedOperator& op);
/// |c + c^T| / |c|, 0 for c = 0.
double relative_skew_defect(const DottedOperator& op);

/// Div on every node, applied to the columns of `T`. Interior rows are the dual operator;
/// boundary rows b are the least-squares choice making Grad(Div T) closest to T, the
/// discrete reading of Grad Div = 1 on the boundary space.
Mat extended_divergence(const OperatorPair& grad_pair, const Mat& T);
/// Face-to-edge interpolated curl: E -> E, used for the square curl on the edge space.
DiscreteOperator interpolated_curl(const OperatorPair& curl_pair);

/// Everything needed for one pair: the two boundary spaces and the dotted operators.
struct BoundaryPairData {
    OperatorPair pair;
    BoundarySpace primal; // N(1 - Div Grad) or N(1 + curl curl)
    BoundarySpace dual;   // N(1 - Grad Div) image space, or the curl image space
    DottedOperator forward;  // Grad dot (primal -> dual) or the exact curl dot
    DottedOperator backward; // Div dot (dual -> primal); empty for curl
    DottedOperator square;   // curl dot on the primal space; empty for Grad
};

BoundaryPairData boundary_pair(const GridSpec& grid, PairKind kind);

} // namespace piezo
