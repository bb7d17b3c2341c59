#pragma once

// Mimetic staggered-grid differential operators. The homogeneous-boundary operator
// is the full stencil restricted to non-boundary dofs; its dual (Div, or the curl
// acting on face fields) is never discretized on its own but obtained as the
// weighted transpose, so discrete integration by parts holds to rounding.

#include "piezo/grid.hpp"

#include <iosfwd>
#include <optional>

namespace piezo {

/// A sparse matrix between two weighted coefficient spaces. The inner product on
/// each side is sum_i w_i x_i y_i.
struct DiscreteOperator {
    SpMat matrix;
    std::string dom_space;
    std::string cod_space;
    Vec dom_weights;
    Vec cod_weights;

    DiscreteOperator() = default;
    DiscreteOperator(SpMat m, std::string dom, std::string cod, Vec wd, Vec wc);

    Eigen::Index rows() const { return matrix.rows(); }
    Eigen::Index cols() const { return matrix.cols(); }
    Vec apply(const Vec& x) const;
    void validate() const;

    /// W_dom^{-1} M^T W_cod: the adjoint in the weighted inner products.
    DiscreteOperator weighted_adjoint() const;
    /// The same map in orthonormal coordinates: S_cod M S_dom^{-1}, S = sqrt(W).
    SpMat normalized() const;

    static DiscreteOperator zero(std::string dom, std::string cod, Vec wd, Vec wc);
};

/// Coordinate-format dump ("row col value" per line) for debugging.
void write_coordinate(std::ostream& os, const SpMat& m);

/// Dofs of the full domain that the homogeneous-boundary domain does not contain.
struct DofMask {
    std::vector<int> boundary_dofs;
    int full_size = 0;

    std::vector<int> interior_dofs() const;
    /// full_size x (full_size - |boundary|) zero extension.
    SpMat extension() const;
    void validate() const;
};

enum class PairKind { Grad, Curl };

struct OperatorPair {
    PairKind kind = PairKind::Grad;
    FieldSpace dom_space; // nodes (Grad) or edges (curl), all dofs
    FieldSpace cod_space; // cells (Grad) or faces (curl)
    DiscreteOperator hom;  // P on the homogeneous domain (boundary dofs removed)
    DiscreteOperator full; // the same stencil on every dof of the domain
    DiscreteOperator dual; // Div = -(Grad hom)^*, or curl = (curl hom)^*
    DofMask mask;
};

/// Grad: symmetric gradient from nodal vector fields to cell-centred Mandel strains.
/// Curl: Yee curl from edge fields to face fields. In 1D/2D the collapsed axes carry
/// zero derivative, so the transverse components still form a curl pair.
OperatorPair build_pair(const GridSpec& grid, PairKind kind);

/// max over homogeneous basis vectors u of |full(extend u) - hom u|.
double containment_check(const DiscreteOperator& hom, const DiscreteOperator& full, const DofMask& mask);

struct BlockEntry {
    int row = 0;
    int col = 0;
    DiscreteOperator op;
};

/// Skew block operator: the given strictly-lower blocks plus their negative weighted
/// transposes in the mirrored slots. `slot_weights[i]` fixes the inner product of slot i.
DiscreteOperator assemble_skew_block(const std::vector<Vec>& slot_weights, const std::vector<BlockEntry>& blocks);
/// Slots inferred from the blocks; every slot must be touched by at least one block.
DiscreteOperator assemble_skew_block(const std::vector<BlockEntry>& blocks);

/// |W A + (W A)^T| / |W A| (Frobenius), 0 for the zero operator.
double weighted_skew_defect(const DiscreteOperator& op);

// Stencil matrices in nodal coordinates (rows: codomain dofs, cols: domain dofs).

/// Mandel-form symmetric gradient; component order xx[,yy[,zz]], then off-diagonals.
SpMat sym_grad_matrix(const FieldSpace& nodes, const FieldSpace& strain);
/// Off-diagonal index pairs in Mandel order after the diagonal ones.
std::vector<std::pair<int, int>> sym_component_pairs(int dim);
SpMat curl_matrix(const FieldSpace& edges, const FieldSpace& faces);
/// Edge field to cell-centred 3-vectors (cellwise space with 3 components).
SpMat cell_average_matrix(const FieldSpace& edges, const FieldSpace& cells3);
/// Face field to edge field, componentwise, by separable midpoint averaging with
/// linear extrapolation where a neighbour is missing.
SpMat face_to_edge_interpolation(const FieldSpace& faces, const FieldSpace& edges);

/// Row/column selection helpers.
SpMat select_rows(const SpMat& m, const std::vector<int>& rows);
SpMat select_cols(const SpMat& m, const std::vector<int>& cols);
Vec select(const Vec& v, const std::vector<int>& idx);
SpMat sparse_diag(const Vec& d);

} // namespace piezo
