#pragma once

// Rectangular box grids with optional cell masks, and the staggered dof families
// living on them. A lattice point is addressed by integer coordinates; along an
// axis whose stagger bit is set the point sits at a cell centre, otherwise at a
// node. Axes at or beyond `dim` are collapsed (one point, zero derivative).

#include "piezo/types.hpp"

#include <array>
#include <string>

namespace piezo {

using Index3 = std::array<int, 3>;

struct GridSpec {
    int dim = 1;
    Index3 cells{2, 1, 1};
    std::array<double, 3> h{0.5, 1.0, 1.0};
    /// One flag per cell (x fastest); empty means every cell is active.
    std::vector<char> active;

    static GridSpec box(int dim, int n, double length = 1.0);
    static GridSpec box(int dim, Index3 cells, std::array<double, 3> h);

    void validate() const;
    int num_cells() const { return cells[0] * cells[1] * cells[2]; }
    int cell_index(const Index3& c) const { return c[0] + cells[0] * (c[1] + cells[1] * c[2]); }
    bool inside(const Index3& c) const;
    /// False outside the box or for masked cells.
    bool cell_active(const Index3& c) const;
    double cell_volume() const;
    bool masked() const { return !active.empty(); }
};

/// Points of one staggered family on the full box (inactive points included).
struct Lattice {
    unsigned stagger = 0;
    Index3 extent{1, 1, 1};

    static Lattice make(const GridSpec& grid, unsigned stagger);

    int size() const { return extent[0] * extent[1] * extent[2]; }
    bool contains(const Index3& p) const;
    int index(const Index3& p) const { return p[0] + extent[0] * (p[1] + extent[1] * p[2]); }
    Index3 point(int idx) const;
    bool staggered(int axis) const { return (stagger >> axis) & 1u; }
};

struct FieldComponent {
    Lattice lattice;
    std::vector<int> dof_of_point; // -1 for points not touching an active cell
    std::vector<int> point_of_dof; // local point index per local dof
    int offset = 0;

    int size() const { return static_cast<int>(point_of_dof.size()); }
    /// Global dof index, or -1 if the point is outside the lattice or inactive.
    int dof(const Index3& p) const;
};

/// A discrete field: several staggered components, lumped quadrature weights and
/// the dofs carrying boundary values.
class FieldSpace {
public:
    /// `ncomp` components at nodes (velocity / displacement).
    static FieldSpace nodal(const GridSpec& grid, int ncomp, std::string name = "v");
    /// `ncomp` components at cell centres (stress / strain in Mandel form).
    static FieldSpace cellwise(const GridSpec& grid, int ncomp, std::string name = "T");
    /// Yee edge field: component k staggered along axis k. Tangential boundary dofs.
    static FieldSpace edges(const GridSpec& grid, std::string name = "E");
    /// Yee face field: component k staggered along every active axis except k.
    static FieldSpace faces(const GridSpec& grid, std::string name = "H");

    const std::string& name() const { return name_; }
    int size() const { return size_; }
    int num_components() const { return static_cast<int>(comps_.size()); }
    const FieldComponent& component(int k) const { return comps_[k]; }
    const Vec& weights() const { return weights_; }
    const std::vector<int>& boundary_dofs() const { return boundary_; }
    bool is_boundary(int dof) const { return boundary_flag_[dof] != 0; }
    /// Component index and lattice point of a global dof.
    std::pair<int, Index3> locate(int dof) const;
    const GridSpec& grid() const { return grid_; }

private:
    static FieldSpace build(const GridSpec& grid, std::vector<unsigned> staggers, bool mark_boundary,
                            std::string name);

    GridSpec grid_;
    std::string name_;
    std::vector<FieldComponent> comps_;
    Vec weights_;
    std::vector<int> boundary_;
    std::vector<char> boundary_flag_;
    int size_ = 0;
};

/// Number of independent symmetric-tensor components in `dim` dimensions.
inline int sym_components(int dim) { return dim * (dim + 1) / 2; }

/// Active cells adjacent to a lattice point, and how many there could be at most.
struct Adjacency {
    int active = 0;
    int possible = 0;
};
Adjacency adjacent_cells(const GridSpec& grid, const Lattice& lat, const Index3& p);

} // namespace piezo
