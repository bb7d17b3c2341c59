#include "piezo/grid.hpp"

#include <cmath>

namespace piezo {

GridSpec GridSpec::box(int dim, int n, double length)
{
    GridSpec g;
    g.dim = dim;
    for (int a = 0; a < 3; ++a) {
        g.cells[a] = a < dim ? n : 1;
        g.h[a] = a < dim ? length / n : 1.0;
    }
    g.validate();
    return g;
}

GridSpec GridSpec::box(int dim, Index3 cells, std::array<double, 3> h)
{
    GridSpec g;
    g.dim = dim;
    for (int a = 0; a < 3; ++a) {
        g.cells[a] = a < dim ? cells[a] : 1;
        g.h[a] = a < dim ? h[a] : 1.0;
    }
    g.validate();
    return g;
}

void GridSpec::validate() const
{
    require(dim >= 1 && dim <= 3, Error::Kind::InvalidInput, "grid: dim must be 1, 2 or 3");
    for (int a = 0; a < dim; ++a) {
        require(cells[a] >= 2, Error::Kind::InvalidInput, "grid: need at least 2 cells per axis");
        require(h[a] > 0.0 && std::isfinite(h[a]), Error::Kind::InvalidInput, "grid: spacing must be positive");
    }
    for (int a = dim; a < 3; ++a) {
        require(cells[a] == 1, Error::Kind::InvalidInput, "grid: collapsed axes must have one cell");
    }
    if (!active.empty()) {
        require(static_cast<int>(active.size()) == num_cells(), Error::Kind::DimensionMismatch,
                "grid: mask size must equal the number of cells");
        bool any = false;
        for (char c : active) {
            any = any || c;
        }
        require(any, Error::Kind::InvalidInput, "grid: mask deactivates every cell");
    }
}

bool GridSpec::inside(const Index3& c) const
{
    for (int a = 0; a < 3; ++a) {
        if (c[a] < 0 || c[a] >= cells[a]) {
            return false;
        }
    }
    return true;
}

bool GridSpec::cell_active(const Index3& c) const
{
    if (!inside(c)) {
        return false;
    }
    return active.empty() || active[cell_index(c)] != 0;
}

double GridSpec::cell_volume() const
{
    double v = 1.0;
    for (int a = 0; a < dim; ++a) {
        v *= h[a];
    }
    return v;
}

Lattice Lattice::make(const GridSpec& grid, unsigned stagger)
{
    Lattice lat;
    lat.stagger = stagger;
    for (int a = 0; a < 3; ++a) {
        if (a < grid.dim) {
            lat.extent[a] = grid.cells[a] + (((stagger >> a) & 1u) ? 0 : 1);
        } else {
            lat.extent[a] = 1;
        }
    }
    return lat;
}

bool Lattice::contains(const Index3& p) const
{
    for (int a = 0; a < 3; ++a) {
        if (p[a] < 0 || p[a] >= extent[a]) {
            return false;
        }
    }
    return true;
}

Index3 Lattice::point(int idx) const
{
    Index3 p;
    p[0] = idx % extent[0];
    idx /= extent[0];
    p[1] = idx % extent[1];
    p[2] = idx / extent[1];
    return p;
}

int FieldComponent::dof(const Index3& p) const
{
    if (!lattice.contains(p)) {
        return -1;
    }
    const int local = dof_of_point[lattice.index(p)];
    return local < 0 ? -1 : offset + local;
}

Adjacency adjacent_cells(const GridSpec& grid, const Lattice& lat, const Index3& p)
{
    // Along a nodal active axis the point touches cells p-1 and p.
    std::array<std::array<int, 2>, 3> choices{};
    std::array<int, 3> counts{};
    for (int a = 0; a < 3; ++a) {
        if (a < grid.dim && !lat.staggered(a)) {
            choices[a] = {p[a] - 1, p[a]};
            counts[a] = 2;
        } else {
            choices[a] = {p[a], p[a]};
            counts[a] = 1;
        }
    }
    Adjacency adj;
    for (int i = 0; i < counts[0]; ++i) {
        for (int j = 0; j < counts[1]; ++j) {
            for (int k = 0; k < counts[2]; ++k) {
                ++adj.possible;
                if (grid.cell_active({choices[0][i], choices[1][j], choices[2][k]})) {
                    ++adj.active;
                }
            }
        }
    }
    return adj;
}

FieldSpace FieldSpace::build(const GridSpec& grid, std::vector<unsigned> staggers, bool mark_boundary,
                             std::string name)
{
    grid.validate();
    FieldSpace fs;
    fs.grid_ = grid;
    fs.name_ = std::move(name);
    const double vol = grid.cell_volume();
    std::vector<double> w;
    int offset = 0;
    for (unsigned s : staggers) {
        FieldComponent comp;
        comp.lattice = Lattice::make(grid, s);
        comp.offset = offset;
        comp.dof_of_point.assign(comp.lattice.size(), -1);
        for (int idx = 0; idx < comp.lattice.size(); ++idx) {
            const Adjacency adj = adjacent_cells(grid, comp.lattice, comp.lattice.point(idx));
            if (adj.active == 0) {
                continue;
            }
            comp.dof_of_point[idx] = comp.size();
            comp.point_of_dof.push_back(idx);
            w.push_back(vol * adj.active / adj.possible);
            const bool bnd = mark_boundary && adj.active < adj.possible;
            fs.boundary_flag_.push_back(bnd ? 1 : 0);
            if (bnd) {
                fs.boundary_.push_back(offset + comp.size() - 1);
            }
        }
        offset += comp.size();
        fs.comps_.push_back(std::move(comp));
    }
    fs.size_ = offset;
    fs.weights_ = Eigen::Map<Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
    return fs;
}

FieldSpace FieldSpace::nodal(const GridSpec& grid, int ncomp, std::string name)
{
    return build(grid, std::vector<unsigned>(ncomp, 0u), true, std::move(name));
}

FieldSpace FieldSpace::cellwise(const GridSpec& grid, int ncomp, std::string name)
{
    const unsigned all = (1u << grid.dim) - 1u;
    return build(grid, std::vector<unsigned>(ncomp, all), false, std::move(name));
}

FieldSpace FieldSpace::edges(const GridSpec& grid, std::string name)
{
    std::vector<unsigned> st;
    for (int k = 0; k < 3; ++k) {
        st.push_back(k < grid.dim ? (1u << k) : 0u);
    }
    return build(grid, st, true, std::move(name));
}

FieldSpace FieldSpace::faces(const GridSpec& grid, std::string name)
{
    const unsigned all = (1u << grid.dim) - 1u;
    std::vector<unsigned> st;
    for (int k = 0; k < 3; ++k) {
        st.push_back(all & ~(1u << k));
    }
    return build(grid, st, false, std::move(name));
}

std::pair<int, Index3> FieldSpace::locate(int dof) const
{
    for (int k = 0; k < num_components(); ++k) {
        const auto& c = comps_[k];
        if (dof >= c.offset && dof < c.offset + c.size()) {
            return {k, c.lattice.point(c.point_of_dof[dof - c.offset])};
        }
    }
    throw Error(Error::Kind::DimensionMismatch, "FieldSpace::locate: dof out of range");
}

} // namespace piezo
