#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iselab {

class SparseSymmetricOperator;

enum class Boundary { dirichlet, neumann, periodic };

std::string to_string(Boundary bc);
Boundary boundary_from_string(const std::string& name);

// Integer multi-index of a lattice site, a cell, or a grid node.
struct Site {
    std::vector<std::int64_t> index;

    std::size_t dimension() const { return index.size(); }
    auto operator<=>(const Site&) const = default;
};

std::string to_string(const Site& site);

/**
 * Finite-difference discretization of the open box Λ_L(x).
 *
 * Nodes sit at cell centers: coordinate i along an axis is
 * x - L/2 + (i + 1/2) h for i = 0..n-1, so no node lies on a face.
 * Node k has linear index k_0 + n k_1 + n^2 k_2 + ...
 */
class GridSpec {
public:
    static constexpr std::size_t default_max_nodes = std::size_t{1} << 22;

    // Fails with InputError unless d >= 2, n = round(L/h) >= 2, |n h - L| <= 1e-12 L
    // and n^d <= max_nodes.
    static GridSpec make(int dimension, double side, double spacing,
                         Boundary boundary = Boundary::periodic,
                         std::vector<double> center = {},
                         std::size_t max_nodes = default_max_nodes);

    // Convenience: spacing L / points_per_side.
    static GridSpec with_points(int dimension, double side, std::int64_t points_per_side,
                                Boundary boundary = Boundary::periodic,
                                std::vector<double> center = {},
                                std::size_t max_nodes = default_max_nodes);

    int dimension() const { return dimension_; }
    double side() const { return side_; }
    double spacing() const { return spacing_; }
    Boundary boundary() const { return boundary_; }
    std::int64_t points_per_side() const { return n_; }
    const std::vector<double>& center() const { return center_; }
    std::size_t num_nodes() const { return num_nodes_; }

    double lower(int axis) const { return center_[axis] - 0.5 * side_; }
    double upper(int axis) const { return center_[axis] + 0.5 * side_; }

    double coordinate(std::int64_t i) const;  // along any axis, relative to axis lower face
    std::vector<double> node_point(std::size_t linear) const;
    Site node_index(std::size_t linear) const;
    std::size_t linear_index(std::span<const std::int64_t> idx) const;

    // Displacement p - q; for periodic boxes the minimum image is taken.
    std::vector<double> displacement(std::span<const double> p, std::span<const double> q) const;
    double distance(std::span<const double> p, std::span<const double> q) const;

    // Strict inequalities on every coordinate.
    bool contains_open(std::span<const double> p) const;

    bool operator==(const GridSpec&) const = default;

private:
    GridSpec() = default;

    int dimension_ = 2;
    double side_ = 0.0;
    double spacing_ = 0.0;
    Boundary boundary_ = Boundary::periodic;
    std::int64_t n_ = 0;
    std::vector<double> center_;
    std::size_t num_nodes_ = 0;
};

struct Ball {
    std::vector<double> center;
    double radius = 0.0;

    Ball() = default;
    Ball(std::vector<double> c, double r);  // throws InputError unless r > 0

    // Open ball, Euclidean distance (minimum image on periodic grids).
    bool contains(std::span<const double> p, const GridSpec& grid) const;
    bool contains(std::span<const double> p) const;
};

enum class CellWindow { box_L, box_2L };

struct Cell {
    Site multiplier;              // cell center is multiplier * l
    std::vector<double> center;
    std::int64_t lattice_points;  // #(Λ_l(j) ∩ Z^d)
};

/// Disjoint open cubes Λ_l(j), j ∈ (lZ)^d, whose centers lie in the open window box.
struct CellDecomposition {
    int dimension = 2;
    double cell_side = 0.0;
    double window_side = 0.0;
    std::vector<double> window_center;
    std::vector<Cell> cells;

    std::int64_t total_lattice_points() const;
};

CellDecomposition decompose_cells(int dimension, double L, double l, CellWindow window,
                                  std::vector<double> center = {});

/// Integer points strictly inside (lo, hi).
std::int64_t integers_in_open_interval(double lo, double hi);

/// Integer multi-indices in the open cube of side `side` centered at `center`, lexicographic.
std::vector<Site> lattice_sites_in_open_cube(std::span<const double> center, double side);

/// (2d+1)-point stencil of −Δ with the grid's boundary condition.
SparseSymmetricOperator build_laplacian(const GridSpec& grid);

/// Closed-form 1D spectrum of the stencil along one axis, ascending.
std::vector<double> laplacian_axis_spectrum(std::int64_t n, double h, Boundary bc);

/// Closed-form spectrum of the d-dimensional stencil as a tensor sum, ascending.
std::vector<double> laplacian_spectrum(int dimension, std::int64_t n, double h, Boundary bc);

} // namespace iselab
