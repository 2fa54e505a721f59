#include "iselab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "iselab/errors.hpp"
#include "iselab/sparse_operator.hpp"

namespace iselab {

std::string to_string(Boundary bc) {
    switch (bc) {
    case Boundary::dirichlet: return "dirichlet";
    case Boundary::neumann: return "neumann";
    case Boundary::periodic: return "periodic";
    }
    return "periodic";
}

Boundary boundary_from_string(const std::string& name) {
    if (name == "dirichlet") return Boundary::dirichlet;
    if (name == "neumann") return Boundary::neumann;
    if (name == "periodic") return Boundary::periodic;
    throw InputError("unknown boundary condition '" + name + "'");
}

std::string to_string(const Site& site) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < site.index.size(); ++i) {
        if (i) os << ',';
        os << site.index[i];
    }
    os << ')';
    return os.str();
}

GridSpec GridSpec::make(int dimension, double side, double spacing, Boundary boundary,
                        std::vector<double> center, std::size_t max_nodes) {
    if (dimension < 2) throw InputError("grid dimension must be >= 2");
    if (!(side > 0.0) || !std::isfinite(side)) throw InputError("grid side must be positive");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InputError("grid spacing must be positive");
    const double ratio = side / spacing;
    if (ratio > 1e9) throw InputError("grid too fine");
    const auto n = static_cast<std::int64_t>(std::llround(ratio));
    if (n < 2) throw InputError("grid needs at least 2 points per side");
    if (std::abs(static_cast<double>(n) * spacing - side) > 1e-12 * side) {
        std::ostringstream os;
        os << "side " << side << " is not an integer multiple of spacing " << spacing;
        throw InputError(os.str());
    }
    if (center.empty()) center.assign(static_cast<std::size_t>(dimension), 0.0);
    if (center.size() != static_cast<std::size_t>(dimension))
        throw InputError("grid center has wrong dimension");

    double total = 1.0;
    for (int i = 0; i < dimension; ++i) total *= static_cast<double>(n);
    if (total > static_cast<double>(max_nodes)) {
        std::ostringstream os;
        os << "grid with " << total << " nodes exceeds the memory budget of " << max_nodes;
        throw InputError(os.str());
    }

    GridSpec g;
    g.dimension_ = dimension;
    g.side_ = side;
    g.spacing_ = side / static_cast<double>(n);
    g.boundary_ = boundary;
    g.n_ = n;
    g.center_ = std::move(center);
    g.num_nodes_ = static_cast<std::size_t>(total);
    return g;
}

GridSpec GridSpec::with_points(int dimension, double side, std::int64_t points_per_side,
                               Boundary boundary, std::vector<double> center,
                               std::size_t max_nodes) {
    if (points_per_side < 2) throw InputError("grid needs at least 2 points per side");
    return make(dimension, side, side / static_cast<double>(points_per_side), boundary,
                std::move(center), max_nodes);
}

double GridSpec::coordinate(std::int64_t i) const {
    return (static_cast<double>(i) + 0.5) * spacing_;
}

std::vector<double> GridSpec::node_point(std::size_t linear) const {
    std::vector<double> p(static_cast<std::size_t>(dimension_));
    for (int a = 0; a < dimension_; ++a) {
        const auto i = static_cast<std::int64_t>(linear % static_cast<std::size_t>(n_));
        linear /= static_cast<std::size_t>(n_);
        p[a] = lower(a) + coordinate(i);
    }
    return p;
}

Site GridSpec::node_index(std::size_t linear) const {
    Site s;
    s.index.resize(static_cast<std::size_t>(dimension_));
    for (int a = 0; a < dimension_; ++a) {
        s.index[a] = static_cast<std::int64_t>(linear % static_cast<std::size_t>(n_));
        linear /= static_cast<std::size_t>(n_);
    }
    return s;
}

std::size_t GridSpec::linear_index(std::span<const std::int64_t> idx) const {
    std::size_t k = 0;
    for (int a = dimension_ - 1; a >= 0; --a)
        k = k * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[a]);
    return k;
}

std::vector<double> GridSpec::displacement(std::span<const double> p,
                                           std::span<const double> q) const {
    std::vector<double> d(static_cast<std::size_t>(dimension_));
    for (int a = 0; a < dimension_; ++a) {
        double v = p[a] - q[a];
        if (boundary_ == Boundary::periodic) {
            v -= side_ * std::floor(v / side_ + 0.5);
        }
        d[a] = v;
    }
    return d;
}

double GridSpec::distance(std::span<const double> p, std::span<const double> q) const {
    double s = 0.0;
    for (double v : displacement(p, q)) s += v * v;
    return std::sqrt(s);
}

bool GridSpec::contains_open(std::span<const double> p) const {
    for (int a = 0; a < dimension_; ++a) {
        if (!(p[a] > lower(a) && p[a] < upper(a))) return false;
    }
    return true;
}

Ball::Ball(std::vector<double> c, double r) : center(std::move(c)), radius(r) {
    if (!(r > 0.0)) throw InputError("ball radius must be positive");
}

bool Ball::contains(std::span<const double> p, const GridSpec& grid) const {
    return grid.distance(p, center) < radius;
}

bool Ball::contains(std::span<const double> p) const {
    double s = 0.0;
    for (std::size_t a = 0; a < center.size(); ++a) s += (p[a] - center[a]) * (p[a] - center[a]);
    return std::sqrt(s) < radius;
}

std::int64_t integers_in_open_interval(double lo, double hi) {
    const auto first = static_cast<std::int64_t>(std::floor(lo)) + 1;
    const auto last = static_cast<std::int64_t>(std::ceil(hi)) - 1;
    return std::max<std::int64_t>(0, last - first + 1);
}

std::vector<Site> lattice_sites_in_open_cube(std::span<const double> center, double side) {
    const std::size_t d = center.size();
    std::vector<std::int64_t> first(d), count(d);
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) {
        first[a] = static_cast<std::int64_t>(std::floor(center[a] - 0.5 * side)) + 1;
        count[a] = integers_in_open_interval(center[a] - 0.5 * side, center[a] + 0.5 * side);
        total *= static_cast<std::size_t>(count[a]);
    }
    std::vector<Site> out;
    out.reserve(total);
    if (total == 0) return out;
    std::vector<std::int64_t> k(d, 0);
    // Lexicographic: axis 0 slowest.
    for (std::size_t t = 0; t < total; ++t) {
        Site s;
        s.index.resize(d);
        for (std::size_t a = 0; a < d; ++a) s.index[a] = first[a] + k[a];
        out.push_back(std::move(s));
        for (std::size_t a = d; a-- > 0;) {
            if (++k[a] < count[a]) break;
            k[a] = 0;
        }
    }
    return out;
}

std::int64_t CellDecomposition::total_lattice_points() const {
    std::int64_t s = 0;
    for (const auto& c : cells) s += c.lattice_points;
    return s;
}

CellDecomposition decompose_cells(int dimension, double L, double l, CellWindow window,
                                  std::vector<double> center) {
    if (dimension < 1) throw InputError("cell decomposition needs dimension >= 1");
    if (!(l > 0.0)) throw InputError("cell side must be positive");
    if (l > L) throw InputError("cell side l exceeds box side L");
    if (center.empty()) center.assign(static_cast<std::size_t>(dimension), 0.0);

    CellDecomposition out;
    out.dimension = dimension;
    out.cell_side = l;
    out.window_side = window == CellWindow::box_L ? L : 2.0 * L;
    out.window_center = center;

    const double half = 0.5 * out.window_side;
    std::vector<double> axis_centers_lo(dimension);
    std::vector<std::int64_t> first(dimension), count(dimension);
    std::size_t total = 1;
    for (int a = 0; a < dimension; ++a) {
        const double lo = (center[a] - half) / l;
        const double hi = (center[a] + half) / l;
        first[a] = static_cast<std::int64_t>(std::floor(lo)) + 1;
        count[a] = integers_in_open_interval(lo, hi);
        total *= static_cast<std::size_t>(count[a]);
    }
    if (total == 0) return out;
    out.cells.reserve(total);
    std::vector<std::int64_t> k(dimension, 0);
    for (std::size_t t = 0; t < total; ++t) {
        Cell cell;
        cell.multiplier.index.resize(dimension);
        cell.center.resize(dimension);
        cell.lattice_points = 1;
        for (int a = 0; a < dimension; ++a) {
            cell.multiplier.index[a] = first[a] + k[a];
            cell.center[a] = static_cast<double>(first[a] + k[a]) * l;
            cell.lattice_points *=
                integers_in_open_interval(cell.center[a] - 0.5 * l, cell.center[a] + 0.5 * l);
        }
        out.cells.push_back(std::move(cell));
        for (int a = dimension; a-- > 0;) {
            if (++k[a] < count[a]) break;
            k[a] = 0;
        }
    }
    return out;
}

SparseSymmetricOperator build_laplacian(const GridSpec& grid) {
    const int d = grid.dimension();
    const std::int64_t n = grid.points_per_side();
    const double h = grid.spacing();
    const double off = -1.0 / (h * h);
    const double two = 2.0 / (h * h);
    const double one = 1.0 / (h * h);
    const std::size_t N = grid.num_nodes();

    std::vector<Eigen::Triplet<double, int>> triplets;
    triplets.reserve(N * static_cast<std::size_t>(2 * d + 1));
    std::vector<double> diag(N, 0.0);

    std::size_t stride = 1;
    for (int a = 0; a < d; ++a) {
        for (std::size_t k = 0; k < N; ++k) {
            const auto i = static_cast<std::int64_t>((k / stride) % static_cast<std::size_t>(n));
            const auto row = static_cast<int>(k);
            const auto up = static_cast<int>(k + stride);
            const auto down = static_cast<int>(k - stride);
            const auto wrap_up = static_cast<int>(k - static_cast<std::size_t>(n - 1) * stride);
            const auto wrap_down = static_cast<int>(k + static_cast<std::size_t>(n - 1) * stride);
            switch (grid.boundary()) {
            case Boundary::periodic:
                diag[k] += two;
                triplets.emplace_back(row, i + 1 < n ? up : wrap_up, off);
                triplets.emplace_back(row, i > 0 ? down : wrap_down, off);
                break;
            case Boundary::dirichlet:
                diag[k] += two;
                if (i + 1 < n) triplets.emplace_back(row, up, off);
                if (i > 0) triplets.emplace_back(row, down, off);
                break;
            case Boundary::neumann:
                if (i + 1 < n) {
                    diag[k] += one;
                    triplets.emplace_back(row, up, off);
                }
                if (i > 0) {
                    diag[k] += one;
                    triplets.emplace_back(row, down, off);
                }
                break;
            }
        }
        stride *= static_cast<std::size_t>(n);
    }
    for (std::size_t k = 0; k < N; ++k)
        triplets.emplace_back(static_cast<int>(k), static_cast<int>(k), diag[k]);

    SparseMatrix m(static_cast<int>(N), static_cast<int>(N));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    std::ostringstream desc;
    desc << "laplacian d=" << d << " n=" << n << " h=" << h << " bc=" << to_string(grid.boundary());
    return SparseSymmetricOperator(grid, std::move(m), desc.str());
}

std::vector<double> laplacian_axis_spectrum(std::int64_t n, double h, Boundary bc) {
    const double pi = std::numbers::pi;
    std::vector<double> ev;
    ev.reserve(static_cast<std::size_t>(n));
    const double s = 4.0 / (h * h);
    for (std::int64_t k = 0; k < n; ++k) {
        double v = 0.0;
        switch (bc) {
        case Boundary::dirichlet: {
            const double x = std::sin(pi * static_cast<double>(k + 1) / (2.0 * static_cast<double>(n + 1)));
            v = s * x * x;
            break;
        }
        case Boundary::neumann: {
            const double x = std::sin(pi * static_cast<double>(k) / (2.0 * static_cast<double>(n)));
            v = s * x * x;
            break;
        }
        case Boundary::periodic: {
            const double x = std::sin(pi * static_cast<double>(k) / static_cast<double>(n));
            v = s * x * x;
            break;
        }
        }
        ev.push_back(v);
    }
    std::sort(ev.begin(), ev.end());
    return ev;
}

std::vector<double> laplacian_spectrum(int dimension, std::int64_t n, double h, Boundary bc) {
    const auto axis = laplacian_axis_spectrum(n, h, bc);
    std::vector<double> all{0.0};
    for (int a = 0; a < dimension; ++a) {
        std::vector<double> next;
        next.reserve(all.size() * axis.size());
        for (double x : all)
            for (double y : axis) next.push_back(x + y);
        all = std::move(next);
    }
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace iselab
