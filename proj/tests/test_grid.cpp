#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iselab/eigensolve.hpp"
#include "iselab/errors.hpp"
#include "iselab/grid.hpp"
#include "iselab/sparse_operator.hpp"

using namespace iselab;

namespace {

// Independent per-axis closed forms, combined by brute-force tensor sum.
std::vector<double> oracle_spectrum(std::int64_t n, double h, Boundary bc) {
    std::vector<double> axis;
    const double pi = std::numbers::pi;
    for (std::int64_t k = 0; k < n; ++k) {
        double s = 0.0;
        if (bc == Boundary::dirichlet) s = std::sin(pi * double(k + 1) / (2.0 * double(n + 1)));
        if (bc == Boundary::periodic) s = std::sin(pi * double(k) / double(n));
        if (bc == Boundary::neumann) s = std::sin(pi * double(k) / (2.0 * double(n)));
        axis.push_back(4.0 / (h * h) * s * s);
    }
    std::vector<double> out;
    for (double a : axis)
        for (double b : axis) out.push_back(a + b);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("grid construction validates its invariants") {
    CHECK_THROWS_AS(GridSpec::make(1, 2.0, 0.5), InputError);
    CHECK_THROWS_AS(GridSpec::make(2, 1.0, 0.75), InputError);
    CHECK_THROWS_AS(GridSpec::make(2, 1.0, 1.0), InputError);
    CHECK_THROWS_AS(GridSpec::make(3, 64.0, 0.125), InputError);
    const auto g = GridSpec::make(2, 3.0, 0.25, Boundary::dirichlet);
    CHECK(g.points_per_side() == 12);
    CHECK(g.num_nodes() == 144);
    CHECK(g.coordinate(0) == doctest::Approx(0.125));
    CHECK(g.lower(0) == doctest::Approx(-1.5));
}

TEST_CASE("node indexing round-trips") {
    const auto g = GridSpec::with_points(3, 2.0, 4);
    for (std::size_t k = 0; k < g.num_nodes(); ++k) CHECK(g.linear_index(g.node_index(k).index) == k);
}

TEST_CASE("laplacian is exactly symmetric with the right row sums") {
    for (auto bc : {Boundary::periodic, Boundary::dirichlet, Boundary::neumann}) {
        const auto g = GridSpec::with_points(2, 5.0, 5, bc);
        const auto lap = build_laplacian(g);
        CHECK(lap.is_exactly_symmetric());
        Eigen::VectorXd rows = lap.matrix() * Eigen::VectorXd::Ones(25);
        if (bc != Boundary::dirichlet) CHECK(rows.cwiseAbs().maxCoeff() == 0.0);
        else CHECK(rows[12] == 0.0);  // interior node
    }
}

TEST_CASE("laplacian spectra match tensor-sum closed forms") {
    for (auto bc : {Boundary::periodic, Boundary::dirichlet, Boundary::neumann}) {
        for (std::int64_t n = 2; n <= 8; ++n) {
            const double h = 0.5;
            const auto g = GridSpec::with_points(2, h * double(n), n, bc);
            const auto dense = dense_spectrum(build_laplacian(g));
            const auto oracle = oracle_spectrum(n, h, bc);
            const auto closed = laplacian_spectrum(2, n, h, bc);
            REQUIRE(dense.size() == oracle.size());
            for (std::size_t i = 0; i < dense.size(); ++i) {
                CHECK(std::abs(dense[i] - oracle[i]) <= 1e-10);
                CHECK(std::abs(closed[i] - oracle[i]) <= 1e-10);
            }
        }
    }
}

TEST_CASE("laplacian spectrum examples") {
    const auto g = GridSpec::with_points(2, 2.0, 2, Boundary::dirichlet);
    CHECK(dense_spectrum(build_laplacian(g)).front() == doctest::Approx(2.0).epsilon(1e-12));
    auto axis = laplacian_axis_spectrum(4, 1.0, Boundary::periodic);
    CHECK(axis[0] == doctest::Approx(0.0));
    CHECK(axis[1] == doctest::Approx(2.0));
    CHECK(axis[2] == doctest::Approx(2.0));
    CHECK(axis[3] == doctest::Approx(4.0));
    const auto p = GridSpec::with_points(2, 6.0, 6, Boundary::periodic);
    const auto ones = Eigen::VectorXd::Ones(36);
    CHECK((build_laplacian(p).matrix() * ones).norm() == 0.0);
}

TEST_CASE("cell decompositions") {
    auto c = decompose_cells(2, 2.0, 1.0, CellWindow::box_2L);
    CHECK(c.cells.size() == 9);
    CHECK(c.total_lattice_points() == 9);
    c = decompose_cells(2, 3.0, 3.0, CellWindow::box_L);
    REQUIRE(c.cells.size() == 1);
    CHECK(c.cells[0].center == std::vector<double>{0.0, 0.0});
    c = decompose_cells(2, 6.0, 3.0, CellWindow::box_2L);
    CHECK(c.cells.size() == 9);
    for (const auto& cell : c.cells) {
        CHECK(cell.lattice_points == 9);
        for (double x : cell.center) CHECK(std::fmod(std::abs(x), 3.0) == 0.0);
    }
    // Disjoint cells: integer points of the union equal the sum over cells.
    c = decompose_cells(2, 10.0, 5.0, CellWindow::box_2L);
    CHECK(c.total_lattice_points() == std::int64_t(c.cells.size()) * 25);
    CHECK_THROWS_AS(decompose_cells(2, 2.0, 3.0, CellWindow::box_L), InputError);
}

TEST_CASE("open-cube lattice sites are lexicographic") {
    const std::vector<double> center{0.0, 0.0};
    const auto sites = lattice_sites_in_open_cube(center, 3.0);
    REQUIRE(sites.size() == 9);
    CHECK(std::is_sorted(sites.begin(), sites.end()));
    CHECK(sites.front().index == std::vector<std::int64_t>{-1, -1});
    CHECK(integers_in_open_interval(-2.0, 2.0) == 3);
}

TEST_CASE("balls are open") {
    Ball b({0.0, 0.0}, 1.0);
    CHECK(b.contains(std::vector<double>{0.5, 0.5}));
    CHECK_FALSE(b.contains(std::vector<double>{1.0, 0.0}));
    CHECK_THROWS_AS(Ball({0.0, 0.0}, 0.0), InputError);
}
