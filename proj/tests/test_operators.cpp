#include <doctest.h>

#include <cmath>

#include "iselab/eigensolve.hpp"
#include "iselab/errors.hpp"
#include "iselab/operators.hpp"

using namespace iselab;

namespace {

std::vector<SingleSiteProfile> one_bump(double c, double delta) {
    return {SingleSiteProfile::indicator(Site{{0, 0}}, 1.0, c, delta, {0.0, 0.0})};
}

} // namespace

TEST_CASE("background with no disorder is the laplacian") {
    const auto grid = GridSpec::make(2, 2.0, 0.25);
    const auto lap = build_laplacian(grid);
    const auto h = assemble_background(grid, PeriodicPotential::zero());
    CHECK((h.matrix() - lap.matrix()).norm() == 0.0);
    const auto shifted = assemble_background(grid, PeriodicPotential::constant(1.75));
    const auto a = dense_spectrum(lap), b = dense_spectrum(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] - a[i] == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("single bump lifts the ground state into (0, c]") {
    const auto grid = GridSpec::make(2, 2.0, 0.25);  // n = 8
    const auto prof = one_bump(1.5, 0.5);
    DisorderConfiguration cfg;
    cfg.values[Site{{0, 0}}] = 1.0;
    const auto H = assemble_hamiltonian(grid, PeriodicPotential::zero(), cfg, prof);
    const double e0 = dense_spectrum(H).front();
    CHECK(e0 > 0.0);
    CHECK(e0 <= 1.5);
    CHECK(H.is_exactly_symmetric());
}

TEST_CASE("interpolated family endpoints and monotonicity") {
    const auto grid = GridSpec::make(2, 3.0, 0.5, Boundary::periodic);  // 6x6
    const auto prof = one_bump(2.0, 0.5);
    const auto bg = PeriodicPotential(PeriodicPotential::Kind::cosine, 1.0, 0.7);
    CHECK((assemble_interpolated(grid, bg, 0.0, prof).matrix() - assemble_background(grid, bg).matrix()).norm() == 0.0);
    CHECK_THROWS_AS(assemble_interpolated(grid, bg, 1.5, prof), InputError);
    std::vector<double> prev;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto ev = dense_spectrum(assemble_interpolated(grid, bg, t, prof));
        if (!prev.empty())
            for (std::size_t k = 0; k < ev.size(); ++k) CHECK(ev[k] >= prev[k] - 1e-12);
        prev = ev;
    }
}

TEST_CASE("test perturbation") {
    const auto grid = GridSpec::make(2, 2.0, 0.125);
    const auto bg = PeriodicPotential::zero();
    std::vector<Ball> balls{Ball({0.0, 0.0}, 0.5)};
    const auto mask = IndicatorMask::from_balls(grid, balls);
    CHECK(mask.count() > 0);
    CHECK((assemble_test_perturbation(grid, bg, mask, 0.0).matrix() - assemble_background(grid, bg).matrix()).norm() == 0.0);
    CHECK_THROWS_AS(assemble_test_perturbation(grid, bg, IndicatorMask::none(grid), 1.0), InputError);
    CHECK_THROWS_AS(assemble_test_perturbation(grid, bg, mask, -1.0), InputError);

    const auto h0 = dense_spectrum(assemble_background(grid, bg));
    const auto full = dense_spectrum(assemble_test_perturbation(grid, bg, IndicatorMask::all(grid), 0.3));
    for (std::size_t i = 0; i < h0.size(); ++i) CHECK(full[i] - h0[i] == doctest::Approx(0.3).epsilon(1e-10));
    const auto part = dense_spectrum(assemble_test_perturbation(grid, bg, mask, 0.3));
    for (std::size_t i = 0; i < h0.size(); ++i) {
        CHECK(part[i] >= h0[i] - 1e-10);
        CHECK(part[i] <= h0[i] + 0.3 + 1e-10);
    }
    // A ball that misses every node is an input error.
    std::vector<Ball> tiny{Ball({0.0, 0.0}, 0.01)};
    CHECK_THROWS_AS(IndicatorMask::from_balls(grid, tiny), InputError);
}

TEST_CASE("sparsity pattern is invariant under potential changes") {
    const auto grid = GridSpec::make(2, 2.0, 0.25);
    auto a = assemble_background(grid, PeriodicPotential::zero()).matrix();
    auto b = assemble_background(grid, PeriodicPotential(PeriodicPotential::Kind::checkerboard, 1.0, 5.0)).matrix();
    CHECK(a.nonZeros() == b.nonZeros());
    for (int k = 0; k < a.outerSize(); ++k) {
        SparseMatrix::InnerIterator ia(a, k), ib(b, k);
        for (; ia && ib; ++ia, ++ib) CHECK(ia.row() == ib.row());
    }
}

TEST_CASE("triplet export") {
    const auto grid = GridSpec::make(2, 1.0, 0.5);
    std::ostringstream os;
    build_laplacian(grid).write_triplets(os);
    const std::string s = os.str();
    CHECK(s.find("0 0 16") == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 12);  // 4 diagonal + 8 off-diagonal for n=2 periodic (merged)
}
