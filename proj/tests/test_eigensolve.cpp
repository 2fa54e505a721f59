#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "iselab/eigensolve.hpp"
#include "iselab/errors.hpp"
#include "iselab/operators.hpp"

using namespace iselab;

namespace {

SolverOptions iterative() {
    SolverOptions o;
    o.dense_max = 0;
    return o;
}

SparseSymmetricOperator disordered(std::int64_t n, double side, std::uint64_t seed, PeriodicPotential bg) {
    const auto grid = GridSpec::with_points(2, side, n);
    PotentialModel m;
    m.period = 1.0;
    m.background = bg;
    m.single_site.c = 1.0;
    m.single_site.delta = 0.25;
    m.single_site.height = 1.0;
    m.single_site.radius = 0.25;
    const auto sites = m.sites_for(grid);
    const auto cfg = sample_configuration(seed, sites, DisorderDistribution::uniform01());
    return assemble_hamiltonian(grid, bg, cfg, m.profiles_for(grid));
}

} // namespace

TEST_CASE("eigs_below on the free periodic laplacian") {
    const auto grid = GridSpec::with_points(2, 4.0, 4);  // h = 1
    const auto lap = build_laplacian(grid);
    for (auto opts : {SolverOptions{}, iterative()}) {
        auto r = eigs_below(lap, 1.0, opts);
        REQUIRE(r.count == 1);
        CHECK(std::abs(r.values[0]) < 1e-10);
        CHECK(eigs_below(lap, -0.5, opts).count == 0);
        const auto shifted = lap.shifted(3.0);
        CHECK(eigs_below(shifted, 5.5, opts).count == eigs_below(lap, 2.5, opts).count);
    }
}

TEST_CASE("lowest_eig_above examples") {
    const auto grid = GridSpec::with_points(2, 4.0, 4);
    const auto lap = build_laplacian(grid);
    for (auto opts : {SolverOptions{}, iterative()}) {
        auto r = lowest_eig_above(lap, -1.0, opts);
        CHECK(r.index == 1);
        CHECK(std::abs(r.value) < 1e-10);
        r = lowest_eig_above(lap, 1.0, opts);
        CHECK(r.index == 2);
        CHECK(r.value == doctest::Approx(2.0).epsilon(1e-10));
        const auto s = lowest_eig_above(lap.shifted(0.75), 1.75, opts);
        CHECK(s.index == r.index);
        CHECK(std::abs(s.value - r.value - 0.75) < 1e-10);
        // b itself an eigenvalue counts as above.
        CHECK(lowest_eig_above(lap, 2.0, opts).value == doctest::Approx(2.0));
        CHECK_THROWS_AS(lowest_eig_above(lap, 100.0, opts), SolverError);
    }
}

TEST_CASE("dense and iterative agree on disordered operators") {
    const auto bg = PeriodicPotential(PeriodicPotential::Kind::checkerboard, 1.0, 6.0);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto H = disordered(32, 4.0, seed, bg);  // 1024 nodes
        const auto dense = dense_spectrum(H);
        const double b = dense[40] + 0.5 * (dense[41] - dense[40]);
        const auto it = lowest_eig_above(H, b, iterative());
        CHECK(it.index == 42);
        CHECK(std::abs(it.value - dense[41]) < 1e-7);
        CHECK(it.residual <= tol_eig * (std::abs(it.value) + 1.0));
        CHECK(std::abs(it.vector.norm() - 1.0) < 1e-12);

        const auto low = eigs_below(H, b, iterative());
        REQUIRE(low.count == 41);
        for (std::size_t k = 0; k < 41; ++k) {
            CHECK(std::abs(low.values[k] - dense[k]) < 1e-7);
            CHECK(low.residuals[k] <= tol_eig * (std::abs(low.values[k]) + 1.0));
        }
        CHECK(std::is_sorted(low.values.begin(), low.values.end()));

        const double lo = dense[60] - 1e-3, hi = dense[75] + 1e-3;
        const auto win = eigs_in_window(H, lo, hi, iterative());
        std::vector<double> expect;
        for (double v : dense)
            if (v > lo && v < hi) expect.push_back(v);
        REQUIRE(win.values.size() == expect.size());
        for (std::size_t k = 0; k < expect.size(); ++k) CHECK(std::abs(win.values[k] - expect[k]) < 1e-7);
        CHECK(count_below(H, b) == 41);
    }
}

TEST_CASE("degenerate clusters are resolved") {
    // The free periodic laplacian has fourfold and eightfold multiplicities.
    const auto lap = build_laplacian(GridSpec::with_points(2, 16.0, 16));
    const auto dense = dense_spectrum(lap);
    const auto low = lowest_eigs(lap, 25, iterative());
    for (std::size_t k = 0; k < 25; ++k) CHECK(std::abs(low.values[k] - dense[k]) < 1e-7);
}

TEST_CASE("shift equivariance") {
    const auto H = disordered(16, 2.0, 9, PeriodicPotential::zero());
    const auto a = eigs_below(H, 40.0);
    const auto b = eigs_below(H.shifted(2.5), 42.5);
    REQUIRE(a.count == b.count);
    for (std::size_t k = 0; k < a.count; ++k) CHECK(std::abs(b.values[k] - a.values[k] - 2.5) < 1e-10);
}

TEST_CASE("track_family") {
    const auto grid = GridSpec::make(2, 2.0, 0.25);
    const auto bg = PeriodicPotential::zero();
    std::vector<double> ts{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<SingleSiteProfile> none;
    auto tr = track_family(grid, bg, none, ts, {-1.0, 50.0});
    for (const auto& v : tr.in_window) CHECK(v == tr.in_window.front());
    tr = track_family(grid, bg, none, ts, {-10.0, -1.0});
    for (const auto& v : tr.in_window) CHECK(v.empty());

    std::vector<SingleSiteProfile> bump{SingleSiteProfile::indicator(Site{{0, 0}}, 1.0, 3.0, 0.5, {0.0, 0.0})};
    tr = track_family(grid, bg, bump, ts, {-1.0, 1e6});
    for (std::size_t i = 1; i < ts.size(); ++i) {
        REQUIRE(tr.in_window[i].size() == tr.in_window[i - 1].size());
        for (std::size_t k = 0; k < tr.in_window[i].size(); ++k)
            CHECK(tr.in_window[i][k] >= tr.in_window[i - 1][k] - 1e-10);
    }
    std::vector<double> unsorted{0.5, 0.1};
    CHECK_THROWS_AS(track_family(grid, bg, bump, unsorted, {0.0, 1.0}), InputError);
}

TEST_CASE("iterative path on operators smaller than a few blocks") {
    // N = 25 is not a multiple of the block size; the last block must shrink.
    for (std::int64_t n : {3, 5, 7}) {
        const auto H = build_laplacian(GridSpec::with_points(2, 1.0, n, Boundary::dirichlet));
        const auto ev = dense_spectrum(H);
        const auto r = eigs_below(H, ev.back() + 1.0, iterative(), false);
        REQUIRE(r.values.size() == ev.size());
        for (std::size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(r.values[i] - ev[i]) < 1e-7);
    }
}
