#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "iselab/errors.hpp"
#include "iselab/ucp.hpp"

using namespace iselab;

namespace {

PotentialModel bump_model(double c = 1.0, double delta = 0.25) {
    PotentialModel m;
    m.background = PeriodicPotential::zero();
    m.single_site.c = c;
    m.single_site.height = c;
    m.single_site.delta = delta;
    m.single_site.radius = delta;
    return m;
}

std::vector<Site> merged_sites(const EventSpec& spec, const PotentialModel& model, const GridSpec& grid) {
    std::set<Site> all;
    for (const auto& s : event_sites(spec)) all.insert(s);
    for (const auto& s : model.sites_for(grid)) all.insert(s);
    return {all.begin(), all.end()};
}

double direct_mass_ratio(const GridSpec& grid, const Vector& phi, const std::vector<double>& c, double r) {
    double on = 0.0, total = 0.0;
    const auto n = grid.points_per_side();
    for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < n; ++i) {
            const double x = grid.lower(0) + (i + 0.5) * grid.spacing();
            const double y = grid.lower(1) + (j + 0.5) * grid.spacing();
            const double w = phi[i + n * j] * phi[i + n * j];
            total += w;
            if (std::hypot(x - c[0], y - c[1]) < r) on += w;
        }
    return on / total;
}

} // namespace

TEST_CASE("selection takes the lexicographically smallest qualifying site") {
    const auto model = bump_model();
    const auto grid = GridSpec::make(2, 6.0, 0.125);
    EventSpec spec{2, 3, 6.0L, 0.5, 0.5};
    const auto sites = merged_sites(spec, model, grid);

    auto sel = equidistributed_from_event(constant_configuration(sites, 1.0), spec, model, grid);
    REQUIRE(sel.chosen.size() == 9);
    for (const auto& [cell, site] : sel.chosen) {
        for (int a = 0; a < 2; ++a) CHECK(site.index[a] == cell.index[a] * 3 - 1);
    }

    // Exactly one qualifying site per cell.
    auto cfg = constant_configuration(sites, 0.0);
    for (const auto& cell : event_cells(spec)) cfg.values[Site{{cell.index[0] * 3 + 1, cell.index[1] * 3}}] = 0.9;
    sel = equidistributed_from_event(cfg, spec, model, grid);
    for (const auto& [cell, site] : sel.chosen) CHECK(site == (Site{{cell.index[0] * 3 + 1, cell.index[1] * 3}}));

    // Random qualifying patterns against a per-cell scan over the raw offsets.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 20) {
        DisorderConfiguration r;
        for (const auto& s : sites) r.values[s] = u(rng);
        if (!event_A_indicator(r, spec)) {
            CHECK_THROWS_AS(equidistributed_from_event(r, spec, model, grid), InputError);
            continue;
        }
        sel = equidistributed_from_event(r, spec, model, grid);
        for (const auto& [cell, site] : sel.chosen) {
            Site best;
            bool found = false;
            for (int dx = -1; dx <= 1 && !found; ++dx)
                for (int dy = -1; dy <= 1 && !found; ++dy) {
                    Site s{{cell.index[0] * 3 + dx, cell.index[1] * 3 + dy}};
                    if (r.at(s) >= 0.5) {
                        best = s;
                        found = true;
                    }
                }
            CHECK(found);
            CHECK(site == best);
        }
        CHECK(sel.sequence.valid());
        ++checked;
    }
}

TEST_CASE("mass ratio") {
    const auto grid = GridSpec::make(2, 3.0, 0.125);
    std::vector<Ball> one{Ball({0.2, -0.1}, 0.4)};
    const auto mask = IndicatorMask::from_balls(grid, one);
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(grid.num_nodes()));
    CHECK(mass_ratio(ones, mask) == doctest::Approx(double(mask.count()) / double(grid.num_nodes())).epsilon(1e-14));
    CHECK(mass_ratio(ones, IndicatorMask::all(grid)) == 1.0);
    CHECK_THROWS_AS(mass_ratio(Vector::Zero(ones.size()), mask), InputError);

    const auto low = lowest_eigs(build_laplacian(grid), 2);
    const double expect = direct_mass_ratio(grid, low.vectors[1], {0.2, -0.1}, 0.4);
    CHECK(mass_ratio(low.vectors[1], mask) == doctest::Approx(expect).epsilon(1e-12));

    // Additive over disjoint masks, monotone under enlargement.
    std::vector<Ball> other{Ball({-1.0, 1.0}, 0.3)};
    const auto m2 = IndicatorMask::from_balls(grid, other);
    REQUIRE(mask.disjoint_from(m2));
    const Vector& phi = low.vectors[1];
    CHECK(mass_ratio(phi, mask.united(m2)) == doctest::Approx(mass_ratio(phi, mask) + mass_ratio(phi, m2)).epsilon(1e-12));
    CHECK(mass_ratio(phi, mask.united(m2)) >= mass_ratio(phi, mask));
}

TEST_CASE("theoretical bound") {
    CHECK(ucp_theoretical_bound({0.5, 1.0, 0.0, 0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ucp_theoretical_bound({0.5, 1.0, 0.0, -3.0, 1.0}) == ucp_theoretical_bound({0.5, 1.0, 0.0, 0.0, 1.0}));
    CHECK_THROWS_AS(ucp_theoretical_bound({0.6, 1.0, 0.0, 0.0, 1.0}), InputError);
    CHECK_THROWS_AS(ucp_theoretical_bound({0.2, 1.0, 0.0, 0.0, 0.0}), InputError);
    // With fixed δ, V∞, E, N the bound decays only polynomially in l and eventually beats exp(−l^{7/5}).
    const UCPBoundParams base{0.25, 1.0, 0.0, 0.0, 1.0};
    int first = -1;
    for (int l = 1; l <= 60; ++l) {
        auto p = base;
        p.l = l;
        const bool ok = log_ucp_theoretical_bound(p) >= -std::pow(double(l), 1.4);
        if (ok && first < 0) first = l;
        if (first >= 0) CHECK(ok);
    }
    CHECK(first > 0);
}

TEST_CASE("envelope fit") {
    UCPBoundParams p{0.25, 3.0, 0.0, 2.0, 2.0};
    const double r2 = ucp_theoretical_bound(p);
    std::vector<UCPSample> s{{p, r2, "a"}};
    CHECK(fit_ucp_constant(s, 1).N_hat == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_ucp_constant(s), InputError);
    p.N = 1.0;
    s.push_back({p, ucp_theoretical_bound(p), "b"});
    const auto fit = fit_ucp_constant(s, 1);
    CHECK(fit.N_hat == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.binding == 0);
    s.push_back({p, 1.0, "bad"});
    CHECK_THROWS_AS(fit_ucp_constant(s, 1), InputError);
    std::vector<UCPSample> five(5, s[0]);
    CHECK(halve_corpus(five).size() == 3);
}

TEST_CASE("lift for masks") {
    const auto grid = GridSpec::make(2, 3.0, 0.25);
    const auto bg = PeriodicPotential(PeriodicPotential::Kind::cosine, 1.0, 0.8);
    std::vector<Ball> balls{Ball({0.0, 0.0}, 0.4)};
    const auto mask = IndicatorMask::from_balls(grid, balls);
    const auto ground = dense_spectrum(assemble_background(grid, bg)).front();
    CHECK(std::abs(lift_for_mask(grid, bg, mask, 0.0, ground).lift()) <= tol_eig);
    const auto full = lift_for_mask(grid, bg, IndicatorMask::all(grid), 0.35, ground);
    CHECK(full.lift() == doctest::Approx(0.35).epsilon(1e-9));
    const auto part = lift_for_mask(grid, bg, mask, 0.35, ground);
    CHECK(part.lift() > 10 * tol_eig);
    CHECK(part.lift() <= 0.35 + tol_eig);
}

TEST_CASE("lifting experiment on the free laplacian") {
    const auto model = bump_model(1.0, 0.25);
    const auto grid = GridSpec::make(2, 6.0, 0.125, Boundary::periodic);
    EventSpec spec{2, 3, 6.0L, 0.5, 0.5};
    const auto cfg = constant_configuration(merged_sites(spec, model, grid), 0.7);
    SolverOptions it;
    it.dense_max = 0;
    const auto rec = lifting_experiment(grid, model, cfg, spec, 0.0, it);
    CHECK(rec.k0 == 1);
    CHECK(rec.observed_lift > 10 * tol_eig);
    CHECK(rec.observed_lift <= 0.5 + tol_eig);
    CHECK(rec.sandwich_ok);
    const auto sel = equidistributed_from_event(cfg, spec, model, grid);
    const auto oracle = dense_spectrum(assemble_test_perturbation(grid, model.background, sel.mask, 0.5)).front();
    CHECK(std::abs(rec.lambda_test - oracle) < 1e-7);
    CHECK(rec.predicted_floor == doctest::Approx(0.5 * std::exp(-std::pow(3.0, 1.4))));
    CHECK(rec.to_json()["k0"] == 1);
}

TEST_CASE("sandwich on small periodic grids") {
    auto model = bump_model(1.5, 0.3);
    model.background = PeriodicPotential(PeriodicPotential::Kind::cosine, 1.0, 0.5);
    const auto grid = GridSpec::with_points(2, 3.0, 12);
    const auto sites = model.sites_for(grid);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto cfg = sample_configuration(seed, sites, model.disorder);
        const auto r = sandwich_check(grid, model, cfg, 0.5, 10);
        CHECK(r.violations == 0);
        CHECK(r.background.size() == 10);
    }
}

TEST_CASE("gap hypothesis") {
    const auto grid = GridSpec::with_points(2, 2.0, 12);
    const PeriodicPotential bg(PeriodicPotential::Kind::separable_step, 1.0, 40.0, 0.25);
    const auto ev = dense_spectrum(assemble_background(grid, bg));
    // Widest gap among the lowest 40 levels.
    std::size_t at = 0;
    for (std::size_t k = 1; k < 40; ++k)
        if (ev[k] - ev[k - 1] > ev[at + 1] - ev[at]) at = k - 1;
    REQUIRE(ev[at + 1] - ev[at] > 1.0);
    const std::pair<double, double> win{ev[at], ev[at + 1]};
    const auto ts = default_t_grid();
    CHECK(ts.size() == 21);
    std::vector<SingleSiteProfile> none;
    CHECK(verify_gap_hypothesis(grid, bg, none, win, ts).ok);
    const std::pair<double, double> bad{ev[at] - 0.5, ev[at + 1]};
    const auto rep = verify_gap_hypothesis(grid, bg, none, bad, ts);
    CHECK_FALSE(rep.ok);
    CHECK(rep.first_failure_t == 0.0);
    std::vector<double> coarse{0.0, 0.5, 1.0};
    CHECK_THROWS_AS(verify_gap_hypothesis(grid, bg, none, win, coarse), InputError);

    auto model = bump_model(0.6, 0.3);
    model.background = bg;
    const auto profiles = model.profiles_for(grid);
    const auto gr = verify_gap_hypothesis(grid, bg, profiles, win, ts);
    bool oracle = true;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::size_t inside = 0;
        for (double v : dense_spectrum(assemble_interpolated(grid, bg, ts[i], profiles)))
            if (v > win.first + tol_gap && v < win.second - tol_gap) ++inside;
        CHECK(inside == gr.in_window[i]);
        oracle = oracle && inside == 0;
    }
    CHECK(gr.ok == oracle);
}
