#include "iselab/ise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "iselab/errors.hpp"
#include "iselab/io.hpp"
#include "iselab/parallel.hpp"
#include "iselab/random.hpp"

namespace iselab {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Largest eigenvalue strictly below x, found by widening a window downward until it is nonempty.
double top_below(const SparseSymmetricOperator& H, double x, double step, const SolverOptions& opts) {
    const std::size_t below = count_below(H, x, opts);
    if (below == 0) throw InputError("no spectrum below the requested energy");
    const double floor = H.gershgorin_lower() - 1.0;
    double s = std::max(step, 1e-3);
    while (true) {
        const double lo = std::max(x - s, floor);
        if (count_below(H, lo, opts) < below) {
            const auto w = eigs_in_window(H, lo, x, opts, false);
            if (w.values.empty()) throw SolverError("window count and computed eigenvalues disagree");
            return *std::max_element(w.values.begin(), w.values.end());
        }
        if (lo == floor) throw SolverError("inertia count below the Gershgorin bound");
        s *= 2.0;
    }
}

nlohmann::ordered_json real_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

} // namespace

nlohmann::ordered_json BandEdge::to_json() const {
    nlohmann::ordered_json j;
    j["a"] = real_or_null(a);
    j["b"] = b;
    j["k0"] = k0;
    j["a_eff"] = real_or_null(a_eff);
    j["bottom_mode"] = bottom_mode;
    j["doubled_box_checked"] = doubled_box_checked;
    j["hypothesis_holds"] = hypothesis_holds();
    return j;
}

BandEdge band_edge_of_background(const GridSpec& grid, const PeriodicPotential& background,
                                 std::span<const SingleSiteProfile> profiles, std::optional<double> hint,
                                 const SolverOptions& opts, bool check_doubled_box) {
    const auto H0 = assemble_background(grid, background);
    BandEdge e;
    if (!hint) {
        e.bottom_mode = true;
        e.a = e.a_eff = neg_inf;
        e.b = lowest_eigs(H0, 1, opts, false).values.front();
        e.k0 = 1;
        return e;
    }
    const auto up = lowest_eig_above(H0, *hint, opts, false);
    e.b = up.value;
    e.k0 = up.index;
    if (e.k0 < 2) throw InputError("no spectrum below the hint; omit the hint for bottom mode");
    e.a = top_below(H0, e.b - 2.0 * opts.tol * (1.0 + std::abs(e.b)), e.b - *hint + 1.0, opts);
    const double w = e.width();
    if (!(w > 10.0 * tol_gap)) throw InputError("no spectral gap near the hint");

    if (check_doubled_box) {
        const auto big = GridSpec::make(grid.dimension(), 2.0 * grid.side(), grid.spacing(), grid.boundary(),
                                        grid.center());
        const auto H2 = assemble_background(big, background);
        const std::size_t n = count_below(H2, e.b - 0.25 * w, opts) - count_below(H2, e.a + 0.25 * w, opts);
        if (n != 0) throw InputError("no spectral gap near the hint (level spacing closes on the doubled box)");
        e.doubled_box_checked = true;
    }

    const auto HW = assemble_interpolated(grid, background, 1.0, profiles);
    const double guard = e.b - 2.0 * opts.tol * (1.0 + std::abs(e.b));
    if (count_below(HW, guard, opts) < e.k0 - 1) {
        // A lower-band level of H₀ + W has crossed b.
        e.a_eff = eigenvalue_at_index(HW, e.k0 - 1, guard, opts).value;
    } else {
        e.a_eff = top_below(HW, guard, 0.125 * w, opts);
    }
    return e;
}

void ExperimentPlan::validate() const {
    model.validate();
    if (L.empty()) throw InputError("plan needs at least one L");
    if (!std::is_sorted(L.begin(), L.end()) || std::adjacent_find(L.begin(), L.end()) != L.end())
        throw InputError("plan L list must be strictly ascending");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("plan alpha must lie in (0,1)");
    if (!(q > 0.0)) throw InputError("plan q must be positive");
    if (trials < 1) throw InputError("plan needs at least one trial");
    if (!(h > 0.0)) throw InputError("plan spacing h must be positive");
    if (!(t_step > 0.0 && t_step <= 0.05)) throw InputError("plan t_step must lie in (0, 0.05]");
}

nlohmann::ordered_json ExperimentPlan::to_json() const {
    nlohmann::ordered_json j;
    j["model_ref"] = model_ref;
    j["model"] = model_to_json(model);
    j["L"] = L;
    j["alpha"] = alpha;
    j["q"] = q;
    j["trials"] = trials;
    j["seed"] = seed;
    j["boundary"] = to_string(boundary);
    j["h"] = h;
    j["hint"] = hint ? nlohmann::ordered_json(*hint) : nlohmann::ordered_json(nullptr);
    j["t_step"] = t_step;
    j["check_doubled_box"] = check_doubled_box;
    j["solver"] = solver_to_json(solver);
    return j;
}

TrialContext make_trial_context(const GridSpec& grid, const PotentialModel& model, const BandEdge& edge, double alpha,
                                const SolverOptions& opts) {
    TrialContext ctx{grid, model, model.profiles_for(grid), {}, edge, {}, 0.0, opts};
    const double L = grid.side();
    ctx.width = std::pow(L, -alpha);
    const auto scale = try_select_scale(static_cast<long double>(L), alpha);
    ctx.event = EventSpec{grid.dimension(), scale.l, static_cast<long double>(L), model.disorder.eta(),
                          model.disorder.kappa()};
    std::set<Site> all;
    for (const auto& s : model.sites_for(grid)) all.insert(s);
    if (scale.l > 0 && model.period == 1.0) {
        ctx.event.validate();
        for (const auto& s : event_sites(ctx.event)) all.insert(s);
    } else {
        ctx.event.l = 0;
    }
    ctx.sites.assign(all.begin(), all.end());
    return ctx;
}

nlohmann::ordered_json TrialRecord::to_json() const {
    nlohmann::ordered_json j;
    j["index"] = index;
    j["seed"] = seed;
    j["valid"] = valid;
    if (!valid) j["error"] = error;
    j["value"] = real_or_null(value);
    j["k"] = k;
    j["success"] = success;
    j["borderline"] = borderline;
    j["event_A"] = event_A;
    j["lift"] = lift;
    j["lift_exceeds"] = lift_exceeds;
    return j;
}

TrialRecord run_ise_trial(const TrialContext& ctx, std::uint64_t seed, std::size_t index) {
    TrialRecord r;
    r.index = index;
    r.seed = seed;
    const auto& m = ctx.model;
    const double b = ctx.edge.b;
    try {
        const auto cfg = sample_configuration(seed, ctx.sites, m.disorder);
        if (ctx.event.l > 0) r.event_A = event_A_indicator(cfg, ctx.event);
        if (!(ctx.width > 0.0)) {
            // [b, b) is empty.
            r.success = true;
            r.value = std::numeric_limits<double>::quiet_NaN();
            return r;
        }
        const auto Hw = assemble_hamiltonian(ctx.grid, m.background, cfg, ctx.profiles);
        const auto low = lowest_eig_above(Hw, b, ctx.solver, false);
        r.value = low.value;
        r.k = low.index;
        const double edge = b + ctx.width;
        r.borderline = std::abs(r.value - edge) <= ctx.solver.tol;
        r.success = !r.borderline && r.value > edge;

        const auto mask = threshold_mask(cfg, m.disorder.eta(), m, ctx.grid);
        if (!mask.empty()) {
            const auto Ht = assemble_test_perturbation(ctx.grid, m.background, mask, m.disorder.eta() * m.single_site.c);
            r.lift = eigenvalue_at_index(Ht, ctx.edge.k0, b, ctx.solver).value - b;
        }
        r.lift_exceeds = r.lift >= ctx.width + ctx.solver.tol;
    } catch (const SolverError& e) {
        r.valid = false;
        r.success = false;
        r.error = e.what();
    }
    return r;
}

TrialRecord run_ise_trial(std::uint64_t seed, double L, double alpha, const PotentialModel& model, double b, double h,
                          Boundary bc, const SolverOptions& opts) {
    const auto grid = GridSpec::make(model.dimension, L, h, bc);
    BandEdge edge;
    edge.b = b;
    edge.k0 = 1 + count_below(assemble_background(grid, model.background), b - opts.tol * (1.0 + std::abs(b)), opts);
    return run_ise_trial(make_trial_context(grid, model, edge, alpha, opts), seed);
}

bool ISEReport::nondecreasing_trend() const {
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i].ci.hi < levels[i - 1].ci.lo) return false;
    return true;
}

std::size_t ISEReport::certainty_violations() const {
    std::size_t n = 0;
    for (const auto& lv : levels) n += lv.certainty_violations;
    return n;
}

nlohmann::ordered_json ISEReport::to_json(bool with_trials) const {
    nlohmann::ordered_json j;
    j["plan"] = plan.to_json();
    auto& arr = j["levels"] = nlohmann::ordered_json::array();
    for (const auto& lv : levels) {
        nlohmann::ordered_json o;
        o["L"] = lv.L;
        o["l"] = lv.l;
        o["window"] = lv.width;
        o["edge"] = lv.edge.to_json();
        o["gap_ok"] = lv.gap_ok;
        o["trials"] = lv.trials;
        o["valid"] = lv.valid;
        o["invalid"] = lv.trials - lv.valid;
        o["successes"] = lv.successes;
        o["borderline"] = lv.borderline;
        o["event_A"] = lv.event_A;
        o["lift_exceeds"] = lv.lift_exceeds;
        o["certainty_violations"] = lv.certainty_violations;
        o["p_hat"] = lv.p_hat;
        o["ci_lo"] = lv.ci.lo;
        o["ci_hi"] = lv.ci.hi;
        o["target"] = lv.target;
        o["ledger"] = lv.ledger.to_json();
        if (with_trials) {
            auto& t = o["records"] = nlohmann::ordered_json::array();
            for (const auto& r : lv.records) t.push_back(r.to_json());
        }
        arr.push_back(std::move(o));
    }
    j["nondecreasing_trend"] = nondecreasing_trend();
    j["certainty_violations"] = certainty_violations();
    return j;
}

ISEReport estimate_ise_probability(const ExperimentPlan& plan, int workers) {
    plan.validate();
    ISEReport rep;
    rep.plan = plan;
    const auto& m = plan.model;
    for (std::size_t i = 0; i < plan.L.size(); ++i) {
        const double L = plan.L[i];
        const auto grid = GridSpec::make(m.dimension, L, plan.h, plan.boundary);
        const auto profiles = m.profiles_for(grid);
        ISELevel lv;
        lv.L = L;
        lv.edge = band_edge_of_background(grid, m.background, profiles, plan.hint, plan.solver, plan.check_doubled_box);
        if (lv.edge.bottom_mode) {
            lv.gap_ok = true;
        } else if (lv.edge.hypothesis_holds()) {
            const auto ts = default_t_grid(plan.t_step);
            lv.gap_ok = verify_gap_hypothesis(grid, m.background, profiles, {lv.edge.a_eff, lv.edge.b}, ts, plan.solver).ok;
        }
        const auto ctx = make_trial_context(grid, m, lv.edge, plan.alpha, plan.solver);
        lv.l = ctx.event.l;
        lv.width = ctx.width;
        lv.records.resize(plan.trials);
        parallel_for(plan.trials, workers, [&](std::size_t t) {
            lv.records[t] = run_ise_trial(ctx, derive_seed(plan.seed, i, t), t);
        });
        lv.trials = plan.trials;
        for (const auto& r : lv.records) {
            if (!r.valid) continue;
            ++lv.valid;
            lv.successes += r.success;
            lv.borderline += r.borderline;
            lv.event_A += r.event_A;
            lv.lift_exceeds += r.lift_exceeds;
            lv.certainty_violations += r.lift_exceeds && !r.success;
        }
        if (lv.valid == 0) throw InputError("every trial failed at L = " + std::to_string(L));
        lv.p_hat = static_cast<double>(lv.successes) / static_cast<double>(lv.valid);
        lv.ci = wilson_interval(lv.successes, lv.valid);
        lv.target = 1.0 - std::pow(L, -plan.q);
        lv.ledger = evaluate_ledger(m.dimension, L, plan.alpha, plan.q, m.disorder.kappa(), m.disorder.eta(),
                                    m.single_site.c);
        rep.levels.push_back(std::move(lv));
    }
    return rep;
}

nlohmann::ordered_json IDSRecord::to_json() const {
    nlohmann::ordered_json j;
    j["E0"] = E0;
    j["N0"] = N0;
    j["trials"] = trials;
    j["volume"] = volume;
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < E.size(); ++i) {
        nlohmann::ordered_json r;
        r["E"] = E[i];
        r["N"] = N[i];
        r["truncated"] = static_cast<bool>(truncated[i]);
        r["statistic"] = statistic[i] ? nlohmann::ordered_json(*statistic[i]) : nlohmann::ordered_json(nullptr);
        rows.push_back(std::move(r));
    }
    return j;
}

IDSRecord ids_estimate(const PotentialModel& model, const GridSpec& grid, std::span<const double> E_grid,
                       std::size_t trials, std::uint64_t seed, double E0, const SolverOptions& opts, int workers) {
    if (!std::is_sorted(E_grid.begin(), E_grid.end())) throw InputError("energy grid must be sorted");
    if (trials < 1) throw InputError("IDS needs at least one trial");
    const auto profiles = model.profiles_for(grid);
    const auto sites = model.sites_for(grid);
    const std::size_t nE = E_grid.size();
    // Column nE holds the count at E0.
    std::vector<std::vector<std::size_t>> counts(trials, std::vector<std::size_t>(nE + 1));
    parallel_for(trials, workers, [&](std::size_t t) {
        const auto cfg = sample_configuration(derive_seed(seed, 0, t), sites, model.disorder);
        const auto H = assemble_hamiltonian(grid, model.background, cfg, profiles);
        for (std::size_t e = 0; e <= nE; ++e) {
            const double E = e < nE ? E_grid[e] : E0;
            // #{λ ≤ E}: a value within tol above E is counted as equal.
            counts[t][e] = count_below(H, E + opts.tol * (1.0 + std::abs(E)), opts);
        }
    });
    IDSRecord rec;
    rec.E.assign(E_grid.begin(), E_grid.end());
    rec.E0 = E0;
    rec.trials = trials;
    rec.volume = std::pow(grid.side(), grid.dimension());
    rec.N.assign(nE, 0.0);
    rec.truncated.assign(nE, false);
    double n0 = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t e = 0; e < nE; ++e) {
            std::size_t c = counts[t][e];
            if (c > opts.max_eigs) {
                c = opts.max_eigs;
                rec.truncated[e] = true;
            }
            rec.N[e] += static_cast<double>(c);
        }
        n0 += static_cast<double>(std::min(counts[t][nE], opts.max_eigs));
    }
    const double scale = 1.0 / (static_cast<double>(trials) * rec.volume);
    for (auto& v : rec.N) v *= scale;
    rec.N0 = n0 * scale;
    for (std::size_t e = 0; e < nE; ++e) {
        const double dN = rec.N[e] - rec.N0, dE = rec.E[e] - E0;
        if (dN > 0.0 && dN < 1.0 && dE > 0.0 && dE != 1.0 && !rec.truncated[e])
            rec.statistic.emplace_back(std::log(std::abs(std::log(dN))) / std::log(dE));
        else
            rec.statistic.emplace_back();
    }
    return rec;
}

} // namespace iselab
