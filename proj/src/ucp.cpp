#include "iselab/ucp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "iselab/errors.hpp"
#include "iselab/parallel.hpp"
#include "iselab/random.hpp"

namespace iselab {

EquidistributedSelection equidistributed_from_event(const DisorderConfiguration& cfg, const EventSpec& spec,
                                                    const PotentialModel& model, const GridSpec& grid) {
    if (model.period != 1.0) throw InputError("event experiments need unit site period");
    if (!event_A_indicator(cfg, spec)) throw InputError("event A does not hold for this configuration");
    EquidistributedSelection sel;
    sel.sequence.l = static_cast<double>(spec.l);
    sel.sequence.delta = model.single_site.delta;
    for (const auto& cell : event_cells(spec)) {
        for (const auto& s : cell_sites(spec, cell)) {  // lexicographic
            if (cfg.at(s) >= spec.eta) {
                const auto prof = model.profile_for(s);
                sel.chosen[cell] = s;
                sel.sequence.points[cell] = prof.ball_center;
                sel.balls.push_back(prof.lower_bound_ball());
                break;
            }
        }
    }
    if (!sel.sequence.valid()) throw AssertionFailure("selected balls are not (l, delta)-equidistributed");
    sel.mask = IndicatorMask::from_balls(grid, sel.balls);
    return sel;
}

IndicatorMask threshold_mask(const DisorderConfiguration& cfg, double eta, const PotentialModel& model,
                             const GridSpec& grid) {
    std::vector<Ball> balls;
    for (const auto& s : model.sites_for(grid))
        if (cfg.at(s) >= eta) balls.push_back(model.profile_for(s).lower_bound_ball());
    return IndicatorMask::from_balls(grid, balls);
}

double mass_ratio(const Vector& phi, const IndicatorMask& mask) {
    if (static_cast<std::size_t>(phi.size()) != mask.size()) throw InputError("vector and mask sizes differ");
    double total = 0.0, on = 0.0;
    for (Eigen::Index k = 0; k < phi.size(); ++k) {
        const double w = phi[k] * phi[k];
        total += w;
        if (mask.contains(static_cast<std::size_t>(k))) on += w;
    }
    if (!(total > 0.0)) throw InputError("mass ratio of the zero vector");
    return on / total;
}

void UCPBoundParams::validate() const {
    if (!(delta > 0.0 && delta <= l / 2.0)) throw InputError("UCP bound needs 0 < delta <= l/2");
    if (!(N > 0.0)) throw InputError("UCP constant N must be positive");
    if (!(V_inf >= 0.0)) throw InputError("V_inf must be nonnegative");
}

double UCPBoundParams::exponent() const {
    return 1.0 + std::pow(l, 4.0 / 3.0) * std::pow(V_inf, 2.0 / 3.0) + l * std::sqrt(std::max(E, 0.0));
}

double log_ucp_theoretical_bound(const UCPBoundParams& p) {
    p.validate();
    return p.N * p.exponent() * std::log(p.delta / p.l);
}

double ucp_theoretical_bound(const UCPBoundParams& p) { return std::exp(log_ucp_theoretical_bound(p)); }

UCPFit fit_ucp_constant(std::span<const UCPSample> samples, std::size_t min_samples) {
    if (samples.size() < min_samples) throw InputError("UCP fit needs more samples");
    UCPFit fit;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!(s.ratio > 0.0 && s.ratio < 1.0)) throw InputError("UCP sample ratio must lie in (0,1)");
        UCPBoundParams p = s.params;
        p.N = 1.0;
        p.validate();
        // ratio ≥ (δ/l)^{N P}  ⇔  N ≥ ln(ratio) / (P ln(δ/l)), both logs negative.
        const double n = std::log(s.ratio) / (p.exponent() * std::log(p.delta / p.l));
        fit.per_sample.push_back(n);
        if (i == 0 || n > fit.N_hat) {
            fit.N_hat = n;
            fit.binding = i;
        }
    }
    for (const auto& s : samples) {
        UCPBoundParams p = s.params;
        p.N = fit.N_hat;
        if (std::log(s.ratio) < log_ucp_theoretical_bound(p) * (1.0 + 1e-12) - 1e-300)
            throw AssertionFailure("fitted UCP envelope violated by a sample");
    }
    return fit;
}

std::vector<UCPSample> halve_corpus(std::span<const UCPSample> samples) {
    std::vector<UCPSample> out;
    for (std::size_t i = 0; i < samples.size(); i += 2) out.push_back(samples[i]);
    return out;
}

namespace {

// Number of cells per axis.
double check_instance(const UCPInstance& inst) {
    const double ratio_cells = inst.L / inst.l;
    if (std::abs(ratio_cells - std::round(ratio_cells)) > 1e-9 || static_cast<long>(std::round(ratio_cells)) % 2 == 0)
        throw InputError("UCP box side must be an odd multiple of l so that cells tile it");
    if (!(inst.delta > 0.0 && inst.delta < inst.l / 2.0)) throw InputError("UCP instance needs 0 < delta < l/2");
    return ratio_cells;
}

} // namespace

UCPInstanceResult run_ucp_instance(const UCPInstance& inst, const SolverOptions& opts) {
    check_instance(inst);
    const auto grid = GridSpec::make(2, inst.L, inst.h, Boundary::periodic);
    // Eigenvalues ≤ E belong to the subspace; the solver treats values within tol of a threshold as above it.
    return evaluate_ucp_instance(inst, eigs_below(assemble_background(grid, inst.background),
                                                  inst.E + 2.0 * opts.tol * (1.0 + std::abs(inst.E)), opts, true));
}

UCPInstanceResult evaluate_ucp_instance(const UCPInstance& inst, const SpectralWindowResult& sub) {
    const double ratio_cells = check_instance(inst);
    if (sub.count == 0 || sub.vectors.size() != sub.count) throw InputError("spectral subspace below E is empty");
    const auto grid = GridSpec::make(2, inst.L, inst.h, Boundary::periodic);
    const int d = grid.dimension();

    // Ball centers uniform in the shrunken cell so that B_δ stays strictly inside Λ_l(j).
    const std::int64_t half = (static_cast<std::int64_t>(std::round(ratio_cells)) - 1) / 2;
    const double room = inst.l / 2.0 - inst.delta - 1e-9;
    std::vector<Ball> balls;
    CounterStream pos(inst.seed, 0x0ba11);
    std::uint64_t draw = 0;
    std::vector<std::int64_t> m(d, -half);
    while (true) {
        std::vector<double> y(d);
        for (int a = 0; a < d; ++a) y[a] = static_cast<double>(m[a]) * inst.l + room * (2.0 * pos.uniform(draw++) - 1.0);
        balls.emplace_back(std::move(y), inst.delta);
        int a = d - 1;
        for (; a >= 0; --a) {
            if (++m[a] <= half) break;
            m[a] = -half;
        }
        if (a < 0) break;
    }
    const auto mask = IndicatorMask::from_balls(grid, balls);

    UCPInstanceResult r;
    r.instance = inst;
    r.subspace_dim = sub.count;
    r.mask_nodes = mask.count();
    for (const auto& v : sub.vectors) r.min_eigvec_ratio = std::min(r.min_eigvec_ratio, mass_ratio(v, mask));
    CounterStream coef(inst.seed, 0xc0ef);
    draw = 0;
    for (int c = 0; c < inst.combinations; ++c) {
        Vector phi = Vector::Zero(static_cast<Eigen::Index>(grid.num_nodes()));
        for (const auto& v : sub.vectors) {
            // Box–Muller normal coefficients give a uniformly random direction in the subspace.
            const double u1 = 1.0 - coef.uniform(draw++), u2 = coef.uniform(draw++);
            phi += std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2) * v;
        }
        if (phi.norm() == 0.0) continue;
        phi.normalize();
        r.min_combination_ratio = std::min(r.min_combination_ratio, mass_ratio(phi, mask));
    }
    r.min_ratio = std::min(r.min_eigvec_ratio, r.min_combination_ratio);
    r.sample.params = UCPBoundParams{inst.delta, inst.l, inst.background.sup_norm(d), inst.E, 1.0};
    r.sample.ratio = r.min_ratio;
    std::ostringstream os;
    os << "l=" << inst.l << ",L=" << inst.L << ",seed=" << inst.seed;
    r.sample.label = os.str();
    return r;
}

std::vector<UCPInstanceResult> run_ucp_sweep(const UCPSweep& sweep, const SolverOptions& opts, int workers) {
    std::vector<UCPInstanceResult> out;
    for (std::size_t li = 0; li < sweep.l.size(); ++li) {
        UCPInstance base;
        base.l = sweep.l[li];
        base.L = 3.0 * base.l;
        base.h = sweep.h;
        base.delta = sweep.delta;
        const auto grid = GridSpec::make(2, base.L, base.h, Boundary::periodic);
        base.E = 1.01 * laplacian_axis_spectrum(grid.points_per_side(), base.h, Boundary::periodic)[1];
        check_instance(base);
        const auto sub = eigs_below(assemble_background(grid, base.background),
                                    base.E + 2.0 * opts.tol * (1.0 + base.E), opts, true);
        std::vector<UCPInstanceResult> part(sweep.instances);
        parallel_for(sweep.instances, workers, [&](std::size_t i) {
            UCPInstance inst = base;
            inst.seed = derive_seed(sweep.seed, li, i);
            part[i] = evaluate_ucp_instance(inst, sub);
        });
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

UCPStability ucp_fit_stability(std::span<const UCPSample> samples) {
    UCPStability s;
    s.full = fit_ucp_constant(samples);
    const auto half = halve_corpus(samples);
    s.half = fit_ucp_constant(half);
    s.relative_change = std::abs(s.half.N_hat - s.full.N_hat) / s.full.N_hat;
    s.stable = std::isfinite(s.full.N_hat) && s.relative_change <= 0.1;
    return s;
}

nlohmann::ordered_json LiftingRecord::to_json() const {
    nlohmann::ordered_json j;
    j["l"] = l;
    j["L"] = L;
    j["eta"] = eta;
    j["c"] = c;
    j["delta"] = delta;
    j["b"] = b;
    j["k0"] = k0;
    j["lambda_background"] = lambda_background;
    j["lambda_test"] = lambda_test;
    j["lambda_omega"] = lambda_omega;
    j["lambda_envelope"] = lambda_envelope;
    j["observed_lift"] = observed_lift;
    j["predicted_floor"] = predicted_floor;
    j["mask_nodes"] = mask_nodes;
    j["sandwich_ok"] = sandwich_ok;
    return j;
}

MaskLift lift_for_mask(const GridSpec& grid, const PeriodicPotential& background, const IndicatorMask& mask,
                       double amplitude, double b, const SolverOptions& opts) {
    MaskLift r;
    const auto H0 = assemble_background(grid, background);
    const auto base = lowest_eig_above(H0, b, opts, false);
    r.k0 = base.index;
    r.background = base.value;
    const auto Ht = assemble_test_perturbation(grid, background, mask, amplitude);
    r.perturbed = eigenvalue_at_index(Ht, r.k0, b, opts).value;
    return r;
}

LiftingRecord lifting_experiment(const GridSpec& grid, const PotentialModel& model, const DisorderConfiguration& cfg,
                                 const EventSpec& spec, double b, const SolverOptions& opts) {
    const auto sel = equidistributed_from_event(cfg, spec, model, grid);
    const auto profiles = model.profiles_for(grid);
    LiftingRecord rec;
    rec.l = spec.l;
    rec.L = grid.side();
    rec.eta = spec.eta;
    rec.c = model.single_site.c;
    rec.delta = model.single_site.delta;
    rec.b = b;
    rec.mask_nodes = sel.mask.count();

    const auto lift = lift_for_mask(grid, model.background, sel.mask, spec.eta * model.single_site.c, b, opts);
    rec.k0 = lift.k0;
    rec.lambda_background = lift.background;
    rec.lambda_test = lift.perturbed;
    rec.observed_lift = lift.lift();
    rec.predicted_floor = lifting_bound(spec.l, spec.eta, model.single_site.c);

    const auto Hw = assemble_hamiltonian(grid, model.background, cfg, profiles);
    rec.lambda_omega = eigenvalue_at_index(Hw, rec.k0, b, opts).value;
    const auto Hmax = assemble_interpolated(grid, model.background, 1.0, profiles);
    rec.lambda_envelope = eigenvalue_at_index(Hmax, rec.k0, b, opts).value;

    auto le = [](double x, double y) { return x <= y + 1e-9 * std::max(1.0, std::abs(y)); };
    rec.sandwich_ok = le(rec.lambda_background, rec.lambda_test) && le(rec.lambda_test, rec.lambda_omega) &&
                      le(rec.lambda_omega, rec.lambda_envelope);
    return rec;
}

SandwichRecord sandwich_check(const GridSpec& grid, const PotentialModel& model, const DisorderConfiguration& cfg,
                              double eta, std::size_t kmax, double rel_tol, const SolverOptions& opts) {
    const auto profiles = model.profiles_for(grid);
    const auto mask = threshold_mask(cfg, eta, model, grid);
    auto low = [&](const SparseSymmetricOperator& H) { return lowest_eigs(H, kmax, opts, false).values; };
    SandwichRecord r;
    r.background = low(assemble_background(grid, model.background));
    r.test = low(assemble_test_perturbation(grid, model.background, mask, eta * model.single_site.c));
    r.omega = low(assemble_hamiltonian(grid, model.background, cfg, profiles));
    r.envelope = low(assemble_interpolated(grid, model.background, 1.0, profiles));
    r.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kmax; ++k) {
        const double chain[4] = {r.background[k], r.test[k], r.omega[k], r.envelope[k]};
        for (int i = 0; i < 3; ++i) {
            const double excess = (chain[i] - chain[i + 1]) / std::max(1.0, std::abs(chain[i + 1]));
            r.worst_excess = std::max(r.worst_excess, excess);
            if (excess > rel_tol) ++r.violations;
        }
    }
    return r;
}

std::vector<LiftingRecord> run_lifting_sweep(const LiftingSweep& sweep, const PotentialModel& model, double b,
                                             const SolverOptions& opts, int workers) {
    if (sweep.l.size() != sweep.p.size()) throw InputError("lifting sweep needs one Bernoulli p per l");
    const auto grid = GridSpec::make(model.dimension, sweep.L, sweep.h, sweep.boundary);
    const std::size_t n = sweep.l.size() * sweep.instances;
    std::vector<LiftingRecord> out(n);
    parallel_for(n, workers, [&](std::size_t job) {
        const std::size_t li = job / sweep.instances, i = job % sweep.instances;
        PotentialModel m = model;
        m.disorder = DisorderDistribution::bernoulli(sweep.p[li], 1.0, sweep.p[li]);
        const EventSpec spec{m.dimension, sweep.l[li], static_cast<long double>(sweep.L), 1.0, sweep.p[li]};
        spec.validate();
        std::set<Site> all;
        for (const auto& s : event_sites(spec)) all.insert(s);
        for (const auto& s : m.sites_for(grid)) all.insert(s);
        const std::vector<Site> sites(all.begin(), all.end());
        const std::uint64_t base = derive_seed(sweep.seed, li, i);
        for (std::size_t a = 0; a < sweep.max_attempts; ++a) {
            const auto cfg = sample_configuration(derive_seed(base, a), sites, m.disorder);
            if (!event_A_indicator(cfg, spec)) continue;
            out[job] = lifting_experiment(grid, m, cfg, spec, b, opts);
            return;
        }
        throw InputError("event never held within the attempt budget for l = " + std::to_string(sweep.l[li]));
    });
    return out;
}

std::vector<double> default_t_grid(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw InputError("t step must lie in (0,1]");
    const auto n = static_cast<std::size_t>(std::ceil(1.0 / step - 1e-12));
    std::vector<double> t;
    for (std::size_t i = 0; i <= n; ++i) t.push_back(std::min(1.0, static_cast<double>(i) / static_cast<double>(n)));
    return t;
}

GapReport verify_gap_hypothesis(const GridSpec& grid, const PeriodicPotential& background,
                                std::span<const SingleSiteProfile> profiles, std::pair<double, double> window,
                                std::span<const double> t_grid, const SolverOptions& opts) {
    if (t_grid.empty() || t_grid.front() != 0.0 || t_grid.back() != 1.0)
        throw InputError("t grid must start at 0 and end at 1");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1] && t_grid[i] - t_grid[i - 1] <= 0.05 + 1e-12))
            throw InputError("t grid must increase in steps of at most 0.05");
    GapReport rep;
    rep.a = window.first;
    rep.b = window.second;
    const auto tr = track_family(grid, background, profiles, t_grid, window, opts);
    rep.t = tr.t;
    rep.ok = true;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        rep.in_window.push_back(tr.in_window[i].size());
        if (!tr.in_window[i].empty() && rep.ok) {
            rep.ok = false;
            rep.first_failure_t = tr.t[i];
        }
    }
    return rep;
}

} // namespace iselab
