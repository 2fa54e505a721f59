// Acceptance run: one PASS/FAIL line per criterion. Run from the source root.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "iselab/errors.hpp"
#include "iselab/io.hpp"
#include "iselab/ise.hpp"
#include "iselab/probability.hpp"
#include "iselab/random.hpp"
#include "iselab/ucp.hpp"

using namespace iselab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Sequential draws from one counter stream.
struct Draws {
    CounterStream stream;
    std::uint64_t next = 0;
    double uniform() { return stream.uniform(next++); }
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// 1. Monte Carlo against the closed form.
Outcome event_probability_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    int agree = 0, cells = 0;
    bool kappa_one_exact = true;
    std::uint64_t seed = 101;
    for (std::int64_t l : {1, 3})
        for (double L : {2.0, 6.0, 12.0})
            for (double kappa : {0.3, 0.5, 1.0}) {
                EventSpec spec;
                spec.l = l;
                spec.L = L;
                spec.eta = 1.0;
                spec.kappa = kappa;
                const auto dist = DisorderDistribution::bernoulli(kappa, 1.0, kappa);
                const double exact = exact_event_probability(spec);
                const auto mc = monte_carlo_event_probability(spec, dist, 100000, seed++, workers());
                ++cells;
                if (monte_carlo_agrees(mc, exact)) ++agree;
                if (kappa == 1.0 && !(exact == 1.0 && mc.p_hat == 1.0)) kappa_one_exact = false;
            }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = agree >= 17 && kappa_one_exact && secs < 60.0;
    o.detail = std::to_string(agree) + "/" + std::to_string(cells) + " cells within 3 SE, kappa=1 exact: " +
               (kappa_one_exact ? "yes" : "no") + ", " + fmt("%.1f s", secs);
    return o;
}

// 2. Eigenvalue chain over seeded configurations.
Outcome eigenvalue_sandwich() {
    const auto model = load_model("examples_data/reference_model.json");
    const auto grid = GridSpec::with_points(2, 3.0, 12, Boundary::periodic);
    const auto sites = model.sites_for(grid);
    std::size_t violations = 0;
    double worst = -1.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto cfg = sample_configuration(derive_seed(2026, s), sites, model.disorder);
        const auto r = sandwich_check(grid, model, cfg, model.disorder.eta(), 10, 1e-9);
        violations += r.violations;
        worst = std::max(worst, r.worst_excess);
    }
    return {violations == 0, "100 seeds, k<=10, violations " + std::to_string(violations) +
                                 ", worst relative excess " + fmt("%.3g", worst)};
}

// Window edges placed midway between distinct levels of a reference spectrum.
std::pair<double, double> window_in_gaps(const std::vector<double>& ev, std::size_t from, std::size_t to) {
    auto mid_gap = [&](std::size_t i, int dir) {
        while (i > 0 && i < ev.size() && ev[i] - ev[i - 1] < 1e-6) i += dir;
        if (i == 0) return ev.front() - 1.0;
        if (i >= ev.size()) return ev.back() + 1.0;
        return 0.5 * (ev[i - 1] + ev[i]);
    };
    return {mid_gap(from, -1), mid_gap(to, +1)};
}

double windowed_mismatch(const SparseSymmetricOperator& H, const std::vector<double>& dense, std::size_t from,
                         std::size_t to, bool& count_ok) {
    const auto [lo, hi] = window_in_gaps(dense, from, to);
    SolverOptions it;
    it.dense_max = 0;
    const auto r = eigs_in_window(H, lo, hi, it);
    std::vector<double> ref;
    for (double v : dense)
        if (v > lo && v < hi) ref.push_back(v);
    if (r.values.size() != ref.size()) {
        count_ok = false;
        return INFINITY;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(r.values[i] - ref[i]));
    return err;
}

// 3. Closed forms and dense/iterative agreement.
Outcome closed_form_spectra() {
    double closed_err = 0.0, iter_err = 0.0;
    bool counts = true;
    for (Boundary bc : {Boundary::dirichlet, Boundary::periodic})
        for (std::int64_t n = 2; n <= 8; ++n) {
            const auto grid = GridSpec::with_points(2, 1.0, n, bc);
            const auto H = build_laplacian(grid);
            const auto ev = dense_spectrum(H);
            const auto cf = laplacian_spectrum(2, n, grid.spacing(), bc);
            for (std::size_t i = 0; i < ev.size(); ++i) closed_err = std::max(closed_err, std::abs(ev[i] - cf[i]));
            if (n >= 4) iter_err = std::max(iter_err, windowed_mismatch(H, ev, ev.size() / 4, ev.size() / 2, counts));
        }
    // A disordered gapped operator beyond the dense threshold.
    const auto model = load_model("examples_data/reference_model.json");
    const auto grid = GridSpec::make(2, 4.0, 1.0 / 12.0);
    const auto cfg = sample_configuration(77, model.sites_for(grid), model.disorder);
    const auto H = assemble_hamiltonian(grid, model.background, cfg, model.profiles_for(grid));
    const auto ev = dense_spectrum(H);
    const auto k = static_cast<std::size_t>(std::lower_bound(ev.begin(), ev.end(), 22.0) - ev.begin());
    iter_err = std::max(iter_err, windowed_mismatch(H, ev, k > 20 ? k - 20 : 0, k + 20, counts));
    Outcome o;
    o.pass = closed_err <= 1e-10 && iter_err <= 1e-7 && counts;
    o.detail = "closed-form max error " + fmt("%.2e", closed_err) + ", dense vs iterative " + fmt("%.2e", iter_err) +
               (counts ? "" : ", window counts differ");
    return o;
}

// 4. Lifting sweep and the fitted UCP constant.
Outcome lifting_and_ucp() {
    const auto model = load_model("examples_data/reference_model.json");
    LiftingSweep sweep;
    sweep.seed = 4;
    const auto grid = GridSpec::make(2, sweep.L, sweep.h, sweep.boundary);
    const auto edge = band_edge_of_background(grid, model.background, model.profiles_for(grid), 22.0, {}, false);
    const auto recs = run_lifting_sweep(sweep, model, edge.b, {}, workers());

    std::size_t positive = 0;
    bool sandwich = true;
    std::map<std::int64_t, std::pair<double, int>> log_lift;  // per l: sum of logs, count
    for (const auto& r : recs) {
        if (r.observed_lift > 10.0 * tol_eig) ++positive;
        sandwich = sandwich && r.sandwich_ok;
        auto& [sum, n] = log_lift[r.l];
        sum += std::log(std::max(r.observed_lift, 1e-300));
        ++n;
    }
    bool nonincreasing = true;
    std::ostringstream means;
    double prev = INFINITY;
    for (const auto& [l, sn] : log_lift) {
        const double m = sn.first / sn.second;
        nonincreasing = nonincreasing && m <= prev;
        prev = m;
        means << " l=" << l << ":" << fmt("%.4g", std::exp(m));
    }

    UCPSweep us;
    us.seed = 5;
    const auto res = run_ucp_sweep(us, {}, workers());
    std::vector<UCPSample> samples;
    for (const auto& r : res) samples.push_back(r.sample);
    const auto st = ucp_fit_stability(samples);

    Outcome o;
    o.pass = positive == recs.size() && !recs.empty() && nonincreasing && std::isfinite(st.full.N_hat) &&
             st.stable;
    o.detail = "lift > 10 tol in " + std::to_string(positive) + "/" + std::to_string(recs.size()) +
               ", mean lift" + means.str() + (nonincreasing ? " (nonincreasing)" : " (NOT nonincreasing)") +
               ", sandwich " + (sandwich ? "ok" : "violated") + ", N_hat " + fmt("%.4f", st.full.N_hat) +
               " halved " + fmt("%.4f", st.half.N_hat) + " change " + fmt("%.1f%%", 100.0 * st.relative_change);
    return o;
}

// 5. Scale selector on random pairs.
Outcome scale_selector() {
    Draws rng{CounterStream(55, 0x5ca1e)};
    std::size_t nonempty = 0, bad = 0, empty = 0, empty_bad = 0;
    while (nonempty < 1000) {
        const long double logL = 0.01L + 5000.0L * std::pow(rng.uniform(), 3.0);
        const long double L = std::exp(logL);
        const double alpha = std::max(1e-3, rng.uniform());
        const long double x = std::pow(static_cast<long double>(alpha) * std::log(L), 2.0L / 3.0L);
        std::int64_t odd = 0;
        for (auto l = static_cast<std::int64_t>(std::floor(x)); l > 0; --l)
            if (l % 2 == 1 && 0.5L * x < l) {
                odd = l;
                break;
            }
        if (odd == 0) {
            ++empty;
            try {
                select_scale(L, alpha);
                ++empty_bad;
            } catch (const InputError&) {
            }
            continue;
        }
        ++nonempty;
        try {
            const auto s = select_scale(L, alpha);
            const auto l = static_cast<long double>(s.l);
            if (s.l % 2 != 1 || !(0.5L * x < l) || !(l <= x)) ++bad;
        } catch (const std::exception&) {
            ++bad;
        }
    }
    return {bad == 0 && empty_bad == 0 && empty > 0,
            "1000 nonempty windows, " + std::to_string(bad) + " bad; " + std::to_string(empty) +
                " empty windows, " + std::to_string(empty_bad) + " without error"};
}

// 6. Ledger verdicts against the exact probability; scan against bisection.
Outcome ledger_soundness() {
    Draws rng{CounterStream(66, 0x1ed9e)};
    std::size_t checked = 0, unsound = 0, true_verdicts = 0;
    const int d = 2;
    while (checked < 50) {
        const double alpha = 0.2 + 0.7 * rng.uniform();
        const double q = 0.5 + 1.5 * rng.uniform();
        const double kappa = 0.2 + 0.8 * rng.uniform();
        const double eta = 1.0, c = 0.5 + rng.uniform();
        MinScaleResult m;
        try {
            m = min_scale_for_probability(d, alpha, q, kappa, eta, c);
        } catch (const SolverError&) {
            continue;  // outside the search budget
        }
        // Points at and above the guaranteed scale, plus one below it.
        for (long double f : {0.5L, 1.0L, 3.0L}) {
            const long double L = m.L0 * f;
            const auto led = evaluate_ledger(d, L, alpha, q, kappa, eta, c);
            if (!led.verdict) continue;
            ++true_verdicts;
            EventSpec spec;
            spec.dimension = d;
            spec.l = led.scale.l;
            spec.L = L;
            spec.eta = eta;
            spec.kappa = kappa;
            if (log_event_failure(spec) > -q * std::log(L) + 1e-12L) ++unsound;
        }
        ++checked;
    }
    std::size_t agreed = 0, tuples = 0;
    for (int i = 0; tuples < 20; ++i) {
        const double alpha = 0.3 + 0.6 * rng.uniform();
        const double q = 0.5 + 1.5 * rng.uniform();
        const double kappa = 0.3 + 0.7 * rng.uniform();
        const double c = 0.5 + rng.uniform();
        try {
            const auto a = min_scale_scan(d, alpha, q, kappa, 1.0, c);
            const auto b = min_scale_bisect(d, alpha, q, kappa, 1.0, c);
            ++tuples;
            if (std::abs(a.L0 - b.L0) <= 1e-12L * a.L0) ++agreed;
        } catch (const SolverError&) {
        }
    }
    return {unsound == 0 && true_verdicts > 0 && agreed == tuples,
            "50 tuples, " + std::to_string(true_verdicts) + " true verdicts, " + std::to_string(unsound) +
                " unsound; scan/bisect agree on " + std::to_string(agreed) + "/" + std::to_string(tuples)};
}

// 8. Byte-identical CLI data sections across worker counts.
Outcome determinism() {
    std::optional<std::string> json_ref, csv_ref;
    bool same = true;
    std::string why;
    for (int w : {1, 4, 8}) {
        const auto dir = fs::temp_directory_path() / ("iselab_accept_w" + std::to_string(w));
        fs::create_directories(dir);
        const std::string cmd = std::string("\"") + ISELAB_CLI_PATH + "\" ise --plan examples_data/small_plan.json" +
                                " --workers " + std::to_string(w) + " --out \"" + dir.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "ise failed at " + std::to_string(w) + " workers"};
        const auto json = read_json_file(dir / "ise_report.json")["data"].dump();
        std::ifstream in(dir / "ise_report.csv", std::ios::binary);
        std::string line, csv;
        while (std::getline(in, line))
            if (line.rfind("#", 0) != 0) csv += line + "\n";
        if (!json_ref) {
            json_ref = json;
            csv_ref = csv;
        } else {
            if (json != *json_ref) same = false, why += " json@" + std::to_string(w);
            if (csv != *csv_ref) same = false, why += " csv@" + std::to_string(w);
        }
    }
    return {same, same ? "JSON and CSV data sections identical at 1, 4, 8 workers" : "differs:" + why};
}

// 7 and 9 share the reference run.
struct ReferenceRun {
    ISEReport report;
    double seconds = 0.0;
};

ReferenceRun reference_run() {
    const auto plan = load_plan("examples_data/reference_plan.json");
    const auto t0 = std::chrono::steady_clock::now();
    ReferenceRun r{estimate_ise_probability(plan, workers()), 0.0};
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

Outcome conditional_certainty(const ReferenceRun& run) {
    std::size_t trials = 0, invalid = 0, exceeds = 0;
    for (const auto& lv : run.report.levels) {
        trials += lv.trials;
        invalid += lv.trials - lv.valid;
        exceeds += lv.lift_exceeds;
    }
    const auto v = run.report.certainty_violations();
    return {v == 0 && invalid == 0 && run.seconds < 1800.0,
            std::to_string(trials) + " trials, " + std::to_string(exceeds) + " with lift > L^-alpha, " +
                std::to_string(v) + " violations, " + std::to_string(invalid) + " invalid, " +
                fmt("%.0f s", run.seconds)};
}

Outcome ise_trend(const ReferenceRun& run) {
    std::ostringstream s;
    for (const auto& lv : run.report.levels)
        s << " L=" << lv.L << ": " << fmt("%.3f", lv.p_hat) << " [" << fmt("%.3f", lv.ci.lo) << ","
          << fmt("%.3f", lv.ci.hi) << "] target " << fmt("%.3f", lv.target) << ";";
    const bool ok = run.report.nondecreasing_trend();
    return {ok, std::string(ok ? "nondecreasing" : "NOT nondecreasing") + s.str()};
}

Outcome guarded(const std::function<Outcome()>& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int n, const char* name, const Outcome& o) {
        std::printf("criterion %d %-28s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };
    report(1, "event probability", guarded(event_probability_exactness));
    report(2, "eigenvalue sandwich", guarded(eigenvalue_sandwich));
    report(3, "closed-form spectra", guarded(closed_form_spectra));
    report(4, "lifting and UCP", guarded(lifting_and_ucp));
    report(5, "scale selector", guarded(scale_selector));
    report(6, "ledger soundness", guarded(ledger_soundness));

    std::optional<ReferenceRun> ref;
    std::string ref_error;
    try {
        ref = reference_run();
    } catch (const std::exception& e) {
        ref_error = std::string("exception: ") + e.what();
    }
    report(7, "conditional certainty", ref ? guarded([&] { return conditional_certainty(*ref); })
                                           : Outcome{false, ref_error});
    report(8, "determinism", guarded(determinism));
    report(9, "ISE trend", ref ? guarded([&] { return ise_trend(*ref); }) : Outcome{false, ref_error});
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
