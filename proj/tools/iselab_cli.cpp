// iselab command-line driver. Exit codes: 0 ok, 1 input error, 2 solver failure, 3 assertion failure.

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "iselab/errors.hpp"
#include "iselab/io.hpp"
#include "iselab/ise.hpp"
#include "iselab/probability.hpp"
#include "iselab/ucp.hpp"

using namespace iselab;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string out;
};

void add_common(CLI::App* sub, Common& c, bool with_seed = true) {
    if (with_seed) sub->add_option("--seed", c.seed, "master seed (u64)");
    sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "output directory for JSON/CSV/SVG artifacts");
}

std::uint64_t need_seed(const Common& c) {
    if (!c.seed) throw InputError("--seed is required");
    return *c.seed;
}

std::string sci(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    return std::string(buf, r.ptr);
}

long double parse_long_real(const std::string& s) {
    char* end = nullptr;
    const long double v = std::strtold(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) throw InputError("not a number: '" + s + "'");
    return v;
}

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
};

void emit(const Common& c, const std::string& stem, RunManifest manifest, const Clock& clock,
          const nlohmann::ordered_json& data, const CsvTable* table = nullptr) {
    if (c.out.empty()) return;
    manifest.wall_clock_seconds = clock.seconds();
    const fs::path dir(c.out);
    write_text_file(dir / (stem + ".json"), render_json_artifact(manifest, data));
    if (table) write_text_file(dir / (stem + ".csv"), table->render(&manifest));
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"Initial scale estimates for random Schroedinger operators at band edges"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    // bands
    Common bc_c;
    std::string bands_model, bands_bc = "periodic";
    double bands_L = 0, bands_h = 1.0 / 12.0;
    std::optional<double> bands_hint;
    bool bands_nodouble = false;
    auto* bands = app.add_subcommand("bands", "gap (a, b) of the background operator near a hint");
    bands->add_option("--model", bands_model, "model JSON")->required();
    bands->add_option("--L", bands_L, "box side")->required();
    bands->add_option("--spacing", bands_h, "grid spacing");
    bands->add_option("--bc", bands_bc, "periodic | dirichlet | neumann");
    bands->add_option("--hint", bands_hint, "energy inside the gap; omit for the bottom of the spectrum");
    bands->add_flag("--no-doubling", bands_nodouble, "skip the doubled-box gap check");
    add_common(bands, bc_c, false);

    // event-prob
    Common ep_c;
    int ep_d = 2;
    std::int64_t ep_l = 1;
    double ep_L = 0, ep_kappa = 0.5, ep_eta = 0.5;
    std::size_t ep_trials = 0;
    auto* ep = app.add_subcommand("event-prob", "exact and Monte Carlo probability of the cell event");
    ep->add_option("--d", ep_d, "dimension");
    ep->add_option("--l", ep_l, "odd cell side")->required();
    ep->add_option("--L", ep_L, "box side")->required();
    ep->add_option("--kappa", ep_kappa, "P[omega >= eta]")->required();
    ep->add_option("--eta", ep_eta, "threshold");
    ep->add_option("--trials", ep_trials, "Monte Carlo trials (0: exact only)");
    add_common(ep, ep_c);

    // scale
    Common sc_c;
    std::string sc_L;
    double sc_alpha = 0.5, sc_eta = 1.0, sc_c_const = 1.0;
    std::optional<double> sc_q, sc_kappa;
    bool sc_min = false, sc_strict = false;
    auto* sc = app.add_subcommand("scale", "scale selection and the probability ledger");
    sc->add_option("--L", sc_L, "box side (decimal, may exceed double range)")->required();
    sc->add_option("--alpha", sc_alpha, "window exponent")->required();
    sc->add_option("--q", sc_q, "target exponent (enables the ledger)");
    sc->add_option("--kappa", sc_kappa, "threshold mass (enables the ledger)");
    sc->add_option("--eta", sc_eta, "threshold");
    sc->add_option("--c", sc_c_const, "single-site lower bound");
    sc->add_flag("--min-scale", sc_min, "also search the smallest L from which the verdict always holds");
    sc->add_flag("--strict", sc_strict, "exit 3 when the ledger verdict is false");
    add_common(sc, sc_c, false);

    // lift
    Common lf_c;
    std::string lf_model;
    LiftingSweep lf;
    std::optional<double> lf_hint;
    auto* lift = app.add_subcommand("lift", "eigenvalue lifting sweep conditioned on the event");
    lift->add_option("--model", lf_model, "model JSON")->required();
    lift->add_option("--L", lf.L, "box side");
    lift->add_option("--spacing", lf.h, "grid spacing");
    lift->add_option("--l", lf.l, "cell sides")->delimiter(',');
    lift->add_option("--p", lf.p, "Bernoulli p per cell side")->delimiter(',');
    lift->add_option("--instances", lf.instances, "instances per cell side");
    lift->add_option("--hint", lf_hint, "energy inside the gap; omit for the bottom of the spectrum");
    add_common(lift, lf_c);

    // ucp
    Common uc_c;
    UCPSweep us;
    auto* ucp = app.add_subcommand("ucp", "mass ratios on equidistributed ball unions and the envelope fit");
    ucp->add_option("--l", us.l, "cell sides (box side 3l)")->delimiter(',');
    ucp->add_option("--instances", us.instances, "ball placements per l");
    ucp->add_option("--spacing", us.h, "grid spacing");
    ucp->add_option("--delta", us.delta, "ball radius");
    add_common(ucp, uc_c);

    // gap
    Common gp_c;
    std::string gp_model, gp_bc = "periodic";
    double gp_L = 0, gp_h = 1.0 / 12.0, gp_step = 0.05;
    std::optional<double> gp_a, gp_b, gp_hint;
    auto* gap = app.add_subcommand("gap", "check that (a, b) stays free of spectrum along H0 + tW");
    gap->add_option("--model", gp_model, "model JSON")->required();
    gap->add_option("--L", gp_L, "box side")->required();
    gap->add_option("--spacing", gp_h, "grid spacing");
    gap->add_option("--bc", gp_bc, "periodic | dirichlet | neumann");
    gap->add_option("--a", gp_a, "window lower end");
    gap->add_option("--b", gp_b, "window upper end");
    gap->add_option("--hint", gp_hint, "derive (a_eff, b) from the gap containing this energy");
    gap->add_option("--step", gp_step, "t spacing (<= 0.05)");
    add_common(gap, gp_c, false);

    // ise
    Common is_c;
    std::string is_plan;
    bool is_norecords = false;
    auto* ise = app.add_subcommand("ise", "Monte Carlo estimate of the initial scale probability");
    ise->add_option("--plan", is_plan, "plan JSON")->required();
    ise->add_flag("--no-records", is_norecords, "omit per-trial records from the JSON report");
    add_common(ise, is_c);

    // ids
    Common id_c;
    std::string id_model, id_bc = "periodic";
    double id_L = 0, id_h = 1.0 / 12.0, id_E0 = 0, id_lo = 0, id_hi = 0;
    std::size_t id_count = 20, id_trials = 10;
    auto* ids = app.add_subcommand("ids", "finite-volume integrated density of states near E0");
    ids->add_option("--model", id_model, "model JSON")->required();
    ids->add_option("--L", id_L, "box side")->required();
    ids->add_option("--spacing", id_h, "grid spacing");
    ids->add_option("--bc", id_bc, "periodic | dirichlet | neumann");
    ids->add_option("--E0", id_E0, "reference edge")->required();
    ids->add_option("--E-min", id_lo, "first energy")->required();
    ids->add_option("--E-max", id_hi, "last energy")->required();
    ids->add_option("--E-count", id_count, "number of energies");
    ids->add_option("--trials", id_trials, "configurations");
    add_common(ids, id_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << tool_version << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    const Clock clock;

    if (*bands) {
        const auto model = load_model(bands_model);
        const auto grid = GridSpec::make(model.dimension, bands_L, bands_h, boundary_from_string(bands_bc));
        const auto e = band_edge_of_background(grid, model.background, model.profiles_for(grid), bands_hint, {},
                                               !bands_nodouble);
        std::cout << "a = " << format_real(e.a) << "\nb = " << format_real(e.b) << "\nk0 = " << e.k0
                  << "\na_eff = " << format_real(e.a_eff) << "\nhypothesis_holds = " << std::boolalpha
                  << e.hypothesis_holds() << "\n";
        nlohmann::ordered_json p{{"model", model_to_json(model)}, {"L", bands_L}, {"h", bands_h}, {"bc", bands_bc}};
        p["hint"] = bands_hint ? nlohmann::ordered_json(*bands_hint) : nlohmann::ordered_json(nullptr);
        p["doubling"] = !bands_nodouble;
        emit(bc_c, "bands", RunManifest::make("bands", p, 1), clock, e.to_json());
        return 0;
    }

    if (*ep) {
        const EventSpec spec{ep_d, ep_l, static_cast<long double>(ep_L), ep_eta, ep_kappa};
        spec.validate();
        const double exact = exact_event_probability(spec);
        std::cout << "P[A] = " << sci(exact) << "\n";
        nlohmann::ordered_json data{{"cells", json_real(spec.cell_count())}, {"exact", exact}};
        nlohmann::ordered_json p{{"d", ep_d}, {"l", ep_l}, {"L", ep_L}, {"kappa", ep_kappa}, {"eta", ep_eta},
                                 {"trials", ep_trials}};
        if (ep_trials > 0) {
            const auto seed = need_seed(ep_c);
            p["seed"] = seed;
            const auto dist = DisorderDistribution::bernoulli(ep_kappa, ep_eta, ep_kappa);
            const auto mc = monte_carlo_event_probability(spec, dist, ep_trials, seed, ep_c.workers);
            const bool ok = monte_carlo_agrees(mc, exact);
            std::cout << "MC p_hat = " << format_real(mc.p_hat) << " (" << mc.successes << "/" << mc.trials
                      << "), 3-sigma Wilson [" << format_real(mc.ci.lo) << ", " << format_real(mc.ci.hi)
                      << "], agrees = " << std::boolalpha << ok << "\n";
            data["mc"] = {{"trials", mc.trials},     {"successes", mc.successes}, {"p_hat", mc.p_hat},
                          {"ci_lo", mc.ci.lo},       {"ci_hi", mc.ci.hi},         {"agrees", ok}};
        }
        emit(ep_c, "event_prob", RunManifest::make("event-prob", p, ep_c.workers), clock, data);
        return 0;
    }

    if (*sc) {
        const long double L = parse_long_real(sc_L);
        const auto s = select_scale(L, sc_alpha);
        std::cout << "l=" << s.l << " window=(" << format_real(static_cast<double>(s.lower)) << ", "
                  << format_real(static_cast<double>(s.upper)) << "]\n";
        nlohmann::ordered_json data{{"l", s.l}, {"x", json_real(s.x)}, {"lower", json_real(s.lower)},
                                    {"upper", json_real(s.upper)}};
        nlohmann::ordered_json p{{"L", sc_L}, {"alpha", sc_alpha}, {"eta", sc_eta}, {"c", sc_c_const}};
        int code = 0;
        if (sc_q || sc_kappa) {
            if (!sc_q || !sc_kappa) throw InputError("the ledger needs both --q and --kappa");
            p["q"] = *sc_q;
            p["kappa"] = *sc_kappa;
            const auto led = build_ledger(2, L, sc_alpha, *sc_q, *sc_kappa, sc_eta, sc_c_const);
            for (const auto& ln : led.lines)
                std::cout << (ln.in_verdict ? "  * " : "    ") << ln.name << ": " << ln.relation << " -> "
                          << (ln.holds ? "holds" : "fails") << "\n";
            std::cout << "verdict = " << std::boolalpha << led.verdict << "\n";
            data["ledger"] = led.to_json();
            if (sc_min) {
                const auto r = min_scale_for_probability(2, sc_alpha, *sc_q, *sc_kappa, sc_eta, sc_c_const);
                std::cout << "L0 = " << format_real(static_cast<double>(r.L0)) << " (l = " << r.l_at_L0 << ")\n";
                data["min_scale"] = {{"L0", json_real(r.L0)}, {"first_pass", json_real(r.first_pass)},
                                     {"l_at_L0", r.l_at_L0}, {"strategy", r.strategy}};
            }
            if (sc_strict && !led.verdict) code = 3;
        }
        emit(sc_c, "scale", RunManifest::make("scale", p, 1), clock, data);
        return code;
    }

    if (*lift) {
        lf.seed = need_seed(lf_c);
        const auto model = load_model(lf_model);
        const auto grid = GridSpec::make(model.dimension, lf.L, lf.h, lf.boundary);
        const auto edge = band_edge_of_background(grid, model.background, model.profiles_for(grid), lf_hint, {}, false);
        const auto recs = run_lifting_sweep(lf, model, edge.b, {}, lf_c.workers);
        std::cout << "b = " << format_real(edge.b) << ", k0 = " << edge.k0 << "\n";
        std::size_t bad = 0;
        for (const auto& r : recs) {
            std::cout << "l=" << r.l << " lift=" << sci(r.observed_lift) << " floor=" << sci(r.predicted_floor)
                      << " sandwich=" << std::boolalpha << r.sandwich_ok << "\n";
            bad += !r.sandwich_ok;
        }
        nlohmann::ordered_json data = nlohmann::ordered_json::array();
        for (const auto& r : recs) data.push_back(r.to_json());
        nlohmann::ordered_json p{{"model", model_to_json(model)}, {"L", lf.L},        {"h", lf.h},
                                 {"l", lf.l},                     {"p", lf.p},        {"instances", lf.instances},
                                 {"seed", lf.seed}};
        p["hint"] = lf_hint ? nlohmann::ordered_json(*lf_hint) : nlohmann::ordered_json(nullptr);
        const auto table = lifting_table(recs);
        emit(lf_c, "lift", RunManifest::make("lift", p, lf_c.workers), clock, data, &table);
        return bad ? 3 : 0;
    }

    if (*ucp) {
        us.seed = need_seed(uc_c);
        const auto res = run_ucp_sweep(us, {}, uc_c.workers);
        std::vector<UCPSample> samples;
        CsvTable t;
        t.header = {"label", "l", "L", "delta", "E", "subspace_dim", "mask_nodes", "min_eigvec_ratio",
                    "min_combination_ratio", "min_ratio"};
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& r : res) {
            samples.push_back(r.sample);
            t.rows.push_back({r.sample.label, format_real(r.instance.l), format_real(r.instance.L),
                              format_real(r.instance.delta), format_real(r.instance.E), std::to_string(r.subspace_dim),
                              std::to_string(r.mask_nodes), format_real(r.min_eigvec_ratio),
                              format_real(r.min_combination_ratio), format_real(r.min_ratio)});
            rows.push_back({{"label", r.sample.label}, {"l", r.instance.l}, {"E", r.instance.E},
                            {"min_ratio", r.min_ratio}, {"min_eigvec_ratio", r.min_eigvec_ratio},
                            {"min_combination_ratio", r.min_combination_ratio}});
            std::cout << r.sample.label << " ratio=" << sci(r.min_ratio) << "\n";
        }
        const auto st = ucp_fit_stability(samples);
        std::cout << "N_hat = " << format_real(st.full.N_hat) << ", halved = " << format_real(st.half.N_hat)
                  << ", change = " << format_real(st.relative_change) << ", stable = " << std::boolalpha << st.stable
                  << "\n";
        nlohmann::ordered_json data{{"samples", rows},
                                    {"N_hat", st.full.N_hat},
                                    {"N_hat_half", st.half.N_hat},
                                    {"relative_change", st.relative_change},
                                    {"binding", res[st.full.binding].sample.label},
                                    {"stable", st.stable}};
        nlohmann::ordered_json p{{"l", us.l}, {"instances", us.instances}, {"h", us.h}, {"delta", us.delta},
                                 {"seed", us.seed}};
        emit(uc_c, "ucp", RunManifest::make("ucp", p, uc_c.workers), clock, data, &t);
        return 0;
    }

    if (*gap) {
        const auto model = load_model(gp_model);
        const auto grid = GridSpec::make(model.dimension, gp_L, gp_h, boundary_from_string(gp_bc));
        const auto profiles = model.profiles_for(grid);
        std::pair<double, double> win;
        if (gp_a && gp_b) {
            win = {*gp_a, *gp_b};
        } else if (gp_hint) {
            const auto e = band_edge_of_background(grid, model.background, profiles, gp_hint, {}, false);
            win = {e.a_eff, e.b};
        } else {
            throw InputError("gap needs --a and --b, or --hint");
        }
        const auto ts = default_t_grid(gp_step);
        const auto rep = verify_gap_hypothesis(grid, model.background, profiles, win, ts);
        std::cout << "window = (" << format_real(rep.a) << ", " << format_real(rep.b) << ")\ngap hypothesis holds = "
                  << std::boolalpha << rep.ok << "\n";
        if (!rep.ok) std::cout << "first failure at t = " << format_real(rep.first_failure_t) << "\n";
        nlohmann::ordered_json data{{"a", rep.a}, {"b", rep.b}, {"ok", rep.ok}, {"t", rep.t}, {"in_window", rep.in_window}};
        nlohmann::ordered_json p{{"model", model_to_json(model)}, {"L", gp_L}, {"h", gp_h}, {"bc", gp_bc},
                                 {"a", win.first}, {"b", win.second}, {"step", gp_step}};
        emit(gp_c, "gap", RunManifest::make("gap", p, 1), clock, data);
        return rep.ok ? 0 : 3;
    }

    if (*ise) {
        auto plan = load_plan(is_plan);
        if (is_c.seed) plan.seed = *is_c.seed;
        const auto rep = estimate_ise_probability(plan, is_c.workers);
        std::cout << "L,l,window,b,trials,valid,p_hat,ci_lo,ci_hi,target,ledger_verdict,lift_exceeds,violations\n";
        for (const auto& lv : rep.levels)
            std::cout << lv.L << "," << lv.l << "," << sci(lv.width) << "," << format_real(lv.edge.b) << ","
                      << lv.trials << "," << lv.valid << "," << format_real(lv.p_hat) << "," << format_real(lv.ci.lo)
                      << "," << format_real(lv.ci.hi) << "," << format_real(lv.target) << ","
                      << std::boolalpha << lv.ledger.verdict << "," << lv.lift_exceeds << ","
                      << lv.certainty_violations << "\n";
        std::cout << "nondecreasing trend = " << std::boolalpha << rep.nondecreasing_trend() << "\n";
        const auto manifest = RunManifest::make("ise", plan.to_json(), is_c.workers);
        const auto table = ise_summary_table(rep);
        emit(is_c, "ise_report", manifest, clock, rep.to_json(!is_norecords), &table);
        if (!is_c.out.empty()) write_text_file(fs::path(is_c.out) / "ise_plot.svg", ise_svg_plot(rep));
        return rep.certainty_violations() ? 3 : 0;
    }

    if (*ids) {
        const auto seed = need_seed(id_c);
        const auto model = load_model(id_model);
        const auto grid = GridSpec::make(model.dimension, id_L, id_h, boundary_from_string(id_bc));
        if (id_count < 1 || !(id_hi >= id_lo)) throw InputError("need --E-count >= 1 and --E-max >= --E-min");
        std::vector<double> E;
        for (std::size_t i = 0; i < id_count; ++i)
            E.push_back(id_count == 1 ? id_lo : id_lo + (id_hi - id_lo) * double(i) / double(id_count - 1));
        const auto rec = ids_estimate(model, grid, E, id_trials, seed, id_E0, {}, id_c.workers);
        const auto table = ids_table(rec);
        std::cout << table.data_section();
        nlohmann::ordered_json p{{"model", model_to_json(model)}, {"L", id_L},        {"h", id_h},
                                 {"bc", id_bc},                   {"E0", id_E0},      {"E", E},
                                 {"trials", id_trials},           {"seed", seed}};
        emit(id_c, "ids", RunManifest::make("ids", p, id_c.workers), clock, rec.to_json(), &table);
        return 0;
    }
    return 1;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
