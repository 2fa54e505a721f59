#include "iselab/probability.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "iselab/errors.hpp"
#include "iselab/parallel.hpp"
#include "iselab/random.hpp"

namespace iselab {

namespace {

constexpr long double kInf = std::numeric_limits<long double>::infinity();
// Integers are exact in long double well past this; beyond it L is treated as a real.
constexpr long double kIntegerLimit = 4.0e18L;

std::vector<Site> box_product(int d, std::int64_t lo, std::int64_t hi, std::int64_t step,
                              const std::vector<std::int64_t>& offset) {
    std::vector<Site> out;
    const std::int64_t k = hi - lo + 1;
    if (k <= 0) return out;
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(k);
    out.reserve(total);
    std::vector<std::int64_t> idx(d, lo);
    for (std::size_t t = 0; t < total; ++t) {
        Site s;
        s.index.resize(d);
        for (int a = 0; a < d; ++a) s.index[a] = offset[a] + step * idx[a];
        out.push_back(std::move(s));
        for (int a = d; a-- > 0;) {
            if (++idx[a] <= hi) break;
            idx[a] = lo;
        }
    }
    return out;
}

// M = (2 ceil(L/l) − 1)^d without going through double.
long double cells_in_window(long double L, std::int64_t l, int d) {
    const long double k = 2.0L * std::ceil(L / static_cast<long double>(l)) - 1.0L;
    return std::pow(k, static_cast<long double>(d));
}

long double ln_one_minus(double kappa) { return kappa >= 1.0 ? -kInf : std::log1p(-static_cast<long double>(kappa)); }

} // namespace

// ---------------------------------------------------------------- events

void EventSpec::validate() const {
    if (dimension < 1) throw InputError("event dimension must be positive");
    if (l < 1 || l % 2 == 0) throw InputError("cell side l must be a positive odd integer");
    if (!(L > 0.0)) throw InputError("box side L must be positive");
    if (!(eta > 0.0)) throw InputError("threshold eta must be positive");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw InputError("threshold mass kappa must lie in (0,1]");
}

std::int64_t EventSpec::cells_per_axis() const {
    const long double k = 2.0L * std::ceil(static_cast<long double>(L) / static_cast<long double>(l)) - 1.0L;
    if (k > 1e9L) throw InputError("too many cells to enumerate");
    return static_cast<std::int64_t>(k);
}

long double EventSpec::cell_count() const { return cells_in_window(L, l, dimension); }

std::vector<Site> event_cells(const EventSpec& spec) {
    spec.validate();
    const std::int64_t half = (spec.cells_per_axis() - 1) / 2;
    return box_product(spec.dimension, -half, half, 1, std::vector<std::int64_t>(spec.dimension, 0));
}

std::vector<Site> cell_sites(const EventSpec& spec, const Site& cell) {
    const std::int64_t r = (spec.l - 1) / 2;
    std::vector<std::int64_t> center(cell.index.size());
    for (std::size_t a = 0; a < center.size(); ++a) center[a] = cell.index[a] * spec.l;
    return box_product(spec.dimension, -r, r, 1, center);
}

std::vector<Site> event_sites(const EventSpec& spec) {
    spec.validate();
    const std::int64_t k = spec.cells_per_axis();
    const std::int64_t reach = (k - 1) / 2 * spec.l + (spec.l - 1) / 2;
    return box_product(spec.dimension, -reach, reach, 1, std::vector<std::int64_t>(spec.dimension, 0));
}

std::vector<Site> threshold_set(const DisorderConfiguration& cfg, double eta) {
    std::vector<Site> out;
    for (const auto& [site, w] : cfg.values)
        if (w >= eta) out.push_back(site);
    return out;
}

bool event_A_indicator(const DisorderConfiguration& cfg, const EventSpec& spec) {
    for (const auto& cell : event_cells(spec)) {
        bool hit = false;
        for (const auto& s : cell_sites(spec, cell)) {
            if (cfg.at(s) >= spec.eta) {
                hit = true;
                break;
            }
        }
        if (!hit) return false;
    }
    return true;
}

ConfigurationEvent event_A(const EventSpec& spec) {
    spec.validate();
    return [spec](const DisorderConfiguration& cfg) { return event_A_indicator(cfg, spec); };
}

long double log_event_probability(const EventSpec& spec) {
    spec.validate();
    const long double sites = std::pow(static_cast<long double>(spec.l), static_cast<long double>(spec.dimension));
    const long double log_f = sites * ln_one_minus(spec.kappa);
    if (log_f == -kInf) return 0.0L;
    return spec.cell_count() * std::log1p(-std::exp(log_f));
}

long double log_event_failure(const EventSpec& spec) {
    const long double lp = log_event_probability(spec);
    if (lp == 0.0L) return -kInf;
    return std::log(-std::expm1(lp));
}

double exact_event_probability(const EventSpec& spec) {
    return static_cast<double>(std::exp(log_event_probability(spec)));
}

EventProbability event_probability(const EventSpec& spec, const DisorderDistribution& dist) {
    spec.validate();
    EventProbability r;
    r.cells = spec.cell_count();
    const double mass = dist.mass_at_least(spec.eta);
    if (spec.kappa > mass + 1e-15) throw InputError("kappa exceeds P[omega >= eta] of the distribution");
    const long double sites = std::pow(static_cast<long double>(spec.l), static_cast<long double>(spec.dimension));
    const long double log_union = std::log(r.cells) + sites * ln_one_minus(spec.kappa);
    r.union_lower = static_cast<double>(std::max(0.0L, 1.0L - std::exp(log_union)));
    if (std::abs(mass - spec.kappa) <= 1e-15) {
        r.exact = true;
        r.value = exact_event_probability(spec);
    } else {
        r.value = r.union_lower;
    }
    return r;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) throw InputError("Wilson interval needs at least one trial");
    if (successes > trials) throw InputError("successes exceed trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    WilsonInterval w;
    w.center = (p + z2 / (2.0 * n)) / denom;
    w.half_width = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    w.lo = std::max(0.0, w.center - w.half_width);
    w.hi = std::min(1.0, w.center + w.half_width);
    // Guard the endpoints against rounding at p̂ ∈ {0, 1}.
    if (successes == 0) w.lo = 0.0;
    if (successes == trials) w.hi = 1.0;
    return w;
}

MonteCarloEstimate monte_carlo_event_probability(const EventSpec& spec, const DisorderDistribution& dist,
                                                 std::size_t trials, std::uint64_t seed, int workers) {
    if (trials == 0) throw InputError("Monte Carlo needs at least one trial");
    std::vector<std::vector<Site>> cells;
    for (const auto& c : event_cells(spec)) cells.push_back(cell_sites(spec, c));
    std::vector<std::uint8_t> hit(trials, 0);
    parallel_for(trials, workers, [&](std::size_t t) {
        const std::uint64_t s = derive_seed(seed, t);
        for (const auto& cell : cells) {
            bool any = false;
            for (const auto& site : cell) {
                if (dist.sample(uniform_at(s, site.index)) >= spec.eta) {
                    any = true;
                    break;
                }
            }
            if (!any) return;
        }
        hit[t] = 1;
    });
    MonteCarloEstimate m;
    m.trials = trials;
    for (auto h : hit) m.successes += h;
    m.p_hat = static_cast<double>(m.successes) / static_cast<double>(trials);
    m.ci = wilson_interval(m.successes, trials, 3.0);
    m.standard_error = m.ci.half_width / 3.0;
    return m;
}

bool monte_carlo_agrees(const MonteCarloEstimate& mc, double exact) { return exact >= mc.ci.lo && exact <= mc.ci.hi; }

// ---------------------------------------------------------------- scale

ScaleSelection try_select_scale(long double L, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in (0,1]");
    if (!(L > 0.0L)) throw InputError("L must be positive");
    ScaleSelection s;
    const long double lnLa = static_cast<long double>(alpha) * std::log(L);
    if (!(lnLa > 0.0L)) return s;
    s.x = std::pow(lnLa, 2.0L / 3.0L);
    s.upper = s.x;
    s.lower = s.x / 2.0L;
    long double f = std::floor(s.x);
    if (std::fmod(f, 2.0L) == 0.0L) f -= 1.0L;
    if (f >= 1.0L && f > s.lower && f <= s.upper && f <= L) s.l = static_cast<std::int64_t>(f);
    return s;
}

ScaleSelection select_scale(long double L, double alpha) {
    const auto s = try_select_scale(L, alpha);
    if (s.l == 0) {
        std::ostringstream os;
        os.precision(12);
        os << "empty scale window (" << static_cast<double>(s.lower) << ", " << static_cast<double>(s.upper)
           << "]: no odd integer for L=" << static_cast<double>(L) << ", alpha=" << alpha;
        throw InputError(os.str());
    }
    return s;
}

long double log_lifting_bound(std::int64_t l, double eta, double c) {
    if (l < 1) throw InputError("l must be >= 1");
    if (eta <= 0.0 || c <= 0.0) return -kInf;
    return std::log(static_cast<long double>(eta)) + std::log(static_cast<long double>(c)) -
           std::pow(static_cast<long double>(l), 1.4L);
}

double lifting_bound(std::int64_t l, double eta, double c) {
    if (l < 1) throw InputError("l must be >= 1");
    return eta * c * static_cast<double>(std::exp(-std::pow(static_cast<long double>(l), 1.4L)));
}

// ---------------------------------------------------------------- ledger

const LedgerLine& BoundLedger::line(const std::string& name) const {
    for (const auto& l : lines)
        if (l.name == name) return l;
    throw InputError("no ledger line named " + name);
}

nlohmann::ordered_json json_real(long double v) {
    if (std::isfinite(v) && std::abs(v) <= static_cast<long double>(std::numeric_limits<double>::max()) &&
        (v == 0.0L || std::abs(v) >= static_cast<long double>(std::numeric_limits<double>::min())))
        return static_cast<double>(v);
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.18Lg", v);
    return std::string(buf);
}

nlohmann::ordered_json BoundLedger::to_json() const {
    nlohmann::ordered_json j;
    j["d"] = dimension;
    j["L"] = json_real(L);
    j["alpha"] = alpha;
    j["q"] = q;
    j["kappa"] = kappa;
    j["eta"] = eta;
    j["c"] = c;
    j["scale_x"] = json_real(scale.x);
    j["window_lower"] = json_real(scale.lower);
    j["window_upper"] = json_real(scale.upper);
    j["l"] = scale.l;
    j["window_nonempty"] = window_nonempty;
    if (window_nonempty) {
        j["cell_count_M"] = json_real(cell_count);
        j["per_cell_failure"] = json_real(std::exp(log_per_cell_failure));
        j["ln_per_cell_failure"] = json_real(log_per_cell_failure);
        j["union_bound"] = json_real(std::exp(log_union_bound));
        j["ln_union_bound"] = json_real(log_union_bound);
        j["target_failure"] = json_real(std::exp(log_target_failure));
        j["lifting_bound"] = json_real(std::exp(log_lifting));
        j["ln_lifting_bound"] = json_real(log_lifting);
        j["target_lift"] = json_real(std::exp(log_target_lift));
    }
    auto arr = nlohmann::ordered_json::array();
    for (const auto& l : lines) {
        nlohmann::ordered_json e;
        e["name"] = l.name;
        e["relation"] = l.relation;
        e["lhs"] = json_real(l.lhs);
        e["rhs"] = json_real(l.rhs);
        e["holds"] = l.holds;
        e["in_verdict"] = l.in_verdict;
        arr.push_back(std::move(e));
    }
    j["lines"] = std::move(arr);
    j["verdict"] = verdict;
    j["first_failure"] = first_failure;
    return j;
}

BoundLedger evaluate_ledger(int d, long double L, double alpha, double q, double kappa, double eta, double c) {
    if (d < 1) throw InputError("dimension must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    if (!(q > 0.0)) throw InputError("q must be positive");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw InputError("kappa must lie in (0,1]");
    if (!(eta > 0.0) || !(c > 0.0)) throw InputError("eta and c must be positive");
    BoundLedger g;
    g.dimension = d;
    g.L = L;
    g.alpha = alpha;
    g.q = q;
    g.kappa = kappa;
    g.eta = eta;
    g.c = c;
    g.scale = try_select_scale(L, alpha);
    g.window_nonempty = g.scale.l != 0;

    auto add = [&](std::string name, std::string rel, long double lhs, long double rhs, bool holds, bool verdict) {
        g.lines.push_back({std::move(name), std::move(rel), lhs, rhs, holds, verdict});
    };
    add("scale_window", "x/2 < l <= x", static_cast<long double>(g.scale.l), g.scale.x, g.window_nonempty, true);
    if (g.window_nonempty) {
        const long double lnL = std::log(L);
        const long double ld = static_cast<long double>(d);
        const long double l = static_cast<long double>(g.scale.l);
        const long double sites = std::pow(l, ld);
        g.cell_count = cells_in_window(L, g.scale.l, d);
        g.log_per_cell_failure = sites * ln_one_minus(kappa);
        g.log_union_bound = std::log(g.cell_count) + g.log_per_cell_failure;
        g.log_target_failure = -static_cast<long double>(q) * lnL;
        g.log_lifting = log_lifting_bound(g.scale.l, eta, c);
        g.log_target_lift = -static_cast<long double>(alpha) * lnL;

        const long double ln_cell_target = -ld * (std::log(2.0L) + lnL) - static_cast<long double>(q) * lnL;
        add("per_cell_failure", "ln (1-kappa)^(l^d) <= ln (2L)^-d L^-q", g.log_per_cell_failure, ln_cell_target,
            g.log_per_cell_failure <= ln_cell_target, false);
        const long double ln_box = ld * (std::log(2.0L) + lnL);
        add("cell_count", "ln M <= ln (2L)^d", std::log(g.cell_count), ln_box, std::log(g.cell_count) <= ln_box, true);
        add("union_bound", "ln M (1-kappa)^(l^d) <= ln L^-q", g.log_union_bound, g.log_target_failure,
            g.log_union_bound <= g.log_target_failure, true);
        add("lifting", "ln eta c exp(-l^(7/5)) >= ln L^-alpha", g.log_lifting, g.log_target_lift,
            g.log_lifting >= g.log_target_lift, true);
        const long double e1 = std::pow(l, 1.4L);
        const long double e2 = std::pow(static_cast<long double>(alpha) * lnL, 14.0L / 15.0L);
        const long double e3 = std::log(static_cast<long double>(eta) * c) + static_cast<long double>(alpha) * lnL;
        add("exponent_from_scale", "l^(7/5) <= (alpha ln L)^(14/15)", e1, e2, e1 <= e2 * (1.0L + 1e-15L), false);
        add("exponent_to_log", "(alpha ln L)^(14/15) <= ln(eta c L^alpha)", e2, e3, e2 <= e3, false);
        const long double big = kappa >= 1.0 ? kInf
                                              : -ln_one_minus(kappa) / std::pow(2.0L, ld) *
                                                    std::pow(static_cast<long double>(alpha), 2.0L * ld / 3.0L) *
                                                    std::pow(lnL, (2.0L * ld - 3.0L) / 3.0L);
        const long double big_rhs = (static_cast<long double>(q) + ld) + ld * std::log(2.0L);
        add("large_L_sufficient", "-ln(1-kappa)/2^d alpha^(2d/3) ln(L)^((2d-3)/3) >= (q+d) + d ln 2", big,
            big_rhs, big >= big_rhs, false);
    }
    g.verdict = true;
    for (const auto& l : g.lines) {
        if (l.in_verdict && !l.holds) {
            g.verdict = false;
            g.first_failure = l.name;
            break;
        }
    }
    return g;
}

BoundLedger build_ledger(int d, long double L, double alpha, double q, double kappa, double eta, double c) {
    select_scale(L, alpha);
    return evaluate_ledger(d, L, alpha, q, kappa, eta, c);
}

// ---------------------------------------------------------------- L0 search

namespace {

struct Params {
    int d;
    double alpha, q, kappa, eta, c;
};

// Rounds a real segment boundary to the first admissible L. Exact integers while they
// are representable; beyond that L is a real and the boundary is used as is.
long double first_L_at_least(long double lnL) {
    const long double v = std::exp(lnL);
    return v < kIntegerLimit ? std::ceil(v) : v;
}

long double last_L_below(long double lnL) {
    const long double v = std::exp(lnL);
    if (v >= kIntegerLimit) return std::nextafter(v, 0.0L);
    const long double f = std::ceil(v) - 1.0L;
    return f;
}

// L range on which select_scale returns l (x ∈ [l, l+2), or [1, 2) for l = 1).
struct Segment {
    std::int64_t l;
    long double lo, hi;  // inclusive admissible L
};

Segment segment_for(std::int64_t l, double alpha) {
    const long double a = static_cast<long double>(alpha);
    const long double x_lo = static_cast<long double>(l);
    const long double x_hi = l == 1 ? 2.0L : static_cast<long double>(l + 2);
    Segment s{l, first_L_at_least(std::pow(x_lo, 1.5L) / a), last_L_below(std::pow(x_hi, 1.5L) / a)};
    // Repair rounding at the boundaries so the segment matches the selector exactly.
    if (s.lo < kIntegerLimit) {
        while (try_select_scale(s.lo, alpha).l != l && s.lo <= s.hi) s.lo += 1.0L;
        while (s.lo > 1.0L && try_select_scale(s.lo - 1.0L, alpha).l == l) s.lo -= 1.0L;
    }
    if (s.hi < kIntegerLimit) {
        while (s.hi >= s.lo && try_select_scale(s.hi, alpha).l != l) s.hi -= 1.0L;
        while (try_select_scale(s.hi + 1.0L, alpha).l == l) s.hi += 1.0L;
    }
    return s;
}

bool union_holds(const Params& p, std::int64_t l, long double L) {
    if (p.kappa >= 1.0) return true;
    const long double lhs = std::log(cells_in_window(L, l, p.d)) +
                            std::pow(static_cast<long double>(l), static_cast<long double>(p.d)) * ln_one_minus(p.kappa);
    return lhs <= -static_cast<long double>(p.q) * std::log(L);
}

// Smallest L with ηc e^{−l^{7/5}} ≥ L^{−α}.
long double lifting_threshold(const Params& p, std::int64_t l) {
    const long double lnL = -log_lifting_bound(l, p.eta, p.c) / static_cast<long double>(p.alpha);
    if (lnL <= 0.0L) return 1.0L;
    return first_L_at_least(lnL);
}

// Past this l, the union margin at segment ends and the lifting margin at segment starts
// only grow: the l^d ln(1−κ) term outpaces (d+q) ln L ~ (l+2)^{3/2}/α.
bool asymptotically_dominant(const Params& p, std::int64_t l) {
    if (p.kappa >= 1.0) return true;
    const long double ld = static_cast<long double>(p.d);
    const long double lhs = ld * std::pow(static_cast<long double>(l), ld - 1.0L) * -ln_one_minus(p.kappa);
    const long double rhs = 1.5L * (ld + static_cast<long double>(p.q)) *
                            std::sqrt(static_cast<long double>(l + 2)) / static_cast<long double>(p.alpha);
    return lhs >= rhs && p.d >= 2;
}

void check_params(const Params& p) {
    if (p.d < 2) throw InputError("dimension must be >= 2");
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    if (!(p.q > 0.0)) throw InputError("q must be positive");
    if (!(p.kappa > 0.0 && p.kappa <= 1.0)) throw InputError("kappa must lie in (0,1]");
    if (!(p.eta > 0.0 && p.c > 0.0)) throw InputError("eta and c must be positive");
}

[[noreturn]] void budget_overflow(long double max_log_L) {
    std::ostringstream os;
    os << "search budget overflow: no eventual verdict below ln L = " << static_cast<double>(max_log_L);
    throw SolverError(os.str());
}

} // namespace

MinScaleResult min_scale_scan(int d, double alpha, double q, double kappa, double eta, double c,
                              const MinScaleOptions& opts) {
    const Params p{d, alpha, q, kappa, eta, c};
    check_params(p);
    MinScaleResult r;
    r.strategy = "segment scan";
    long double candidate = 0;
    std::int64_t candidate_l = 0;
    int run = 0;
    for (std::int64_t l = 1;; l += 2) {
        const long double a = static_cast<long double>(alpha);
        if (std::pow(static_cast<long double>(l), 1.5L) / a > opts.max_log_L) budget_overflow(opts.max_log_L);
        const Segment s = segment_for(l, alpha);
        ++r.evaluations;
        if (s.hi < s.lo) {
            candidate = 0;
            run = 0;
            continue;
        }
        const long double lift_from = std::max(s.lo, lifting_threshold(p, l));
        const bool union_at_end = union_holds(p, l, s.hi);
        if (r.first_pass == 0 && lift_from <= s.hi && union_holds(p, l, lift_from)) r.first_pass = lift_from;
        const bool full = union_at_end && lift_from <= s.lo;
        if (full) {
            if (candidate == 0) {
                candidate = s.lo;
                candidate_l = l;
            }
            ++run;
        } else if (union_at_end && lift_from <= s.hi) {
            candidate = lift_from;
            candidate_l = l;
            run = 0;
        } else {
            candidate = 0;
            run = 0;
        }
        // l = 1 is followed by the empty stretch x ∈ [2,3), which the loop never visits.
        if (l == 1 && candidate != 0) {
            candidate = 0;
            run = 0;
        }
        if (candidate != 0 && run >= opts.confirm_segments && asymptotically_dominant(p, l)) break;
    }
    r.L0 = candidate;
    r.l_at_L0 = candidate_l;
    return r;
}

MinScaleResult min_scale_bisect(int d, double alpha, double q, double kappa, double eta, double c,
                                const MinScaleOptions& opts) {
    const Params p{d, alpha, q, kappa, eta, c};
    check_params(p);
    MinScaleResult r;
    r.strategy = "bisection";

    auto verdict_at = [&](long double L) {
        ++r.evaluations;
        return evaluate_ledger(d, L, alpha, q, kappa, eta, c).verdict;
    };
    // End of the current l-segment, located by doubling-then-bisecting on the selector.
    auto segment_end = [&](long double L, std::int64_t l) {
        long double lnA = std::log(L), step = 1.0L;
        while (try_select_scale(std::exp(lnA + step), alpha).l == l) {
            lnA += step;
            step *= 2.0L;
        }
        long double lo = std::exp(lnA), hi = std::exp(lnA + step);
        if (lo < kIntegerLimit) {
            lo = std::max(lo, L);
            hi = std::min(std::ceil(hi), kIntegerLimit);
            while (hi - lo > 1.0L) {
                const long double mid = std::floor((lo + hi) / 2.0L);
                (try_select_scale(mid, alpha).l == l ? lo : hi) = mid;
            }
            return lo;
        }
        for (int i = 0; i < 200; ++i) {
            const long double mid = std::exp((std::log(lo) + std::log(hi)) / 2.0L);
            if (mid <= lo || mid >= hi) break;
            (try_select_scale(mid, alpha).l == l ? lo : hi) = mid;
        }
        return lo;
    };
    // Verdict at L and at every later point, judged from the worst points of each segment:
    // the union bound is largest at a segment's end and the lifting bound is weakest at its start.
    auto holds_from = [&](long double L) {
        if (!verdict_at(L)) return false;
        std::int64_t l = try_select_scale(L, alpha).l;
        long double end = segment_end(L, l);
        if (!verdict_at(end)) return false;
        int full = 0;
        while (true) {
            const long double next = end < kIntegerLimit ? end + 1.0L : std::nextafter(end, kInf);
            const auto s = try_select_scale(next, alpha);
            if (std::log(next) > opts.max_log_L) budget_overflow(opts.max_log_L);
            if (s.l == 0 || !verdict_at(next)) return false;
            l = s.l;
            end = segment_end(next, l);
            if (!verdict_at(end)) return false;
            if (++full >= opts.confirm_segments && asymptotically_dominant(p, l)) return true;
        }
    };

    long double lnL = 1.0L;
    while (!holds_from(lnL < 43.0L ? std::ceil(std::exp(lnL)) : std::exp(lnL))) {
        lnL *= 1.25L;
        if (lnL > opts.max_log_L) budget_overflow(opts.max_log_L);
    }
    long double hi = lnL < 43.0L ? std::ceil(std::exp(lnL)) : std::exp(lnL);
    long double lo = 1.0L;
    // Predicate is monotone in L by construction; bisect on integers, then on ln L.
    while (true) {
        if (hi < kIntegerLimit) {
            if (hi - lo <= 1.0L) break;
            const long double mid = std::floor((lo + hi) / 2.0L);
            (holds_from(mid) ? hi : lo) = mid;
        } else {
            const long double mid = std::exp((std::log(lo) + std::log(hi)) / 2.0L);
            if (!(mid > lo && mid < hi) || (hi - lo) <= hi * 1e-18L) break;
            (holds_from(mid) ? hi : lo) = mid;
        }
    }
    r.L0 = hi;
    r.l_at_L0 = try_select_scale(hi, alpha).l;
    return r;
}

MinScaleResult min_scale_for_probability(int d, double alpha, double q, double kappa, double eta, double c,
                                         const MinScaleOptions& opts) {
    return min_scale_scan(d, alpha, q, kappa, eta, c, opts);
}

bool EquidistributedSequence::valid() const {
    if (!(delta > 0.0 && delta < l / 2.0)) return false;
    for (const auto& [m, y] : points) {
        double dist = 0.0;
        for (std::size_t a = 0; a < y.size(); ++a) dist = std::max(dist, std::abs(y[a] - static_cast<double>(m.index[a]) * l));
        if (!(dist + delta < l / 2.0)) return false;
    }
    return true;
}

} // namespace iselab
