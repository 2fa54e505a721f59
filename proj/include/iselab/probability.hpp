#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "iselab/grid.hpp"
#include "iselab/potentials.hpp"

namespace iselab {

// Site lattice for all event computations is Z^d (unit period).

/// Cells Λ_l(j), j ∈ (lZ)^d ∩ Λ_{2L}, must each meet J(ω) = {k : ω_k ≥ η}.
struct EventSpec {
    int dimension = 2;
    std::int64_t l = 1;  // odd
    long double L = 2.0L;
    double eta = 0.5;
    double kappa = 0.5;

    // l odd and positive, L > 0, η > 0, κ ∈ (0,1]. l ≤ L is left to the scale selector.
    void validate() const;

    std::int64_t cells_per_axis() const;  // 2 ceil(L/l) − 1
    long double cell_count() const;       // M = cells_per_axis^d
};

/// Cell multipliers m (cell center m·l), lexicographic.
std::vector<Site> event_cells(const EventSpec& spec);
/// Integer sites of the cell with multiplier m, lexicographic.
std::vector<Site> cell_sites(const EventSpec& spec, const Site& cell);
/// Every site any cell needs, lexicographic.
std::vector<Site> event_sites(const EventSpec& spec);

std::vector<Site> threshold_set(const DisorderConfiguration& cfg, double eta);

bool event_A_indicator(const DisorderConfiguration& cfg, const EventSpec& spec);

/// A configuration event; event_A_indicator is the default, correlated models may plug in others.
using ConfigurationEvent = std::function<bool(const DisorderConfiguration&)>;
ConfigurationEvent event_A(const EventSpec& spec);

/// (1 − (1−κ)^{l^d})^M, evaluated in log space. Requires exact threshold mass κ.
double exact_event_probability(const EventSpec& spec);
/// ln P[A] and ln(1 − P[A]) in extended precision.
long double log_event_probability(const EventSpec& spec);
long double log_event_failure(const EventSpec& spec);

struct EventProbability {
    double value = 0.0;   // exact P[A], or the lower bound 1 − M(1−κ)^{l^d} clipped at 0
    bool exact = false;   // false when the distribution only lower-bounds P[ω ≥ η]
    double union_lower = 0.0;
    long double cells = 0;
};

/// Exact value when dist has exact mass κ at η, otherwise the union lower bound.
EventProbability event_probability(const EventSpec& spec, const DisorderDistribution& dist);

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
    double center = 0.0;
    double half_width = 0.0;
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct MonteCarloEstimate {
    std::size_t trials = 0;
    std::size_t successes = 0;
    double p_hat = 0.0;
    WilsonInterval ci;         // z = 3
    double standard_error = 0.0;  // Wilson half-width / 3
};

/// Per-trial seed derive_seed(seed, trial); site values from the counter stream, so a
/// trial equals event_A_indicator on sample_configuration(seed_t, event_sites, dist).
MonteCarloEstimate monte_carlo_event_probability(const EventSpec& spec, const DisorderDistribution& dist,
                                                 std::size_t trials, std::uint64_t seed, int workers = 1);

/// True iff `exact` lies in the z = 3 Wilson interval of the estimate.
bool monte_carlo_agrees(const MonteCarloEstimate& mc, double exact);

struct ScaleSelection {
    long double x = 0;      // (α ln L)^{2/3}
    long double lower = 0;  // x/2, exclusive
    long double upper = 0;  // x, inclusive
    std::int64_t l = 0;
};

/// Largest odd l with x/2 < l ≤ x, for α ∈ (0,1]. InputError if no odd integer lies in the window.
ScaleSelection select_scale(long double L, double alpha);
/// Same without throwing; l = 0 when the window is empty.
ScaleSelection try_select_scale(long double L, double alpha);

/// ηc exp(−l^{7/5}).
double lifting_bound(std::int64_t l, double eta, double c);
long double log_lifting_bound(std::int64_t l, double eta, double c);

struct LedgerLine {
    std::string name;
    std::string relation;  // e.g. "lhs <= rhs"
    long double lhs = 0;   // natural logs where the name says so
    long double rhs = 0;
    bool holds = false;
    bool in_verdict = false;
};

struct BoundLedger {
    int dimension = 2;
    long double L = 0;
    double alpha = 0.5, q = 1.0, kappa = 0.5, eta = 1.0, c = 1.0;

    bool window_nonempty = false;
    ScaleSelection scale;
    long double cell_count = 0;
    long double log_per_cell_failure = 0;  // l^d ln(1−κ), −inf for κ = 1
    long double log_union_bound = 0;
    long double log_target_failure = 0;    // −q ln L
    long double log_lifting = 0;
    long double log_target_lift = 0;       // −α ln L
    std::vector<LedgerLine> lines;
    bool verdict = false;
    std::string first_failure;  // name of the first verdict line that fails

    const LedgerLine& line(const std::string& name) const;
    nlohmann::ordered_json to_json() const;
};

/// Never throws on an empty scale window; the window line fails instead.
BoundLedger evaluate_ledger(int d, long double L, double alpha, double q, double kappa, double eta, double c);
/// As evaluate_ledger, but scale selection failure is an InputError.
BoundLedger build_ledger(int d, long double L, double alpha, double q, double kappa, double eta, double c);

struct MinScaleOptions {
    long double max_log_L = 11000.0L;  // search budget on ln L
    int confirm_segments = 8;          // fully true l-segments required after the candidate
};

struct MinScaleResult {
    long double L0 = 0;           // smallest L with verdict true for every L' ≥ L
    long double first_pass = 0;   // smallest L with verdict true
    std::int64_t l_at_L0 = 0;
    std::size_t evaluations = 0;
    std::string strategy;
};

/// Walks the segments of constant l upward using their closed-form verdict boundaries.
MinScaleResult min_scale_scan(int d, double alpha, double q, double kappa, double eta, double c,
                              const MinScaleOptions& opts = {});
/// Bisects the monotone predicate "verdict holds for all L' ≥ L" using ledger point evaluations.
MinScaleResult min_scale_bisect(int d, double alpha, double q, double kappa, double eta, double c,
                                const MinScaleOptions& opts = {});
/// The scan result; InputError on invalid parameters, SolverError on budget overflow.
MinScaleResult min_scale_for_probability(int d, double alpha, double q, double kappa, double eta, double c,
                                         const MinScaleOptions& opts = {});

/// Points y_j with B_δ(y_j) ⊂ Λ_l(j) for j = m·l.
struct EquidistributedSequence {
    double l = 1.0;
    double delta = 0.25;
    std::map<Site, std::vector<double>> points;  // keyed by cell multiplier m

    bool valid() const;  // |y_j − j|_∞ + δ < l/2 for every j, and 0 < δ < l/2
};

/// Long doubles go to JSON as numbers when they fit a double, else as decimal strings.
nlohmann::ordered_json json_real(long double v);

} // namespace iselab
