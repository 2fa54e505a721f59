#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iselab/eigensolve.hpp"
#include "iselab/probability.hpp"
#include "iselab/ucp.hpp"

namespace iselab {

/// Gap (a, b) of H_{0,L} below the band starting at b, and its fate under the full envelope W.
struct BandEdge {
    double a = 0.0;      // top of the spectrum below the gap; −inf in bottom mode
    double b = 0.0;      // lowest eigenvalue of H_{0,L} at or above the hint
    std::size_t k0 = 0;  // index of b, 1-based
    double a_eff = 0.0;  // λ_{k0−1}(H_{0,L} + W_L); −inf in bottom mode
    bool bottom_mode = false;
    bool doubled_box_checked = false;

    double width() const { return b - a; }
    bool hypothesis_holds() const { return bottom_mode || a_eff < b - 10.0 * tol_gap; }
    nlohmann::ordered_json to_json() const;
};

/// With a hint: the gap of H_{0,L} containing the hint, accepted only if it is wider than
/// 10·tol_gap and its central half stays free of spectrum on the doubled box (level spacing of a
/// gapless operator shrinks there, a band gap does not). Without a hint: bottom mode, b = λ₁.
/// InputError when no gap is found near the hint.
BandEdge band_edge_of_background(const GridSpec& grid, const PeriodicPotential& background,
                                 std::span<const SingleSiteProfile> profiles, std::optional<double> hint,
                                 const SolverOptions& opts = {}, bool check_doubled_box = true);

struct ExperimentPlan {
    PotentialModel model;
    std::string model_ref;  // file the model came from, or "inline"
    std::vector<double> L;  // ascending
    double alpha = 0.5;
    double q = 1.0;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    Boundary boundary = Boundary::periodic;
    double h = 1.0 / 12.0;
    std::optional<double> hint;  // absent: bottom of the spectrum
    double t_step = 0.05;
    bool check_doubled_box = true;
    SolverOptions solver;

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

/// Everything a trial at one L shares: grid, sites, edge, scale and the window width L^{−α}.
struct TrialContext {
    GridSpec grid;
    PotentialModel model;
    std::vector<SingleSiteProfile> profiles;
    std::vector<Site> sites;  // contributing sites ∪ event sites, sampled per trial
    BandEdge edge;
    EventSpec event;          // l = 0 when the scale window is empty
    double width = 0.0;
    SolverOptions solver;
};

TrialContext make_trial_context(const GridSpec& grid, const PotentialModel& model, const BandEdge& edge, double alpha,
                                const SolverOptions& opts = {});

struct TrialRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool valid = true;
    std::string error;        // solver message of an invalid trial
    double value = 0.0;       // inf σ(H_{ω,L}) ∩ [b, ∞)
    std::size_t k = 0;        // its index
    bool success = false;     // window [b, b + L^{−α}) free of spectrum
    bool borderline = false;  // |value − (b + L^{−α})| ≤ tol_eig, counted as failure
    bool event_A = false;
    double lift = 0.0;        // λ_{k0}(H₀ + ηcχ_J) − λ_{k0}(H₀), J(ω) ball union
    bool lift_exceeds = false;  // lift ≥ L^{−α} + tol_eig

    nlohmann::ordered_json to_json() const;
};

/// One trial; solver failures mark it invalid instead of throwing.
TrialRecord run_ise_trial(const TrialContext& ctx, std::uint64_t seed, std::size_t index = 0);
/// Convenience form that builds the context (bottom-mode-free, b given) for a single seed.
TrialRecord run_ise_trial(std::uint64_t seed, double L, double alpha, const PotentialModel& model, double b,
                          double h, Boundary bc = Boundary::periodic, const SolverOptions& opts = {});

struct ISELevel {
    double L = 0.0;
    std::int64_t l = 0;
    double width = 0.0;
    BandEdge edge;
    bool gap_ok = false;
    std::size_t trials = 0;
    std::size_t valid = 0;
    std::size_t successes = 0;
    std::size_t borderline = 0;
    std::size_t event_A = 0;
    std::size_t lift_exceeds = 0;
    std::size_t certainty_violations = 0;  // lift_exceeds but not success, among valid trials
    double p_hat = 0.0;
    WilsonInterval ci;  // 95%
    double target = 0.0;  // 1 − L^{−q}
    BoundLedger ledger;
    std::vector<TrialRecord> records;
};

struct ISEReport {
    ExperimentPlan plan;
    std::vector<ISELevel> levels;

    /// Each interval's upper bound ≥ the previous interval's lower bound.
    bool nondecreasing_trend() const;
    std::size_t certainty_violations() const;
    nlohmann::ordered_json to_json(bool with_trials = true) const;
};

/// Per-trial seed derive_seed(master, L index, trial index); reduction in trial order.
/// InputError if every trial at some L is invalid.
ISEReport estimate_ise_probability(const ExperimentPlan& plan, int workers = 1);

struct IDSRecord {
    std::vector<double> E;
    std::vector<double> N;          // trial average of #{λ ≤ E} / L^d
    std::vector<bool> truncated;    // some trial exceeded the eigenvalue budget at this E
    double E0 = 0.0;
    double N0 = 0.0;
    std::vector<std::optional<double>> statistic;  // ln|ln(N − N0)| / ln(E − E0)
    std::size_t trials = 0;
    double volume = 0.0;

    nlohmann::ordered_json to_json() const;
};

/// Finite-volume counting function from inertia counts, averaged over seeded configurations.
IDSRecord ids_estimate(const PotentialModel& model, const GridSpec& grid, std::span<const double> E_grid,
                       std::size_t trials, std::uint64_t seed, double E0, const SolverOptions& opts = {},
                       int workers = 1);

} // namespace iselab
