#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "iselab/eigensolve.hpp"
#include "iselab/operators.hpp"
#include "iselab/probability.hpp"

namespace iselab {

struct EquidistributedSelection {
    EquidistributedSequence sequence;
    std::map<Site, Site> chosen;  // cell multiplier -> selected site k_j
    std::vector<Ball> balls;      // B_δ(x_{k_j}) for every cell
    IndicatorMask mask;           // nodes of S_{Z,L}
};

/// One k_j ∈ Λ_l(j) ∩ J(ω) per cell (lexicographically smallest) and the mask of the ball union.
/// InputError if the event does not hold; AssertionFailure if the balls violate equidistribution.
EquidistributedSelection equidistributed_from_event(const DisorderConfiguration& cfg, const EventSpec& spec,
                                                    const PotentialModel& model, const GridSpec& grid);

/// Union of B_δ(x_k) over all contributing sites k with ω_k ≥ η. Since u_k ≥ cχ_{B_δ(x_k)},
/// ηc times this mask lies below V_ω whether or not the event holds.
IndicatorMask threshold_mask(const DisorderConfiguration& cfg, double eta, const PotentialModel& model,
                             const GridSpec& grid);

/// Fraction of ‖φ‖² carried by the mask, node-counting measure.
double mass_ratio(const Vector& phi, const IndicatorMask& mask);

struct UCPBoundParams {
    double delta = 0.25;
    double l = 1.0;
    double V_inf = 0.0;
    double E = 0.0;
    double N = 1.0;

    void validate() const;  // 0 < δ ≤ l/2, N > 0, V∞ ≥ 0
    double exponent() const;  // 1 + l^{4/3} V∞^{2/3} + l √max(E,0)
};

double log_ucp_theoretical_bound(const UCPBoundParams& p);
double ucp_theoretical_bound(const UCPBoundParams& p);

struct UCPSample {
    UCPBoundParams params;  // N ignored
    double ratio = 0.0;
    std::string label;
};

struct UCPFit {
    double N_hat = 0.0;
    std::vector<double> per_sample;  // smallest N satisfied by each sample alone
    std::size_t binding = 0;         // index of the sample attaining N_hat
};

/// Smallest N with ratio ≥ bound(N) for every sample. The envelope is asserted after fitting.
UCPFit fit_ucp_constant(std::span<const UCPSample> samples, std::size_t min_samples = 3);

/// Every other sample (even indices); interleaving keeps each l represented.
std::vector<UCPSample> halve_corpus(std::span<const UCPSample> samples);

struct UCPInstance {
    double L = 9.0;
    double l = 3.0;
    double h = 1.0 / 12.0;
    double delta = 1.0 / 3.0;
    double E = 0.0;
    PeriodicPotential background;
    std::uint64_t seed = 0;  // ball positions and random combinations
    int combinations = 5;
};

struct UCPInstanceResult {
    UCPInstance instance;
    std::size_t subspace_dim = 0;
    double min_ratio = 1.0;
    double min_eigvec_ratio = 1.0;
    double min_combination_ratio = 1.0;
    std::size_t mask_nodes = 0;
    UCPSample sample;
};

/// Spectral subspace of −Δ + V₀ below E on the periodic box Λ_L, tested on a random
/// (l,δ)-equidistributed ball union: each eigenvector and `combinations` seeded unit combinations.
UCPInstanceResult run_ucp_instance(const UCPInstance& inst, const SolverOptions& opts = {});

/// Same experiment with the subspace supplied; instances that share (L, h, V₀, E) share it.
UCPInstanceResult evaluate_ucp_instance(const UCPInstance& inst, const SpectralWindowResult& subspace);

/// Free-Laplacian corpus on L = 3l: E sits 1% above the first nonzero level, `instances` seeded
/// ball placements per l. Results ordered by (l, instance).
struct UCPSweep {
    std::vector<double> l{3.0, 5.0, 7.0};
    std::size_t instances = 4;
    double h = 1.0 / 12.0;
    double delta = 1.0 / 3.0;
    std::uint64_t seed = 0;
};
std::vector<UCPInstanceResult> run_ucp_sweep(const UCPSweep& sweep, const SolverOptions& opts = {}, int workers = 1);

struct UCPStability {
    UCPFit full;
    UCPFit half;
    double relative_change = 0.0;  // |N̂_half − N̂_full| / N̂_full
    bool stable = false;           // within ±10%
};
UCPStability ucp_fit_stability(std::span<const UCPSample> samples);

struct LiftingRecord {
    std::int64_t l = 0;
    double L = 0.0;
    double eta = 0.0;
    double c = 0.0;
    double delta = 0.0;
    double b = 0.0;
    std::size_t k0 = 0;
    double lambda_background = 0.0;  // λ_{k0}(H_{0,L})
    double lambda_test = 0.0;        // λ_{k0}(H_{0,L} + ηc χ_S)
    double lambda_omega = 0.0;       // λ_{k0}(H_{ω,L})
    double lambda_envelope = 0.0;    // λ_{k0}(H_{0,L} + W_L)
    double observed_lift = 0.0;
    double predicted_floor = 0.0;    // ηc exp(−l^{7/5})
    std::size_t mask_nodes = 0;
    bool sandwich_ok = false;

    nlohmann::ordered_json to_json() const;
};

/// λ_{k0} of H₀ and of H₀ + amplitude·χ_mask, with k0 = 1 + #{λ(H₀) < b}.
struct MaskLift {
    std::size_t k0 = 0;
    double background = 0.0;
    double perturbed = 0.0;
    double lift() const { return perturbed - background; }
};
MaskLift lift_for_mask(const GridSpec& grid, const PeriodicPotential& background, const IndicatorMask& mask,
                       double amplitude, double b, const SolverOptions& opts = {});

LiftingRecord lifting_experiment(const GridSpec& grid, const PotentialModel& model, const DisorderConfiguration& cfg,
                                 const EventSpec& spec, double b, const SolverOptions& opts = {});

/// λ_k for k = 1..kmax of H₀, H₀ + ηcχ_S (S = threshold_mask), H_ω and H₀ + W.
struct SandwichRecord {
    std::vector<double> background, test, omega, envelope;
    std::size_t violations = 0;  // (k, link) pairs breaking the chain beyond rel_tol
    double worst_excess = 0.0;   // largest relative excess over the chain, ≤ 0 when it holds
};
SandwichRecord sandwich_check(const GridSpec& grid, const PotentialModel& model, const DisorderConfiguration& cfg,
                              double eta, std::size_t kmax, double rel_tol = 1e-9, const SolverOptions& opts = {});

/// Lifting sweep conditioned on the event: for each l, Bernoulli(p_l) couplings with η = 1 are
/// resampled until the event holds (at most max_attempts draws per instance).
struct LiftingSweep {
    double L = 15.0;
    double h = 1.0 / 12.0;
    Boundary boundary = Boundary::periodic;
    std::vector<std::int64_t> l{1, 3, 5};
    std::vector<double> p{1.0, 0.7, 0.7};
    std::size_t instances = 3;
    std::uint64_t seed = 0;
    std::size_t max_attempts = 200;
};
/// Records ordered by (l, instance). b is the band edge of the model's background on the sweep box.
std::vector<LiftingRecord> run_lifting_sweep(const LiftingSweep& sweep, const PotentialModel& model, double b,
                                             const SolverOptions& opts = {}, int workers = 1);

struct GapReport {
    bool ok = false;
    double a = 0.0;
    double b = 0.0;
    std::vector<double> t;
    std::vector<std::size_t> in_window;  // eigenvalue count inside (a + tol_gap, b − tol_gap) per t
    double first_failure_t = -1.0;
};

/// (a,b) ⊂ ρ(H₀ + tW) on the grid of t; InputError unless t starts at 0, ends at 1, steps ≤ 0.05.
GapReport verify_gap_hypothesis(const GridSpec& grid, const PeriodicPotential& background,
                                std::span<const SingleSiteProfile> profiles, std::pair<double, double> window,
                                std::span<const double> t_grid, const SolverOptions& opts = {});

/// 0, 0.05, ..., 1.
std::vector<double> default_t_grid(double step = 0.05);

} // namespace iselab
