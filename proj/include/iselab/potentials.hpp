#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iselab/grid.hpp"
#include "iselab/sparse_operator.hpp"

namespace iselab {

using Field = Vector;  // one value per grid node

/// G-periodic background potential V0, evaluated pointwise.
class PeriodicPotential {
public:
    enum class Kind {
        zero,
        constant,        // V0 = amplitude
        separable_step,  // sum over axes of amplitude on a slab of relative width `width` around each cell face
        checkerboard,    // amplitude on alternating half-period subcubes
        cosine,          // amplitude * sum over axes of cos(2 pi x / G)
    };

    PeriodicPotential() = default;
    PeriodicPotential(Kind kind, double period, double amplitude = 0.0, double width = 0.5);

    static PeriodicPotential zero(double period = 1.0) { return {Kind::zero, period}; }
    static PeriodicPotential constant(double v, double period = 1.0) { return {Kind::constant, period, v}; }

    Kind kind() const { return kind_; }
    double period() const { return period_; }
    double amplitude() const { return amplitude_; }
    double width() const { return width_; }

    double value(std::span<const double> x) const;
    double sup_norm(int dimension) const;
    Field sample(const GridSpec& grid) const;

private:
    Kind kind_ = Kind::zero;
    double period_ = 1.0;
    double amplitude_ = 0.0;
    double width_ = 0.5;
};

std::string to_string(PeriodicPotential::Kind kind);
PeriodicPotential::Kind periodic_kind_from_string(const std::string& name);

/**
 * u_j for one site j ∈ (GZ)^d, with its lower-bound data c χ_{B_δ(x_j)} <= u_j.
 *
 * indicator: u_j = height on the open ball of radius `radius` about x_j.
 * tent:      u_j = min(cap, height * max(0, 1 - |x - x_j| / radius)).
 */
struct SingleSiteProfile {
    enum class Shape { indicator, tent };

    Site site;
    double period = 1.0;
    Shape shape = Shape::indicator;
    double c = 1.0;
    double delta = 0.25;
    std::vector<double> ball_center;
    double height = 1.0;
    double radius = 0.25;
    double cap = 1.0;

    static SingleSiteProfile indicator(Site site, double period, double c, double delta,
                                       std::vector<double> center);

    double value_at_distance(double r) const;
    double value(std::span<const double> x) const;
    Ball lower_bound_ball() const { return Ball(ball_center, delta); }
    std::vector<double> lattice_point() const;
    // |x_j - jG|_inf + support radius: how far from jG the profile reaches.
    double reach() const;
};

std::string to_string(SingleSiteProfile::Shape shape);
SingleSiteProfile::Shape shape_from_string(const std::string& name);

class DisorderDistribution {
public:
    enum class Kind { uniform01, bernoulli, table };

    static DisorderDistribution uniform01(std::optional<double> eta = {}, std::optional<double> kappa = {});
    static DisorderDistribution bernoulli(double p, std::optional<double> eta = {},
                                          std::optional<double> kappa = {});
    static DisorderDistribution table(std::vector<double> values, std::vector<double> probs,
                                      std::optional<double> eta = {}, std::optional<double> kappa = {});

    Kind kind() const { return kind_; }
    double eta() const { return eta_; }
    double kappa() const { return kappa_; }
    double p() const { return p_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& probs() const { return probs_; }

    // Inverse CDF applied to u ∈ [0,1). Throws AssertionFailure if the value leaves [0,1].
    double sample(double u) const;

    // P[ω >= t], computed from the distribution itself.
    double mass_at_least(double t) const;
    double threshold_mass() const { return mass_at_least(eta_); }
    // True when P[ω >= η] equals κ (not merely bounds it).
    bool has_exact_mass() const;
    double median() const;
    double mean() const;

private:
    void finalize(std::optional<double> eta, std::optional<double> kappa);

    Kind kind_ = Kind::uniform01;
    double p_ = 0.5;
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
    double eta_ = 0.5;
    double kappa_ = 0.5;
};

std::string to_string(DisorderDistribution::Kind kind);

/// A realization ω restricted to finitely many sites, regenerable from (seed, site).
struct DisorderConfiguration {
    std::uint64_t seed = 0;
    std::map<Site, double> values;

    double at(const Site& site) const;  // InputError if absent
    bool contains(const Site& site) const { return values.count(site) != 0; }
};

DisorderConfiguration sample_configuration(std::uint64_t seed, std::span<const Site> sites,
                                           const DisorderDistribution& dist);

/// The value a single site receives under `seed`; sample_configuration is built from this.
double sample_site(std::uint64_t seed, const Site& site, const DisorderDistribution& dist);

/// Configuration with the same value at every listed site (ω ≡ 0, ω ≡ 1, ...).
DisorderConfiguration constant_configuration(std::span<const Site> sites, double value);

/// Lattice sites j ∈ (GZ)^d whose profile, reaching `reach` from jG, can touch the open box.
std::vector<Site> contributing_sites(const GridSpec& grid, double period, double reach);

/// Σ_j ω_j u_j sampled at the nodes. Every contributing site needs a profile and a value.
Field assemble_random_potential(const DisorderConfiguration& cfg,
                                std::span<const SingleSiteProfile> profiles, const GridSpec& grid);

/// W = Σ_j u_j.
Field assemble_W(std::span<const SingleSiteProfile> profiles, const GridSpec& grid);

struct SingleSiteReport {
    bool ok = false;
    bool ball_inside_cell = false;
    bool lower_bound_holds = false;
    bool nonnegative = false;
    std::size_t ball_nodes = 0;
    double min_on_ball = 0.0;
    std::string detail;
};

/// Checks u_j >= c on every node of B_δ(x_j) and B_δ(x_j) ⊂ Λ_G(j). Needs δ/h >= 4.
SingleSiteReport verify_single_site_bound(const SingleSiteProfile& profile, const GridSpec& grid);

/// Lattice of single-site profiles: shape data shared, ball centers jG + offset unless listed.
struct SingleSiteSpec {
    SingleSiteProfile::Shape shape = SingleSiteProfile::Shape::indicator;
    double c = 1.0;
    double delta = 0.25;
    double height = 1.0;
    double radius = 0.25;
    double cap = 1.0;
    std::vector<double> offset;
    std::map<Site, std::vector<double>> centers;
};

/// Background, single-site lattice and disorder law: everything needed to build H_ω on a box.
struct PotentialModel {
    int dimension = 2;
    double period = 1.0;
    PeriodicPotential background;
    SingleSiteSpec single_site;
    DisorderDistribution disorder = DisorderDistribution::uniform01();

    SingleSiteProfile profile_for(const Site& site) const;
    double max_reach() const;
    std::vector<Site> sites_for(const GridSpec& grid) const;
    std::vector<SingleSiteProfile> profiles_for(const GridSpec& grid) const;
    void validate() const;
};

} // namespace iselab
