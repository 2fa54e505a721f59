#include "iselab/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "iselab/errors.hpp"
#include "iselab/random.hpp"

namespace iselab {

// ---------------------------------------------------------------------------
// PeriodicPotential

std::string to_string(PeriodicPotential::Kind kind) {
    switch (kind) {
    case PeriodicPotential::Kind::zero: return "zero";
    case PeriodicPotential::Kind::constant: return "constant";
    case PeriodicPotential::Kind::separable_step: return "separable_step";
    case PeriodicPotential::Kind::checkerboard: return "checkerboard";
    case PeriodicPotential::Kind::cosine: return "cosine";
    }
    return "zero";
}

PeriodicPotential::Kind periodic_kind_from_string(const std::string& name) {
    if (name == "zero") return PeriodicPotential::Kind::zero;
    if (name == "constant") return PeriodicPotential::Kind::constant;
    if (name == "separable_step") return PeriodicPotential::Kind::separable_step;
    if (name == "checkerboard") return PeriodicPotential::Kind::checkerboard;
    if (name == "cosine") return PeriodicPotential::Kind::cosine;
    throw InputError("unknown background potential kind '" + name + "'");
}

PeriodicPotential::PeriodicPotential(Kind kind, double period, double amplitude, double width)
    : kind_(kind), period_(period), amplitude_(amplitude), width_(width) {
    if (!(period > 0.0)) throw InputError("background period must be positive");
    if (!std::isfinite(amplitude)) throw InputError("background amplitude must be finite");
    if (kind == Kind::separable_step && !(width > 0.0 && width < 1.0))
        throw InputError("separable_step width must lie in (0,1)");
}

double PeriodicPotential::value(std::span<const double> x) const {
    switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::constant: return amplitude_;
    case Kind::separable_step: {
        double v = 0.0;
        for (double xa : x) {
            const double t = xa / period_ - std::round(xa / period_);
            if (std::abs(t) > 0.5 * (1.0 - width_)) v += amplitude_;
        }
        return v;
    }
    case Kind::checkerboard: {
        std::int64_t parity = 0;
        for (double xa : x) parity += static_cast<std::int64_t>(std::floor(2.0 * xa / period_));
        return (parity & 1) ? amplitude_ : 0.0;
    }
    case Kind::cosine: {
        double v = 0.0;
        for (double xa : x) v += std::cos(2.0 * std::numbers::pi * xa / period_);
        return amplitude_ * v;
    }
    }
    return 0.0;
}

double PeriodicPotential::sup_norm(int dimension) const {
    switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::constant:
    case Kind::checkerboard: return std::abs(amplitude_);
    case Kind::separable_step:
    case Kind::cosine: return dimension * std::abs(amplitude_);
    }
    return 0.0;
}

Field PeriodicPotential::sample(const GridSpec& grid) const {
    Field f(static_cast<Eigen::Index>(grid.num_nodes()));
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) f[static_cast<Eigen::Index>(k)] = value(grid.node_point(k));
    return f;
}

// ---------------------------------------------------------------------------
// SingleSiteProfile

std::string to_string(SingleSiteProfile::Shape shape) {
    return shape == SingleSiteProfile::Shape::indicator ? "indicator" : "tent";
}

SingleSiteProfile::Shape shape_from_string(const std::string& name) {
    if (name == "indicator") return SingleSiteProfile::Shape::indicator;
    if (name == "tent") return SingleSiteProfile::Shape::tent;
    throw InputError("unknown single-site profile kind '" + name + "'");
}

SingleSiteProfile SingleSiteProfile::indicator(Site site, double period, double c, double delta,
                                               std::vector<double> center) {
    SingleSiteProfile p;
    p.site = std::move(site);
    p.period = period;
    p.shape = Shape::indicator;
    p.c = c;
    p.delta = delta;
    p.height = c;
    p.radius = delta;
    p.cap = c;
    p.ball_center = std::move(center);
    if (p.ball_center.empty()) p.ball_center = p.lattice_point();
    return p;
}

double SingleSiteProfile::value_at_distance(double r) const {
    switch (shape) {
    case Shape::indicator: return r < radius ? height : 0.0;
    case Shape::tent: return std::min(cap, height * std::max(0.0, 1.0 - r / radius));
    }
    return 0.0;
}

double SingleSiteProfile::value(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t a = 0; a < ball_center.size(); ++a) s += (x[a] - ball_center[a]) * (x[a] - ball_center[a]);
    return value_at_distance(std::sqrt(s));
}

std::vector<double> SingleSiteProfile::lattice_point() const {
    std::vector<double> p(site.index.size());
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = static_cast<double>(site.index[a]) * period;
    return p;
}

double SingleSiteProfile::reach() const {
    const auto lp = lattice_point();
    double off = 0.0;
    for (std::size_t a = 0; a < lp.size(); ++a) off = std::max(off, std::abs(ball_center[a] - lp[a]));
    return off + radius;
}

// ---------------------------------------------------------------------------
// DisorderDistribution

std::string to_string(DisorderDistribution::Kind kind) {
    switch (kind) {
    case DisorderDistribution::Kind::uniform01: return "uniform01";
    case DisorderDistribution::Kind::bernoulli: return "bernoulli";
    case DisorderDistribution::Kind::table: return "table";
    }
    return "uniform01";
}

DisorderDistribution DisorderDistribution::uniform01(std::optional<double> eta, std::optional<double> kappa) {
    DisorderDistribution d;
    d.kind_ = Kind::uniform01;
    d.finalize(eta, kappa);
    return d;
}

DisorderDistribution DisorderDistribution::bernoulli(double p, std::optional<double> eta,
                                                     std::optional<double> kappa) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("bernoulli parameter must lie in [0,1]");
    DisorderDistribution d;
    d.kind_ = Kind::bernoulli;
    d.p_ = p;
    d.finalize(eta, kappa);
    return d;
}

DisorderDistribution DisorderDistribution::table(std::vector<double> values, std::vector<double> probs,
                                                 std::optional<double> eta, std::optional<double> kappa) {
    if (values.empty() || values.size() != probs.size())
        throw InputError("disorder table needs matching non-empty values and probs");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    DisorderDistribution d;
    d.kind_ = Kind::table;
    double total = 0.0;
    for (auto i : order) {
        if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw InputError("disorder table values must lie in [0,1]");
        if (!(probs[i] >= 0.0)) throw InputError("disorder table probabilities must be nonnegative");
        d.values_.push_back(values[i]);
        d.probs_.push_back(probs[i]);
        total += probs[i];
        d.cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("disorder table probabilities must sum to 1");
    d.cumulative_.back() = 1.0;
    d.finalize(eta, kappa);
    return d;
}

void DisorderDistribution::finalize(std::optional<double> eta, std::optional<double> kappa) {
    if (eta) {
        eta_ = *eta;
    } else {
        eta_ = median();
        if (!(eta_ > 0.0)) {
            // Median at zero: take the smallest positive atom instead.
            eta_ = 1.0;
            if (kind_ == Kind::table) {
                for (std::size_t i = 0; i < values_.size(); ++i)
                    if (values_[i] > 0.0 && probs_[i] > 0.0) {
                        eta_ = values_[i];
                        break;
                    }
            }
        }
    }
    if (!(eta_ > 0.0)) throw InputError("threshold eta must be positive");
    const double mass = mass_at_least(eta_);
    if (kappa) {
        kappa_ = *kappa;
    } else {
        kappa_ = (!eta && mass >= 0.5) ? 0.5 : mass;
    }
    if (!(kappa_ > 0.0 && kappa_ <= 1.0)) throw InputError("threshold mass kappa must lie in (0,1]");
    if (kappa_ > mass + 1e-15) {
        std::ostringstream os;
        os << "P[omega >= " << eta_ << "] = " << mass << " is below kappa = " << kappa_;
        throw InputError(os.str());
    }
}

double DisorderDistribution::sample(double u) const {
    double v = 0.0;
    switch (kind_) {
    case Kind::uniform01: v = u; break;
    case Kind::bernoulli: v = u < p_ ? 1.0 : 0.0; break;
    case Kind::table: {
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - cumulative_.begin(), static_cast<std::ptrdiff_t>(values_.size()) - 1));
        v = values_[i];
        break;
    }
    }
    if (!(v >= 0.0 && v <= 1.0)) throw AssertionFailure("disorder sampler left [0,1]");
    return v;
}

double DisorderDistribution::mass_at_least(double t) const {
    switch (kind_) {
    case Kind::uniform01: return std::clamp(1.0 - t, 0.0, 1.0);
    case Kind::bernoulli:
        if (t <= 0.0) return 1.0;
        return t <= 1.0 ? p_ : 0.0;
    case Kind::table: {
        double m = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (values_[i] >= t) m += probs_[i];
        return std::min(m, 1.0);
    }
    }
    return 0.0;
}

bool DisorderDistribution::has_exact_mass() const {
    return std::abs(threshold_mass() - kappa_) <= 1e-15;
}

double DisorderDistribution::median() const {
    switch (kind_) {
    case Kind::uniform01: return 0.5;
    case Kind::bernoulli: return p_ >= 0.5 ? 1.0 : 0.0;
    case Kind::table:
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (cumulative_[i] >= 0.5) return values_[i];
        return values_.back();
    }
    return 0.5;
}

double DisorderDistribution::mean() const {
    switch (kind_) {
    case Kind::uniform01: return 0.5;
    case Kind::bernoulli: return p_;
    case Kind::table: {
        double m = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * probs_[i];
        return m;
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Configurations and assembly

double DisorderConfiguration::at(const Site& site) const {
    const auto it = values.find(site);
    if (it == values.end()) throw InputError("configuration has no value for site " + to_string(site));
    return it->second;
}

double sample_site(std::uint64_t seed, const Site& site, const DisorderDistribution& dist) {
    return dist.sample(uniform_at(seed, site.index));
}

DisorderConfiguration sample_configuration(std::uint64_t seed, std::span<const Site> sites,
                                           const DisorderDistribution& dist) {
    DisorderConfiguration cfg;
    cfg.seed = seed;
    for (const auto& s : sites) cfg.values.emplace(s, sample_site(seed, s, dist));
    return cfg;
}

DisorderConfiguration constant_configuration(std::span<const Site> sites, double value) {
    DisorderConfiguration cfg;
    for (const auto& s : sites) cfg.values.emplace(s, value);
    return cfg;
}

std::vector<Site> contributing_sites(const GridSpec& grid, double period, double reach) {
    const int d = grid.dimension();
    std::vector<std::int64_t> first(d), count(d);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) {
        const double lo = (grid.lower(a) - reach) / period;
        const double hi = (grid.upper(a) + reach) / period;
        first[a] = static_cast<std::int64_t>(std::floor(lo)) + 1;
        count[a] = integers_in_open_interval(lo, hi);
        total *= static_cast<std::size_t>(count[a]);
    }
    std::vector<Site> out;
    if (total == 0) return out;
    out.reserve(total);
    std::vector<std::int64_t> k(d, 0);
    for (std::size_t t = 0; t < total; ++t) {
        Site s;
        s.index.resize(d);
        for (int a = 0; a < d; ++a) s.index[a] = first[a] + k[a];
        out.push_back(std::move(s));
        for (int a = d; a-- > 0;) {
            if (++k[a] < count[a]) break;
            k[a] = 0;
        }
    }
    return out;
}

namespace {

// Calls f(linear_node_index, point) for the nodes in the axis-aligned bounding box of the
// ball of radius r about `center`, clipped to the grid.
template <class F>
void for_nodes_near(const GridSpec& grid, std::span<const double> center, double r, F&& f) {
    const int d = grid.dimension();
    const double h = grid.spacing();
    const std::int64_t n = grid.points_per_side();
    std::vector<std::int64_t> lo(d), hi(d);
    for (int a = 0; a < d; ++a) {
        // node i sits at lower + (i + 1/2) h
        lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((center[a] - r - grid.lower(a)) / h - 0.5)));
        hi[a] = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::ceil((center[a] + r - grid.lower(a)) / h - 0.5)));
        if (lo[a] > hi[a]) return;
    }
    std::vector<std::int64_t> idx(lo);
    std::vector<double> p(d);
    while (true) {
        for (int a = 0; a < d; ++a) p[a] = grid.lower(a) + grid.coordinate(idx[a]);
        f(grid.linear_index(idx), std::span<const double>(p));
        int a = 0;
        for (; a < d; ++a) {
            if (++idx[a] <= hi[a]) break;
            idx[a] = lo[a];
        }
        if (a == d) break;
    }
}

double max_reach(std::span<const SingleSiteProfile> profiles) {
    double r = 0.0;
    for (const auto& p : profiles) r = std::max(r, p.reach());
    return r;
}

Field accumulate(const DisorderConfiguration* cfg, std::span<const SingleSiteProfile> profiles,
                 const GridSpec& grid) {
    Field field = Field::Zero(static_cast<Eigen::Index>(grid.num_nodes()));
    if (profiles.empty()) return field;
    const double period = profiles.front().period;

    std::map<Site, const SingleSiteProfile*> by_site;
    for (const auto& p : profiles) {
        if (p.site.dimension() != static_cast<std::size_t>(grid.dimension()))
            throw InputError("profile dimension does not match grid");
        by_site[p.site] = &p;
    }
    // Every realized site that reaches the box needs a profile; W sums the given profiles.
    if (cfg) {
        for (const auto& s : contributing_sites(grid, period, max_reach(profiles))) {
            const auto v = cfg->values.find(s);
            if (v != cfg->values.end() && v->second != 0.0 && !by_site.count(s))
                throw InputError("missing single-site profile for contributing site " + to_string(s));
        }
    }
    for (const auto& [s, prof] : by_site) {
        double w = 1.0;
        if (cfg) {
            w = cfg->at(s);
        }
        if (w == 0.0) continue;
        for_nodes_near(grid, prof->ball_center, prof->radius, [&](std::size_t k, std::span<const double> x) {
            field[static_cast<Eigen::Index>(k)] += w * prof->value(x);
        });
    }
    return field;
}

} // namespace

Field assemble_random_potential(const DisorderConfiguration& cfg,
                                std::span<const SingleSiteProfile> profiles, const GridSpec& grid) {
    return accumulate(&cfg, profiles, grid);
}

Field assemble_W(std::span<const SingleSiteProfile> profiles, const GridSpec& grid) {
    return accumulate(nullptr, profiles, grid);
}

SingleSiteReport verify_single_site_bound(const SingleSiteProfile& profile, const GridSpec& grid) {
    if (profile.delta / grid.spacing() < 4.0 - 1e-12) {
        std::ostringstream os;
        os << "ball radius " << profile.delta << " is unresolvable at spacing " << grid.spacing()
           << " (need delta/h >= 4)";
        throw InputError(os.str());
    }
    SingleSiteReport rep;
    const auto lp = profile.lattice_point();
    double off = 0.0;
    for (std::size_t a = 0; a < lp.size(); ++a) off = std::max(off, std::abs(profile.ball_center[a] - lp[a]));
    rep.ball_inside_cell = off + profile.delta <= 0.5 * profile.period + 1e-15;

    rep.nonnegative = true;
    rep.lower_bound_holds = true;
    rep.min_on_ball = std::numeric_limits<double>::infinity();
    const Ball ball = profile.lower_bound_ball();
    const double scan = std::max(profile.radius, profile.delta);
    for_nodes_near(grid, profile.ball_center, scan, [&](std::size_t, std::span<const double> x) {
        const double u = profile.value(x);
        if (u < 0.0) rep.nonnegative = false;
        if (ball.contains(x)) {
            ++rep.ball_nodes;
            rep.min_on_ball = std::min(rep.min_on_ball, u);
            if (u < profile.c) rep.lower_bound_holds = false;
        }
    });
    if (rep.ball_nodes == 0) throw InputError("lower-bound ball of site " + to_string(profile.site) + " contains no grid node");
    rep.ok = rep.ball_inside_cell && rep.lower_bound_holds && rep.nonnegative;
    std::ostringstream os;
    os << "site " << to_string(profile.site) << ": ball nodes " << rep.ball_nodes << ", min u on ball "
       << rep.min_on_ball << " vs c " << profile.c << (rep.ball_inside_cell ? "" : ", ball leaves cell");
    rep.detail = os.str();
    return rep;
}

// ---------------------------------------------------------------------------
// PotentialModel

SingleSiteProfile PotentialModel::profile_for(const Site& site) const {
    SingleSiteProfile p;
    p.site = site;
    p.period = period;
    p.shape = single_site.shape;
    p.c = single_site.c;
    p.delta = single_site.delta;
    p.height = single_site.height;
    p.radius = single_site.radius;
    p.cap = single_site.cap;
    const auto it = single_site.centers.find(site);
    if (it != single_site.centers.end()) {
        p.ball_center = it->second;
    } else {
        p.ball_center = p.lattice_point();
        if (!single_site.offset.empty())
            for (std::size_t a = 0; a < p.ball_center.size(); ++a) p.ball_center[a] += single_site.offset[a];
    }
    return p;
}

double PotentialModel::max_reach() const {
    double off = 0.0;
    for (double o : single_site.offset) off = std::max(off, std::abs(o));
    for (const auto& [site, c] : single_site.centers) {
        for (std::size_t a = 0; a < c.size(); ++a)
            off = std::max(off, std::abs(c[a] - static_cast<double>(site.index[a]) * period));
    }
    return off + single_site.radius;
}

std::vector<Site> PotentialModel::sites_for(const GridSpec& grid) const {
    return contributing_sites(grid, period, max_reach());
}

std::vector<SingleSiteProfile> PotentialModel::profiles_for(const GridSpec& grid) const {
    if (grid.dimension() != dimension) throw InputError("grid dimension does not match model");
    std::vector<SingleSiteProfile> out;
    for (const auto& s : sites_for(grid)) out.push_back(profile_for(s));
    return out;
}

void PotentialModel::validate() const {
    if (dimension < 2) throw InputError("model dimension must be >= 2");
    if (!(period > 0.0)) throw InputError("model period G must be positive");
    if (!(single_site.c > 0.0)) throw InputError("single-site constant c must be positive");
    if (!(single_site.delta > 0.0 && single_site.delta <= 0.5 * period))
        throw InputError("single-site radius delta must lie in (0, G/2]");
    if (!(single_site.radius > 0.0)) throw InputError("single-site support radius must be positive");
    if (!single_site.offset.empty() && single_site.offset.size() != static_cast<std::size_t>(dimension))
        throw InputError("single-site offset has wrong dimension");
    for (const auto& [site, c] : single_site.centers)
        if (site.dimension() != static_cast<std::size_t>(dimension) || c.size() != site.dimension())
            throw InputError("single-site center entry has wrong dimension");
}

} // namespace iselab
