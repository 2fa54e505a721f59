#include "iselab/operators.hpp"

#include <cmath>
#include <sstream>

#include "iselab/errors.hpp"

namespace iselab {

IndicatorMask::IndicatorMask(std::vector<std::uint8_t> member) : member_(std::move(member)) {
    for (auto m : member_) count_ += m ? 1 : 0;
}

IndicatorMask IndicatorMask::none(const GridSpec& grid) {
    return IndicatorMask(std::vector<std::uint8_t>(grid.num_nodes(), 0));
}

IndicatorMask IndicatorMask::all(const GridSpec& grid) {
    return IndicatorMask(std::vector<std::uint8_t>(grid.num_nodes(), 1));
}

IndicatorMask IndicatorMask::from_balls(const GridSpec& grid, std::span<const Ball> balls) {
    std::vector<std::uint8_t> member(grid.num_nodes(), 0);
    const int d = grid.dimension();
    const double h = grid.spacing();
    const std::int64_t n = grid.points_per_side();
    std::vector<std::int64_t> lo(d), hi(d), idx(d);
    std::vector<double> p(d);
    for (const Ball& b : balls) {
        bool in_range = true;
        for (int a = 0; a < d; ++a) {
            lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((b.center[a] - b.radius - grid.lower(a)) / h - 0.5)));
            hi[a] = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::ceil((b.center[a] + b.radius - grid.lower(a)) / h - 0.5)));
            if (lo[a] > hi[a]) in_range = false;
        }
        std::size_t hits = 0;
        if (in_range) {
            idx = lo;
            while (true) {
                for (int a = 0; a < d; ++a) p[a] = grid.lower(a) + grid.coordinate(idx[a]);
                if (b.contains(p)) {
                    member[grid.linear_index(idx)] = 1;
                    ++hits;
                }
                int a = 0;
                for (; a < d; ++a) {
                    if (++idx[a] <= hi[a]) break;
                    idx[a] = lo[a];
                }
                if (a == d) break;
            }
        }
        if (hits == 0 && grid.contains_open(b.center)) {
            std::ostringstream os;
            os << "ball of radius " << b.radius << " catches no grid node at spacing " << h;
            throw InputError(os.str());
        }
    }
    return IndicatorMask(std::move(member));
}

Field IndicatorMask::as_field(double amplitude) const {
    Field f(static_cast<Eigen::Index>(member_.size()));
    for (std::size_t k = 0; k < member_.size(); ++k) f[static_cast<Eigen::Index>(k)] = member_[k] ? amplitude : 0.0;
    return f;
}

IndicatorMask IndicatorMask::united(const IndicatorMask& other) const {
    if (other.size() != size()) throw InputError("mask sizes differ");
    std::vector<std::uint8_t> m(member_);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = m[k] | other.member_[k];
    return IndicatorMask(std::move(m));
}

bool IndicatorMask::disjoint_from(const IndicatorMask& other) const {
    for (std::size_t k = 0; k < member_.size() && k < other.member_.size(); ++k)
        if (member_[k] && other.member_[k]) return false;
    return true;
}

namespace {

std::string background_description(const PeriodicPotential& v) {
    std::ostringstream os;
    os.precision(17);
    os << "V0=" << to_string(v.kind()) << "(G=" << v.period() << ",amp=" << v.amplitude() << ",w=" << v.width() << ")";
    return os.str();
}

std::string grid_description(const GridSpec& g) {
    std::ostringstream os;
    os.precision(17);
    os << "grid(d=" << g.dimension() << ",L=" << g.side() << ",n=" << g.points_per_side()
       << ",bc=" << to_string(g.boundary()) << ",x=";
    for (double c : g.center()) os << c << ';';
    os << ')';
    return os.str();
}

} // namespace

SparseSymmetricOperator assemble_background(const GridSpec& grid, const PeriodicPotential& background) {
    const SparseSymmetricOperator lap = build_laplacian(grid);
    SparseMatrix m = lap.matrix();
    const Field v = background.sample(grid);
    for (std::int64_t k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            if (it.row() == it.col()) it.valueRef() += v[it.row()];
    return SparseSymmetricOperator(grid, std::move(m), grid_description(grid) + " " + background_description(background));
}

SparseSymmetricOperator assemble_hamiltonian(const GridSpec& grid, const PeriodicPotential& background,
                                             const DisorderConfiguration& cfg,
                                             std::span<const SingleSiteProfile> profiles) {
    const Field v = assemble_random_potential(cfg, profiles, grid);
    std::ostringstream os;
    os << "V_omega(seed=" << cfg.seed << ",sites=" << cfg.values.size() << ",profiles=" << profiles.size() << ")";
    return assemble_background(grid, background).plus_diagonal(v, os.str());
}

SparseSymmetricOperator assemble_interpolated(const GridSpec& grid, const PeriodicPotential& background,
                                              double t, std::span<const SingleSiteProfile> profiles) {
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("interpolation parameter t must lie in [0,1]");
    const Field w = assemble_W(profiles, grid);
    std::ostringstream os;
    os.precision(17);
    os << "t*W(t=" << t << ",profiles=" << profiles.size() << ")";
    return assemble_background(grid, background).plus_diagonal(t * w, os.str());
}

SparseSymmetricOperator assemble_test_perturbation(const GridSpec& grid, const PeriodicPotential& background,
                                                   const IndicatorMask& mask, double amplitude) {
    if (!(amplitude >= 0.0)) throw InputError("test perturbation amplitude must be nonnegative");
    if (mask.size() != grid.num_nodes()) throw InputError("mask does not match grid");
    if (mask.empty()) throw InputError("test perturbation mask is empty");
    std::ostringstream os;
    os.precision(17);
    os << "amp*chi_S(amp=" << amplitude << ",nodes=" << mask.count() << ")";
    return assemble_background(grid, background).plus_diagonal(mask.as_field(amplitude), os.str());
}

} // namespace iselab
