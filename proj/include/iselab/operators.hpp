#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iselab/grid.hpp"
#include "iselab/potentials.hpp"
#include "iselab/sparse_operator.hpp"

namespace iselab {

/// A set of grid nodes, e.g. S_{Z,L} = ∪ B_δ(y_j) ∩ Λ_L.
class IndicatorMask {
public:
    IndicatorMask() = default;
    explicit IndicatorMask(std::vector<std::uint8_t> member);

    static IndicatorMask none(const GridSpec& grid);
    static IndicatorMask all(const GridSpec& grid);
    // Nodes strictly inside some ball. A ball centered inside the box that catches no node
    // is an InputError (it is unresolved at this spacing).
    static IndicatorMask from_balls(const GridSpec& grid, std::span<const Ball> balls);

    std::size_t size() const { return member_.size(); }
    std::size_t count() const { return count_; }
    bool empty() const { return count_ == 0; }
    bool contains(std::size_t node) const { return member_[node] != 0; }
    const std::vector<std::uint8_t>& members() const { return member_; }

    Field as_field(double amplitude) const;
    IndicatorMask united(const IndicatorMask& other) const;
    bool disjoint_from(const IndicatorMask& other) const;

private:
    std::vector<std::uint8_t> member_;
    std::size_t count_ = 0;
};

/// H_{0,L} = −Δ + V0.
SparseSymmetricOperator assemble_background(const GridSpec& grid, const PeriodicPotential& background);

/// H_{ω,L} = −Δ + V0 + Σ ω_j u_j.
SparseSymmetricOperator assemble_hamiltonian(const GridSpec& grid, const PeriodicPotential& background,
                                             const DisorderConfiguration& cfg,
                                             std::span<const SingleSiteProfile> profiles);

/// H_{0,L} + t W_L, t ∈ [0,1].
SparseSymmetricOperator assemble_interpolated(const GridSpec& grid, const PeriodicPotential& background,
                                              double t, std::span<const SingleSiteProfile> profiles);

/// H_{0,L} + amplitude χ_mask.
SparseSymmetricOperator assemble_test_perturbation(const GridSpec& grid, const PeriodicPotential& background,
                                                   const IndicatorMask& mask, double amplitude);

} // namespace iselab
