#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iselab/potentials.hpp"
#include "iselab/sparse_operator.hpp"

namespace iselab {

inline constexpr double tol_eig = 1e-8;
inline constexpr double tol_gap = 1e-6;

enum class SolveMethod { dense, iterative };
std::string to_string(SolveMethod m);

struct SolverOptions {
    double tol = tol_eig;
    std::size_t dense_max = 1024;      // n^d at or below this uses full diagonalization
    std::size_t max_eigs = 4096;       // budget on how many eigenpairs one call may return
    std::size_t max_basis = 360;       // Krylov basis cap per attempt
    int block_size = 4;
    int max_block_size = 16;           // block is doubled on a failed inertia check
    std::uint64_t start_seed = 0x15e1ab5eedULL;
};

struct SolverTelemetry {
    SolveMethod method = SolveMethod::dense;
    std::size_t iterations = 0;    // block Lanczos steps (sum over attempts)
    std::size_t basis_size = 0;
    std::size_t factorizations = 0;
    int block_size = 0;
};

/// Eigenpairs sorted ascending, with residual norms ‖Hφ − λφ‖.
struct SpectralWindowResult {
    std::vector<double> values;
    std::vector<Vector> vectors;  // empty when vectors were not requested
    std::vector<double> residuals;
    std::size_t count = 0;
    SolverTelemetry telemetry;
};

struct LowestAbove {
    std::size_t index = 0;  // k0, 1-based: 1 + #{λ < b − tol}
    double value = 0.0;
    Vector vector;
    double residual = 0.0;
    SolverTelemetry telemetry;
};

/// Sylvester inertia of H − μ: the number of eigenvalues strictly below μ.
/// Counted from the signs of D in a sparse LDLᵀ factorization.
std::size_t count_below(const SparseSymmetricOperator& H, double mu, const SolverOptions& opts = {});

/// All eigenvalues below `threshold`; eigenvalues within tol of the threshold count as above it.
SpectralWindowResult eigs_below(const SparseSymmetricOperator& H, double threshold,
                                const SolverOptions& opts = {}, bool want_vectors = true);

/// The lowest eigenvalue in [b, ∞) (within tol of b counts as ≥ b) and its index k0.
LowestAbove lowest_eig_above(const SparseSymmetricOperator& H, double b, const SolverOptions& opts = {},
                             bool want_vector = true);

/// λ_k (1-based) found by stepping upward from `start`, which must satisfy #{λ < start − tol} < k.
/// Cheap when few eigenvalues lie between `start` and λ_k.
LowestAbove eigenvalue_at_index(const SparseSymmetricOperator& H, std::size_t k, double start,
                                const SolverOptions& opts = {}, bool want_vector = false);

/// The k lowest eigenpairs.
SpectralWindowResult lowest_eigs(const SparseSymmetricOperator& H, std::size_t k,
                                 const SolverOptions& opts = {}, bool want_vectors = true);

/// Eigenvalues in the open interval (lo, hi).
SpectralWindowResult eigs_in_window(const SparseSymmetricOperator& H, double lo, double hi,
                                    const SolverOptions& opts = {}, bool want_vectors = false);

/// Full spectrum by dense diagonalization, ascending. Always dense regardless of size limits.
std::vector<double> dense_spectrum(const SparseSymmetricOperator& H);

struct FamilyTrack {
    std::vector<double> t;
    std::vector<std::vector<double>> in_window;  // eigenvalues in (a + tol_gap, b − tol_gap) per t
    double a = 0.0;
    double b = 0.0;
};

/// Eigenvalues of H_{0,L} + t W_L inside the shrunk window, for each t of a sorted grid in [0,1].
FamilyTrack track_family(const GridSpec& grid, const PeriodicPotential& background,
                         std::span<const SingleSiteProfile> profiles, std::span<const double> t_grid,
                         std::pair<double, double> window, const SolverOptions& opts = {});

} // namespace iselab
