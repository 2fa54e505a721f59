#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "iselab/grid.hpp"

namespace iselab {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// A symmetric Hamiltonian on a grid. Both triangles are stored; potentials only touch
/// the diagonal so the off-diagonal pattern is that of the Laplacian stencil.
class SparseSymmetricOperator {
public:
    SparseSymmetricOperator(GridSpec grid, SparseMatrix matrix, std::string description);

    const GridSpec& grid() const { return grid_; }
    const SparseMatrix& matrix() const { return matrix_; }
    std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
    Boundary boundary() const { return grid_.boundary(); }

    // Free-form provenance string and its 64-bit FNV-1a digest (hex).
    const std::string& description() const { return description_; }
    std::string description_hash() const;

    Vector diagonal() const;

    // New operator with `values` added to the diagonal.
    SparseSymmetricOperator plus_diagonal(const Vector& values, const std::string& what) const;
    SparseSymmetricOperator shifted(double value) const;

    Vector apply(const Vector& x) const { return matrix_ * x; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }

    bool is_exactly_symmetric() const;

    // Lower bound on the spectrum from Gershgorin discs.
    double gershgorin_lower() const;
    double gershgorin_upper() const;

    // One "row col value" line per stored entry, 0-based, 17 significant digits.
    void write_triplets(std::ostream& os) const;

private:
    GridSpec grid_;
    SparseMatrix matrix_;
    std::string description_;
};

std::string fnv1a_hex(const std::string& text);

} // namespace iselab
