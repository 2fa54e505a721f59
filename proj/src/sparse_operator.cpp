#include "iselab/sparse_operator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "iselab/errors.hpp"

namespace iselab {

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SparseSymmetricOperator::SparseSymmetricOperator(GridSpec grid, SparseMatrix matrix,
                                                 std::string description)
    : grid_(std::move(grid)), matrix_(std::move(matrix)), description_(std::move(description)) {
    if (matrix_.rows() != matrix_.cols() ||
        static_cast<std::size_t>(matrix_.rows()) != grid_.num_nodes())
        throw InputError("operator size does not match grid");
    matrix_.makeCompressed();
}

std::string SparseSymmetricOperator::description_hash() const { return fnv1a_hex(description_); }

Vector SparseSymmetricOperator::diagonal() const { return matrix_.diagonal(); }

SparseSymmetricOperator SparseSymmetricOperator::plus_diagonal(const Vector& values,
                                                               const std::string& what) const {
    if (static_cast<std::size_t>(values.size()) != size())
        throw InputError("diagonal term has wrong length");
    SparseMatrix m = matrix_;
    for (std::int64_t k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            if (it.row() == it.col()) it.valueRef() += values[it.row()];
        }
    }
    return SparseSymmetricOperator(grid_, std::move(m), description_ + " + " + what);
}

SparseSymmetricOperator SparseSymmetricOperator::shifted(double value) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "shift(%.17g)", value);
    return plus_diagonal(Vector::Constant(static_cast<Eigen::Index>(size()), value), buf);
}

bool SparseSymmetricOperator::is_exactly_symmetric() const {
    SparseMatrix t = matrix_.transpose();
    if (t.nonZeros() != matrix_.nonZeros()) return false;
    for (std::int64_t k = 0; k < matrix_.outerSize(); ++k) {
        SparseMatrix::InnerIterator a(matrix_, k), b(t, k);
        for (; a && b; ++a, ++b) {
            if (a.row() != b.row() || a.value() != b.value()) return false;
        }
        if (a || b) return false;
    }
    return true;
}

double SparseSymmetricOperator::gershgorin_lower() const {
    double lo = 0.0;
    bool first = true;
    for (std::int64_t k = 0; k < matrix_.outerSize(); ++k) {
        double d = 0.0, r = 0.0;
        for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
            if (it.row() == it.col()) d += it.value();
            else r += std::abs(it.value());
        }
        if (first || d - r < lo) lo = d - r;
        first = false;
    }
    return lo;
}

double SparseSymmetricOperator::gershgorin_upper() const {
    double hi = 0.0;
    bool first = true;
    for (std::int64_t k = 0; k < matrix_.outerSize(); ++k) {
        double d = 0.0, r = 0.0;
        for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
            if (it.row() == it.col()) d += it.value();
            else r += std::abs(it.value());
        }
        if (first || d + r > hi) hi = d + r;
        first = false;
    }
    return hi;
}

void SparseSymmetricOperator::write_triplets(std::ostream& os) const {
    char buf[96];
    for (std::int64_t k = 0; k < matrix_.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
            std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row()),
                          static_cast<long long>(it.col()), it.value());
            os << buf;
        }
    }
}

} // namespace iselab
