#include "iselab/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "iselab/errors.hpp"
#include "iselab/operators.hpp"
#include "iselab/random.hpp"

namespace iselab {

std::string to_string(SolveMethod m) { return m == SolveMethod::dense ? "dense" : "iterative"; }

namespace {

using Matrix = Eigen::MatrixXd;

// LDLᵀ of H − μ with the symbolic analysis shared across shifts.
class ShiftedLdlt {
public:
    explicit ShiftedLdlt(const SparseMatrix& A) : A_(A) { ldlt_.analyzePattern(A_); }

    // An exact zero pivot means μ sits on a (numerically) singular leading minor; nudge μ
    // by a few ulps-scale steps on alternating sides, far inside the inertia margins.
    void factorize(double mu) {
        static constexpr double nudges[] = {0.0, -1e-12, 1e-12, -1e-11, 1e-11, -1e-10, 1e-10};
        for (double s : nudges) {
            const double m = mu + s * (1.0 + std::abs(mu));
            ldlt_.setShift(-m);
            ldlt_.factorize(A_);
            if (ldlt_.info() == Eigen::Success) {
                mu_ = m;
                return;
            }
        }
        std::ostringstream os;
        os << "sparse LDL^T factorization failed near shift " << mu;
        throw SolverError(os.str());
    }

    std::size_t negatives() const {
        const auto D = ldlt_.vectorD();
        std::size_t c = 0;
        for (Eigen::Index i = 0; i < D.size(); ++i)
            if (D[i] < 0.0) ++c;
        return c;
    }

    Matrix solve(const Matrix& rhs) const { return ldlt_.solve(rhs); }
    double shift() const { return mu_; }

private:
    const SparseMatrix& A_;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    double mu_ = 0.0;
};

double residual_norm(const SparseSymmetricOperator& H, const Vector& x, double lambda) {
    return (H.matrix() * x - lambda * x).norm();
}

bool residual_ok(double res, double lambda, double tol) { return res <= tol * (std::abs(lambda) + 1.0); }

struct Ritz {
    std::vector<double> lambda;  // σ + 1/θ, aligned with the ascending θ of the projected matrix
    std::vector<double> theta;
    std::vector<double> predicted;  // estimated ‖Hx − λx‖
};

// Indices (into Ritz arrays) of the wanted pairs, or nullopt if the basis cannot decide yet.
using Selector = std::function<std::optional<std::vector<int>>(const Ritz&)>;

struct LanczosResult {
    bool converged = false;
    std::vector<double> values;
    std::vector<Vector> vectors;
    std::vector<double> residuals;
    std::size_t iterations = 0;
    std::size_t basis = 0;
};

Matrix random_block(std::size_t n, int p, std::uint64_t seed, std::uint64_t salt) {
    Matrix X(static_cast<Eigen::Index>(n), p);
    for (int c = 0; c < p; ++c) {
        CounterStream s(seed, mix64(salt * 1315423911ULL + static_cast<std::uint64_t>(c)));
        for (std::size_t r = 0; r < n; ++r) X(static_cast<Eigen::Index>(r), c) = s.uniform(r) - 0.5;
    }
    return X;
}

/**
 * Block Lanczos on (H − σ)⁻¹ with full reorthogonalization.
 *
 * The projected matrix is assembled from explicit projections Qᵀ(H − σ)⁻¹Q_j, so the
 * Rayleigh–Ritz step stays exact even when a breakdown forces a random restart block.
 * The remainder block R gives ‖(H − σ)⁻¹x − θx‖ ≈ ‖R s_last‖, which maps to an
 * H-residual estimate of ‖R s_last‖ / θ².
 */
LanczosResult shift_invert_lanczos(const SparseSymmetricOperator& H, const ShiftedLdlt& inv, double sigma,
                                   int p, std::size_t max_basis, double tol, std::uint64_t seed,
                                   const Selector& select) {
    const std::size_t N = H.size();
    const std::size_t m_max = std::min(N, std::max<std::size_t>(max_basis, static_cast<std::size_t>(2 * p)));
    p = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(p), N));
    Matrix Q(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(m_max));
    Matrix T = Matrix::Zero(static_cast<Eigen::Index>(m_max), static_cast<Eigen::Index>(m_max));
    LanczosResult out;

    // Orthonormalize the columns of W against Q(:, 0:m) and each other; R = Q_newᵀ W.
    std::uint64_t salt = 1;
    auto orthonormalize = [&](Matrix& W, Eigen::Index m, Matrix& R) {
        const Eigen::Index cols = W.cols();
        R = Matrix::Zero(cols, cols);
        double scale = 0.0;
        for (Eigen::Index c = 0; c < cols; ++c) scale = std::max(scale, W.col(c).norm());
        for (Eigen::Index c = 0; c < cols; ++c) {
            Vector v = W.col(c);
            for (int pass = 0; pass < 2; ++pass) {
                if (m > 0) v -= Q.leftCols(m) * (Q.leftCols(m).transpose() * v);
                for (Eigen::Index i = 0; i < c; ++i) {
                    const double r = W.col(i).dot(v);
                    if (pass == 0) R(i, c) = r;
                    else R(i, c) += r;
                    v -= r * W.col(i);
                }
            }
            double nrm = v.norm();
            if (!(nrm > 1e-10 * std::max(scale, 1e-300))) {
                // Breakdown: invariant subspace found. Continue with a fresh direction.
                R(c, c) = 0.0;
                for (int tries = 0; tries < 4; ++tries) {
                    v = random_block(N, 1, seed, 1000003ULL + salt++).col(0);
                    for (int pass = 0; pass < 2; ++pass) {
                        if (m > 0) v -= Q.leftCols(m) * (Q.leftCols(m).transpose() * v);
                        for (Eigen::Index i = 0; i < c; ++i) v -= W.col(i).dot(v) * W.col(i);
                    }
                    nrm = v.norm();
                    if (nrm > 1e-8) break;
                }
            } else {
                R(c, c) = nrm;
            }
            W.col(c) = v / nrm;
        }
    };

    Matrix W = random_block(N, p, seed, 0);
    Matrix R;
    orthonormalize(W, 0, R);
    Q.leftCols(p) = W;
    Eigen::Index m = 0;  // columns of Q already expanded

    while (true) {
        const Eigen::Index cur = m + p;  // Q(:, 0:cur) is orthonormal
        W = inv.solve(Q.middleCols(m, p));
        ++out.iterations;
        Matrix C = Q.leftCols(cur).transpose() * W;
        W -= Q.leftCols(cur) * C;
        Matrix C2 = Q.leftCols(cur).transpose() * W;
        W -= Q.leftCols(cur) * C2;
        C += C2;
        T.block(0, m, cur, p) = C;
        T.block(m, 0, p, cur) = C.transpose();
        T.block(m, m, p, p) = 0.5 * (C.bottomRows(p) + C.bottomRows(p).transpose());
        m = cur;

        const std::size_t room = m_max - static_cast<std::size_t>(m);
        const bool exhausted = room == 0;
        const bool full_space = static_cast<std::size_t>(m) >= N;
        Matrix Rnext;
        if (!full_space) orthonormalize(W, m, Rnext);

        Eigen::SelfAdjointEigenSolver<Matrix> es(T.topLeftCorner(m, m));
        if (es.info() != Eigen::Success) throw SolverError("projected eigenproblem failed");
        Ritz ritz;
        ritz.lambda.resize(static_cast<std::size_t>(m));
        ritz.theta.resize(static_cast<std::size_t>(m));
        ritz.predicted.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) {
            const double th = es.eigenvalues()[i];
            ritz.theta[i] = th;
            ritz.lambda[i] = th != 0.0 ? sigma + 1.0 / th : std::numeric_limits<double>::infinity();
            const double est = full_space ? 0.0 : (Rnext * es.eigenvectors().col(i).tail(p)).norm();
            ritz.predicted[i] = th != 0.0 ? est / (th * th) : std::numeric_limits<double>::infinity();
        }
        out.basis = static_cast<std::size_t>(m);

        const auto wanted = select(ritz);
        bool predicted_ok = wanted.has_value();
        if (wanted) {
            for (int i : *wanted)
                if (!(ritz.predicted[i] <= 0.1 * tol * (std::abs(ritz.lambda[i]) + 1.0))) predicted_ok = false;
        }
        if (predicted_ok || ((exhausted || full_space) && wanted)) {
            std::vector<double> vals, res;
            std::vector<Vector> vecs;
            bool ok = true;
            for (int i : *wanted) {
                Vector x = Q.leftCols(m) * es.eigenvectors().col(i);
                x.normalize();
                const double lam = ritz.lambda[i];
                const double r = residual_norm(H, x, lam);
                if (!residual_ok(r, lam, tol)) ok = false;
                vals.push_back(lam);
                vecs.push_back(std::move(x));
                res.push_back(r);
            }
            if (ok) {
                out.converged = true;
                out.values = std::move(vals);
                out.vectors = std::move(vecs);
                out.residuals = std::move(res);
                return out;
            }
        }
        if (exhausted || full_space) return out;
        if (room < static_cast<std::size_t>(p)) {
            // Last block shrinks to fit the basis cap.
            p = static_cast<int>(room);
            W = W.leftCols(p).eval();
        }
        Q.middleCols(m, p) = W;
    }
}

void sort_result(SpectralWindowResult& r) {
    std::vector<std::size_t> order(r.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return r.values[a] < r.values[b]; });
    SpectralWindowResult s;
    s.count = r.count;
    s.telemetry = r.telemetry;
    for (auto i : order) {
        s.values.push_back(r.values[i]);
        if (!r.residuals.empty()) s.residuals.push_back(r.residuals[i]);
        if (!r.vectors.empty()) s.vectors.push_back(std::move(r.vectors[i]));
    }
    r = std::move(s);
}

// Full diagonalization, values ascending.
struct DenseEig {
    Vector values;
    Matrix vectors;
    bool has_vectors = false;
};

DenseEig dense_eig(const SparseSymmetricOperator& H, bool vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(H.dense(), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed to converge");
    DenseEig d;
    d.values = es.eigenvalues();
    if (vectors) {
        d.vectors = es.eigenvectors();
        d.has_vectors = true;
    }
    return d;
}

void fill_from_dense(SpectralWindowResult& r, const SparseSymmetricOperator& H, const DenseEig& d,
                     Eigen::Index first, Eigen::Index count) {
    for (Eigen::Index i = first; i < first + count; ++i) {
        const double lam = d.values[i];
        r.values.push_back(lam);
        if (d.has_vectors) {
            Vector x = d.vectors.col(i);
            x.normalize();
            r.residuals.push_back(residual_norm(H, x, lam));
            r.vectors.push_back(std::move(x));
        }
    }
    r.telemetry.method = SolveMethod::dense;
    r.telemetry.basis_size = H.size();
}

bool use_dense(const SparseSymmetricOperator& H, const SolverOptions& opts) { return H.size() <= opts.dense_max; }

std::string telemetry_text(const SolverTelemetry& t) {
    std::ostringstream os;
    os << "method=" << to_string(t.method) << " iterations=" << t.iterations << " basis=" << t.basis_size
       << " factorizations=" << t.factorizations << " block=" << t.block_size;
    return os.str();
}

// Ritz values carry an error of at most the residual, i.e. tol (|λ| + 1).
double inertia_margin(double lambda, double tol) { return 2.0 * tol * (1.0 + std::abs(lambda)); }

// Runs the Lanczos driver with growing block size until `accept` validates the result.
template <class Accept>
LanczosResult lanczos_with_retries(const SparseSymmetricOperator& H, const ShiftedLdlt& inv, double sigma,
                                   const SolverOptions& opts, const Selector& select, SolverTelemetry& tel,
                                   Accept&& accept, const char* what) {
    for (int p = std::max(1, opts.block_size); p <= std::max(opts.block_size, opts.max_block_size); p *= 2) {
        const std::size_t basis = std::max(opts.max_basis, static_cast<std::size_t>(8 * p));
        LanczosResult r = shift_invert_lanczos(H, inv, sigma, p, basis, opts.tol,
                                               derive_seed(opts.start_seed, static_cast<std::uint64_t>(p)), select);
        tel.iterations += r.iterations;
        tel.basis_size = std::max(tel.basis_size, r.basis);
        tel.block_size = p;
        if (r.converged && accept(r)) return r;
    }
    std::ostringstream os;
    os << what << ": iterative eigensolver did not converge (" << telemetry_text(tel) << ")";
    throw SolverError(os.str());
}

} // namespace

std::vector<double> dense_spectrum(const SparseSymmetricOperator& H) {
    const auto d = dense_eig(H, false);
    return {d.values.data(), d.values.data() + d.values.size()};
}

std::size_t count_below(const SparseSymmetricOperator& H, double mu, const SolverOptions&) {
    ShiftedLdlt f(H.matrix());
    f.factorize(mu);
    return f.negatives();
}

SpectralWindowResult lowest_eigs(const SparseSymmetricOperator& H, std::size_t k, const SolverOptions& opts,
                                 bool want_vectors) {
    SpectralWindowResult r;
    if (k == 0) return r;
    if (k > H.size()) throw InputError("requested more eigenvalues than the operator dimension");
    if (k > opts.max_eigs) throw SolverError("requested eigenvalue count exceeds the solver budget");
    if (use_dense(H, opts)) {
        const auto d = dense_eig(H, want_vectors);
        fill_from_dense(r, H, d, 0, static_cast<Eigen::Index>(k));
        r.count = k;
        return r;
    }
    r.telemetry.method = SolveMethod::iterative;
    const double sigma = H.gershgorin_lower() - 1.0;
    ShiftedLdlt inv(H.matrix());
    inv.factorize(sigma);
    ShiftedLdlt probe(H.matrix());
    r.telemetry.factorizations = 1;

    const Selector select = [k](const Ritz& z) -> std::optional<std::vector<int>> {
        if (z.theta.size() < k) return std::nullopt;
        std::vector<int> idx;
        for (std::size_t i = 0; i < k; ++i) idx.push_back(static_cast<int>(z.theta.size() - 1 - i));
        return idx;
    };
    auto accept = [&](const LanczosResult& lr) {
        const double vk = *std::max_element(lr.values.begin(), lr.values.end());
        probe.factorize(vk - inertia_margin(vk, opts.tol));
        const auto below = probe.negatives();
        probe.factorize(vk + inertia_margin(vk, opts.tol));
        const auto upto = probe.negatives();
        r.telemetry.factorizations += 2;
        return below <= k - 1 && upto >= k;
    };
    auto lr = lanczos_with_retries(H, inv, sigma, opts, select, r.telemetry, accept, "lowest_eigs");
    r.values = std::move(lr.values);
    r.residuals = std::move(lr.residuals);
    if (want_vectors) r.vectors = std::move(lr.vectors);
    r.count = k;
    sort_result(r);
    return r;
}

SpectralWindowResult eigs_below(const SparseSymmetricOperator& H, double threshold, const SolverOptions& opts,
                                bool want_vectors) {
    const double cut = threshold - opts.tol;
    if (use_dense(H, opts)) {
        SpectralWindowResult r;
        const auto d = dense_eig(H, want_vectors);
        Eigen::Index c = 0;
        while (c < d.values.size() && d.values[c] < cut) ++c;
        if (static_cast<std::size_t>(c) > opts.max_eigs) throw SolverError("eigenvalue count below threshold exceeds the solver budget");
        fill_from_dense(r, H, d, 0, c);
        r.count = static_cast<std::size_t>(c);
        return r;
    }
    const std::size_t c = count_below(H, cut, opts);
    if (c > opts.max_eigs) {
        std::ostringstream os;
        os << c << " eigenvalues below threshold exceed the solver budget of " << opts.max_eigs;
        throw SolverError(os.str());
    }
    SpectralWindowResult r;
    if (c == 0) {
        r.telemetry.method = SolveMethod::iterative;
        r.telemetry.factorizations = 1;
        return r;
    }
    r = lowest_eigs(H, c, opts, want_vectors);
    r.telemetry.factorizations += 1;
    return r;
}

LowestAbove lowest_eig_above(const SparseSymmetricOperator& H, double b, const SolverOptions& opts,
                             bool want_vector) {
    LowestAbove out;
    const double floor_value = b - opts.tol;
    if (use_dense(H, opts)) {
        const auto d = dense_eig(H, want_vector);
        Eigen::Index k = 0;
        while (k < d.values.size() && d.values[k] < floor_value) ++k;
        if (k == d.values.size()) throw SolverError("window exhausted: no eigenvalue at or above b");
        out.index = static_cast<std::size_t>(k) + 1;
        out.value = d.values[k];
        if (want_vector) {
            out.vector = d.vectors.col(k).normalized();
            out.residual = residual_norm(H, out.vector, out.value);
        }
        out.telemetry.method = SolveMethod::dense;
        out.telemetry.basis_size = H.size();
        return out;
    }

    out.telemetry.method = SolveMethod::iterative;
    ShiftedLdlt probe(H.matrix());
    probe.factorize(floor_value);
    const std::size_t below = probe.negatives();
    out.telemetry.factorizations = 1;
    if (below >= H.size()) throw SolverError("window exhausted: no eigenvalue at or above b");
    out.index = below + 1;

    // Shifted just above b so that b itself may be an eigenvalue.
    const double sigma = b + 10.0 * opts.tol;
    ShiftedLdlt inv(H.matrix());
    inv.factorize(sigma);
    ++out.telemetry.factorizations;

    const Selector select = [floor_value](const Ritz& z) -> std::optional<std::vector<int>> {
        int best = -1;
        for (std::size_t i = 0; i < z.lambda.size(); ++i) {
            if (z.lambda[i] >= floor_value && std::isfinite(z.lambda[i]) &&
                (best < 0 || z.lambda[i] < z.lambda[static_cast<std::size_t>(best)]))
                best = static_cast<int>(i);
        }
        if (best < 0) return std::nullopt;
        return std::vector<int>{best};
    };
    auto accept = [&](const LanczosResult& lr) {
        const double lam = lr.values.front();
        probe.factorize(lam - inertia_margin(lam, opts.tol));
        ++out.telemetry.factorizations;
        return probe.negatives() == below;
    };
    auto lr = lanczos_with_retries(H, inv, sigma, opts, select, out.telemetry, accept, "lowest_eig_above");
    out.value = lr.values.front();
    out.residual = lr.residuals.front();
    if (want_vector) out.vector = std::move(lr.vectors.front());
    return out;
}

LowestAbove eigenvalue_at_index(const SparseSymmetricOperator& H, std::size_t k, double start,
                                const SolverOptions& opts, bool want_vector) {
    if (k == 0 || k > H.size()) throw InputError("eigenvalue index out of range");
    LowestAbove r = lowest_eig_above(H, start, opts, want_vector);
    if (r.index > k) throw InputError("start lies above the requested eigenvalue");
    SolverTelemetry total = r.telemetry;
    while (r.index < k) {
        // Next distinct value above r.value; degenerate copies are skipped by the inertia count.
        const double next = r.value + 2.0 * opts.tol * (1.0 + std::abs(r.value)) + opts.tol;
        const std::size_t below = count_below(H, next, opts);
        ++total.factorizations;
        if (below >= k) break;  // λ_k equals the current value (degenerate cluster)
        r = lowest_eig_above(H, next + opts.tol, opts, want_vector);
        total.iterations += r.telemetry.iterations;
        total.factorizations += r.telemetry.factorizations;
    }
    r.index = k;
    r.telemetry = total;
    return r;
}

SpectralWindowResult eigs_in_window(const SparseSymmetricOperator& H, double lo, double hi,
                                    const SolverOptions& opts, bool want_vectors) {
    SpectralWindowResult r;
    if (!(lo < hi)) return r;
    if (use_dense(H, opts)) {
        const auto d = dense_eig(H, want_vectors);
        Eigen::Index first = 0;
        while (first < d.values.size() && !(d.values[first] > lo)) ++first;
        Eigen::Index last = first;
        while (last < d.values.size() && d.values[last] < hi) ++last;
        fill_from_dense(r, H, d, first, last - first);
        r.count = static_cast<std::size_t>(last - first);
        return r;
    }
    r.telemetry.method = SolveMethod::iterative;
    ShiftedLdlt probe(H.matrix());
    probe.factorize(hi);
    const std::size_t below_hi = probe.negatives();
    // Eigenvalues <= lo: count strictly below lo plus a hair.
    probe.factorize(lo + inertia_margin(lo, opts.tol));
    const std::size_t upto_lo = probe.negatives();
    r.telemetry.factorizations = 2;
    const std::size_t c = below_hi > upto_lo ? below_hi - upto_lo : 0;
    r.count = c;
    if (c == 0) return r;
    if (c > opts.max_eigs) throw SolverError("eigenvalue count in window exceeds the solver budget");

    const double sigma = 0.5 * (lo + hi);
    ShiftedLdlt inv(H.matrix());
    inv.factorize(sigma);
    ++r.telemetry.factorizations;
    const Selector select = [lo, hi, c](const Ritz& z) -> std::optional<std::vector<int>> {
        std::vector<int> idx;
        for (std::size_t i = 0; i < z.lambda.size(); ++i)
            if (z.lambda[i] > lo && z.lambda[i] < hi) idx.push_back(static_cast<int>(i));
        if (idx.size() != c) return std::nullopt;
        return idx;
    };
    auto accept = [](const LanczosResult&) { return true; };
    auto lr = lanczos_with_retries(H, inv, sigma, opts, select, r.telemetry, accept, "eigs_in_window");
    r.values = std::move(lr.values);
    r.residuals = std::move(lr.residuals);
    if (want_vectors) r.vectors = std::move(lr.vectors);
    sort_result(r);
    return r;
}

FamilyTrack track_family(const GridSpec& grid, const PeriodicPotential& background,
                         std::span<const SingleSiteProfile> profiles, std::span<const double> t_grid,
                         std::pair<double, double> window, const SolverOptions& opts) {
    if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw InputError("t grid must be sorted");
    for (double t : t_grid)
        if (!(t >= 0.0 && t <= 1.0)) throw InputError("t grid must lie in [0,1]");
    FamilyTrack tr;
    tr.a = window.first;
    tr.b = window.second;
    const double lo = window.first + tol_gap;
    const double hi = window.second - tol_gap;
    for (double t : t_grid) {
        const auto H = assemble_interpolated(grid, background, t, profiles);
        tr.t.push_back(t);
        tr.in_window.push_back(eigs_in_window(H, lo, hi, opts, false).values);
    }
    return tr;
}

} // namespace iselab
