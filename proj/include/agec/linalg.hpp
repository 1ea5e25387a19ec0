#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "agec/errors.hpp"
#include "agec/matrix.hpp"

namespace agec {

// Sample covariance with divisor N-1. Columns must already be centered by
// the caller.
inline Matrix covariance(const Matrix& data) {
    const std::size_t n_samples = data.rows();
    const std::size_t n = data.cols();
    if (n_samples < 2)
        throw DegenerateDataError("covariance: need at least 2 rows, got " +
                                  std::to_string(n_samples));
    Matrix cov(n, n);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto r = data.row(i);
        for (std::size_t a = 0; a < n; ++a) {
            const double ra = r[a];
            if (ra == 0.0) continue;
            for (std::size_t b = a; b < n; ++b) cov(a, b) += ra * r[b];
        }
    }
    const double inv = 1.0 / static_cast<double>(n_samples - 1);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) {
            cov(a, b) *= inv;
            cov(b, a) = cov(a, b);
        }
    return cov;
}

struct EigResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // row i is the eigenvector for values[i]
};

namespace detail {

inline double frobenius(const Matrix& m) {
    double s = 0.0;
    for (double x : m.values()) s += x * x;
    return std::sqrt(s);
}

inline double off_diagonal_frobenius(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

// Make the largest-magnitude entry of each row positive (first such entry
// on ties). Keeps serialized eigenvectors reproducible.
inline void fix_vector_signs(Matrix& rows) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        auto r = rows.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < r.size(); ++j)
            if (std::fabs(r[j]) > std::fabs(r[best])) best = j;
        if (r[best] < 0.0)
            for (double& x : r) x = -x;
    }
}

}  // namespace detail

// Symmetric eigendecomposition by cyclic Jacobi. Converges when the
// off-diagonal Frobenius norm drops below 1e-12 times the Frobenius norm of
// the input; at most 100 sweeps.
inline EigResult sym_eig(const Matrix& m) {
    const std::size_t n = m.rows();
    if (n == 0 || m.cols() != n)
        throw ContractError("sym_eig: matrix must be square and non-empty");
    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            max_abs = std::max(max_abs, std::fabs(m(i, j)));
            max_asym = std::max(max_asym, std::fabs(m(i, j) - m(j, i)));
        }
    if (max_asym > 1e-9 * std::max(1.0, max_abs))
        throw ContractError("sym_eig: input not symmetric (max asymmetry " +
                            std::to_string(max_asym) + ")");

    Matrix a = m;
    Matrix vt(n, n);
    for (std::size_t i = 0; i < n; ++i) vt(i, i) = 1.0;

    const double norm = detail::frobenius(m);
    const double threshold = 1e-12 * norm;

    int sweep = 0;
    if (norm > 0.0) {
        constexpr int kMaxSweeps = 100;
        for (sweep = 1; sweep <= kMaxSweeps; ++sweep) {
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const double apq = a(p, q);
                    if (apq == 0.0) continue;
                    const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                    const double t = (tau >= 0.0)
                                         ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                         : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;

                    const double app = a(p, p), aqq = a(q, q);
                    a(p, p) = app - t * apq;
                    a(q, q) = aqq + t * apq;
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    for (std::size_t k = 0; k < n; ++k) {
                        if (k == p || k == q) continue;
                        const double akp = a(k, p), akq = a(k, q);
                        a(k, p) = c * akp - s * akq;
                        a(p, k) = a(k, p);
                        a(k, q) = s * akp + c * akq;
                        a(q, k) = a(k, q);
                    }
                    auto vp = vt.row(p);
                    auto vq = vt.row(q);
                    for (std::size_t k = 0; k < n; ++k) {
                        const double xp = vp[k], xq = vq[k];
                        vp[k] = c * xp - s * xq;
                        vq[k] = s * xp + c * xq;
                    }
                }
            }
            if (detail::off_diagonal_frobenius(a) < threshold) break;
        }
        if (sweep > kMaxSweeps)
            throw NumericError("sym_eig: no convergence after " +
                               std::to_string(kMaxSweeps) + " sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a(order[i], order[i]);
        auto src = vt.row(order[i]);
        auto dst = out.vectors.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    detail::fix_vector_signs(out.vectors);
    return out;
}

// Frozen PCA + whitening artifacts: centroid, orthonormal components
// (rows), strictly positive eigenvalues in descending order, and the
// whitening diagonal 1/sqrt(lambda).
struct PcaWhitening {
    std::vector<double> mean;
    Matrix components;               // k x n
    std::vector<double> eigenvalues; // k, descending, > 0
    std::vector<double> whitening;   // k, 1/sqrt(eigenvalues)

    std::size_t input_dim() const noexcept { return mean.size(); }
    std::size_t retained() const noexcept { return eigenvalues.size(); }
};

// Fit PCA with whitening on raw (uncentered) data. Eigenpairs with
// lambda <= eigen_floor * lambda_1 are dropped, which handles the rank
// deficiency a high-degree polynomial lift always creates once the feature
// count exceeds the sample count.
//
// When n_features > n_samples the covariance eigenproblem is solved through
// the N x N Gram matrix instead of the n x n covariance; the retained
// eigenpairs are identical in exact arithmetic, and a unit test pins the
// two routes against each other.
inline PcaWhitening fit_pca_whitening(const Matrix& data, double eigen_floor = 1e-10) {
    const std::size_t n_samples = data.rows();
    const std::size_t n = data.cols();
    if (n_samples < 2)
        throw DegenerateDataError("fit_pca_whitening: need at least 2 samples");

    PcaWhitening model;
    model.mean = column_means(data);
    const Matrix centered = center_columns(data, model.mean);

    std::vector<double> values;
    Matrix vectors;  // rows, in feature space
    if (n <= n_samples) {
        EigResult eig = sym_eig(covariance(centered));
        values = std::move(eig.values);
        vectors = std::move(eig.vectors);
    } else {
        // Gram route: eigenvectors u of X Xt / (N-1) map to feature-space
        // components Xt u / sqrt((N-1) lambda).
        Matrix gram(n_samples, n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            auto ri = centered.row(i);
            for (std::size_t j = i; j < n_samples; ++j) {
                gram(i, j) = dot(ri, centered.row(j)) /
                             static_cast<double>(n_samples - 1);
                gram(j, i) = gram(i, j);
            }
        }
        EigResult eig = sym_eig(gram);
        values = std::move(eig.values);
        vectors = Matrix(values.size(), n);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] <= 0.0) continue;
            const double scale =
                1.0 / std::sqrt(static_cast<double>(n_samples - 1) * values[i]);
            auto u = eig.vectors.row(i);
            auto v = vectors.row(i);
            for (std::size_t s = 0; s < n_samples; ++s) {
                const double w = u[s] * scale;
                if (w == 0.0) continue;
                auto xs = centered.row(s);
                for (std::size_t j = 0; j < n; ++j) v[j] += w * xs[j];
            }
        }
    }

    const double lambda1 = values.empty() ? 0.0 : values[0];
    if (lambda1 <= 0.0)
        throw DegenerateDataError("fit_pca_whitening: data has no variance");

    const std::size_t k_max = std::min(n, n_samples - 1);
    std::size_t k = 0;
    while (k < values.size() && k < k_max && values[k] > eigen_floor * lambda1) ++k;
    if (k == 0)
        throw DegenerateDataError("fit_pca_whitening: all eigenvalues below floor");

    model.eigenvalues.assign(values.begin(), values.begin() + static_cast<long>(k));
    model.components = Matrix(k, n);
    for (std::size_t i = 0; i < k; ++i) {
        auto src = vectors.row(i);
        auto dst = model.components.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        // Renormalize: the Gram route loses a few ulps on the unit norm.
        const double nrm = l2_norm(dst);
        if (nrm > 0.0)
            for (double& x : dst) x /= nrm;
    }
    detail::fix_vector_signs(model.components);
    model.whitening.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        model.whitening[i] = 1.0 / std::sqrt(model.eigenvalues[i]);
    return model;
}

// Plain PCA projection (no whitening): u_i = (x - mean) . h_i.
inline std::vector<double> project(const PcaWhitening& model, std::span<const double> x,
                                   std::size_t n_components = 0) {
    if (x.size() != model.input_dim())
        throw ContractError("project: expected dimension " +
                            std::to_string(model.input_dim()) + ", got " +
                            std::to_string(x.size()));
    const std::size_t k = n_components == 0
                              ? model.retained()
                              : std::min(n_components, model.retained());
    std::vector<double> centered(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) centered[j] = x[j] - model.mean[j];
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i)
        out[i] = dot(model.components.row(i), centered);
    return out;
}

// Whitened projection: u_i = (x - mean) . h_i / sqrt(lambda_i).
inline std::vector<double> project_whiten(const PcaWhitening& model,
                                          std::span<const double> x) {
    std::vector<double> out = project(model, x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= model.whitening[i];
    return out;
}

inline Matrix project_whiten_rows(const PcaWhitening& model, const Matrix& data) {
    Matrix out(data.rows(), model.retained());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::vector<double> u = project_whiten(model, data.row(i));
        std::copy(u.begin(), u.end(), out.row(i).begin());
    }
    return out;
}

// Cholesky factorization of a symmetric positive-definite matrix; used for
// the ridge-regularized LDA solve.
class Cholesky {
public:
    explicit Cholesky(const Matrix& a) : n_(a.rows()), l_(a.rows(), a.rows()) {
        if (a.cols() != n_) throw ContractError("cholesky: matrix must be square");
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
                if (i == j) {
                    if (s <= 0.0)
                        throw NumericError("cholesky: matrix not positive definite");
                    l_(i, i) = std::sqrt(s);
                } else {
                    l_(i, j) = s / l_(j, j);
                }
            }
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> y(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * y[k];
            y[i] = s / l_(i, i);
        }
        for (std::size_t ii = n_; ii > 0; --ii) {
            const std::size_t i = ii - 1;
            double s = y[i];
            for (std::size_t k = i + 1; k < n_; ++k) s -= l_(k, i) * y[k];
            y[i] = s / l_(i, i);
        }
        return y;
    }

private:
    std::size_t n_;
    Matrix l_;
};

}  // namespace agec
