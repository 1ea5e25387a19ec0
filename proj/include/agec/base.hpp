#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "agec/errors.hpp"
#include "agec/linalg.hpp"
#include "agec/matrix.hpp"
#include "agec/poly.hpp"
#include "agec/rng.hpp"

namespace agec {

// Multi-class classifier interface. Implementations are deterministic after
// fit and safe to share for concurrent prediction.
class BaseModel {
public:
    virtual ~BaseModel() = default;
    virtual void fit(const Matrix& x, const std::vector<int>& y) = 0;
    virtual int predict(std::span<const double> x) const = 0;
    virtual std::string name() const = 0;

    std::vector<int> predict_batch(const Matrix& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
        return out;
    }
};

namespace detail {

inline void check_fit_shapes(const Matrix& x, const std::vector<int>& y) {
    if (x.rows() == 0) throw ContractError("fit: empty training set");
    if (y.size() != x.rows())
        throw ContractError("fit: labels size " + std::to_string(y.size()) +
                            " does not match " + std::to_string(x.rows()) + " rows");
}

inline std::vector<int> sorted_classes(const std::vector<int>& y) {
    std::set<int> s(y.begin(), y.end());
    return {s.begin(), s.end()};
}

inline std::map<int, std::size_t> class_counts(const std::vector<int>& y) {
    std::map<int, std::size_t> c;
    for (int v : y) ++c[v];
    return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// K-nearest neighbours. Vote ties break by smaller mean distance, then by
// smaller label.

class KnnModel final : public BaseModel {
public:
    KnnModel() = default;
    explicit KnnModel(std::size_t k) : k_(k) {}

    void fit(const Matrix& x, const std::vector<int>& y) override {
        detail::check_fit_shapes(x, y);
        if (k_ < 1) throw ContractError("knn: k must be >= 1");
        if (k_ > x.rows())
            throw ContractError("knn: k=" + std::to_string(k_) + " exceeds " +
                                std::to_string(x.rows()) + " training points");
        data_ = x;
        labels_ = y;
    }

    int predict(std::span<const double> x) const override {
        const std::size_t n = data_.rows();
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {l2_distance(data_.row(i), x), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k_), dist.end());

        std::map<int, std::pair<std::size_t, double>> votes;  // label -> (count, dist sum)
        for (std::size_t i = 0; i < k_; ++i) {
            auto& v = votes[labels_[dist[i].second]];
            v.first += 1;
            v.second += dist[i].first;
        }
        int best = -1;
        std::size_t best_count = 0;
        double best_mean = 0.0;
        for (const auto& [label, v] : votes) {
            const double mean = v.second / static_cast<double>(v.first);
            if (v.first > best_count ||
                (v.first == best_count && mean < best_mean)) {
                best = label;
                best_count = v.first;
                best_mean = mean;
            }
            // equal count and mean: map order already prefers the smaller label
        }
        return best;
    }

    std::string name() const override { return "knn"; }

    std::size_t k() const noexcept { return k_; }
    const Matrix& data() const noexcept { return data_; }
    const std::vector<int>& labels() const noexcept { return labels_; }

    void restore(std::size_t k, Matrix data, std::vector<int> labels) {
        k_ = k;
        data_ = std::move(data);
        labels_ = std::move(labels);
    }

private:
    std::size_t k_ = 5;
    Matrix data_;
    std::vector<int> labels_;
};

inline KnnModel fit_knn(const Matrix& train, const std::vector<int>& labels,
                        std::size_t k) {
    KnnModel m(k);
    m.fit(train, labels);
    return m;
}

// ---------------------------------------------------------------------------
// Linear discriminant analysis with a ridge-regularized pooled covariance:
// score_c(x) = x' S^-1 mu_c - mu_c' S^-1 mu_c / 2 + ln prior_c.

class LdaModel final : public BaseModel {
public:
    LdaModel() = default;
    explicit LdaModel(double ridge) : ridge_(ridge) {}

    void fit(const Matrix& x, const std::vector<int>& y) override {
        detail::check_fit_shapes(x, y);
        const std::size_t n = x.cols();
        classes_ = detail::sorted_classes(y);
        if (classes_.size() < 2) throw ContractError("lda: need at least 2 classes");
        auto counts = detail::class_counts(y);
        for (const auto& [label, count] : counts)
            if (count < 2)
                throw ContractError("lda: class " + std::to_string(label) +
                                    " has fewer than 2 samples");

        const std::size_t n_classes = classes_.size();
        means_ = Matrix(n_classes, n);
        std::vector<std::size_t> idx(n_classes);
        std::map<int, std::size_t> class_index;
        for (std::size_t c = 0; c < n_classes; ++c) class_index[classes_[c]] = c;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const std::size_t c = class_index[y[i]];
            auto mean = means_.row(c);
            auto r = x.row(i);
            for (std::size_t j = 0; j < n; ++j) mean[j] += r[j];
        }
        for (std::size_t c = 0; c < n_classes; ++c) {
            auto mean = means_.row(c);
            const double inv = 1.0 / static_cast<double>(counts[classes_[c]]);
            for (double& v : mean) v *= inv;
        }

        // pooled within-class covariance, divisor N - C
        Matrix pooled(n, n);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const std::size_t c = class_index[y[i]];
            auto mean = means_.row(c);
            auto r = x.row(i);
            std::vector<double> d(n);
            for (std::size_t j = 0; j < n; ++j) d[j] = r[j] - mean[j];
            for (std::size_t a = 0; a < n; ++a) {
                if (d[a] == 0.0) continue;
                for (std::size_t b = a; b < n; ++b) pooled(a, b) += d[a] * d[b];
            }
        }
        const double inv_dof =
            1.0 / static_cast<double>(x.rows() - n_classes > 0 ? x.rows() - n_classes : 1);
        double trace = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a; b < n; ++b) {
                pooled(a, b) *= inv_dof;
                pooled(b, a) = pooled(a, b);
            }
            trace += pooled(a, a);
        }
        const double lift = std::max(ridge_ * trace / static_cast<double>(n), 1e-12);
        for (std::size_t a = 0; a < n; ++a) pooled(a, a) += lift;

        Cholesky chol(pooled);
        alphas_ = Matrix(n_classes, n);
        betas_.resize(n_classes);
        const double total = static_cast<double>(x.rows());
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::vector<double> a = chol.solve(means_.row(c));
            std::copy(a.begin(), a.end(), alphas_.row(c).begin());
            const double prior = static_cast<double>(counts[classes_[c]]) / total;
            betas_[c] = -0.5 * dot(means_.row(c), a) + std::log(prior);
        }
    }

    std::vector<double> scores(std::span<const double> x) const {
        std::vector<double> s(classes_.size());
        for (std::size_t c = 0; c < classes_.size(); ++c)
            s[c] = dot(alphas_.row(c), x) + betas_[c];
        return s;
    }

    int predict(std::span<const double> x) const override {
        const std::vector<double> s = scores(x);
        std::size_t best = 0;
        for (std::size_t c = 1; c < s.size(); ++c)
            if (s[c] > s[best]) best = c;
        return classes_[best];
    }

    std::string name() const override { return "lda"; }

    double ridge() const noexcept { return ridge_; }
    const std::vector<int>& classes() const noexcept { return classes_; }
    const Matrix& means() const noexcept { return means_; }
    const Matrix& alphas() const noexcept { return alphas_; }
    const std::vector<double>& betas() const noexcept { return betas_; }

    void restore(double ridge, std::vector<int> classes, Matrix means, Matrix alphas,
                 std::vector<double> betas) {
        ridge_ = ridge;
        classes_ = std::move(classes);
        means_ = std::move(means);
        alphas_ = std::move(alphas);
        betas_ = std::move(betas);
    }

private:
    double ridge_ = 1e-3;
    std::vector<int> classes_;
    Matrix means_;   // per class
    Matrix alphas_;  // S^-1 mu_c per class
    std::vector<double> betas_;
};

inline LdaModel fit_lda(const Matrix& train, const std::vector<int>& labels,
                        double ridge = 1e-3) {
    LdaModel m(ridge);
    m.fit(train, labels);
    return m;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes. Per-class population variances are floored at
// var_floor_rel times the largest overall feature variance.

class GnbModel final : public BaseModel {
public:
    GnbModel() = default;
    explicit GnbModel(double var_floor_rel) : var_floor_rel_(var_floor_rel) {}

    void fit(const Matrix& x, const std::vector<int>& y) override {
        detail::check_fit_shapes(x, y);
        const std::size_t n = x.cols();
        classes_ = detail::sorted_classes(y);
        auto counts = detail::class_counts(y);
        for (const auto& [label, count] : counts)
            if (count < 2)
                throw ContractError("gnb: class " + std::to_string(label) +
                                    " has fewer than 2 samples");

        // overall per-feature variance sets the floor scale
        std::vector<double> overall_mean = column_means(x);
        double max_var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const double d = x(i, j) - overall_mean[j];
                s += d * d;
            }
            max_var = std::max(max_var, s / static_cast<double>(x.rows()));
        }
        double floor = var_floor_rel_ * max_var;
        if (floor <= 0.0) floor = 1e-12;

        const std::size_t n_classes = classes_.size();
        std::map<int, std::size_t> class_index;
        for (std::size_t c = 0; c < n_classes; ++c) class_index[classes_[c]] = c;
        means_ = Matrix(n_classes, n);
        vars_ = Matrix(n_classes, n);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            auto mean = means_.row(class_index[y[i]]);
            auto r = x.row(i);
            for (std::size_t j = 0; j < n; ++j) mean[j] += r[j];
        }
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double inv = 1.0 / static_cast<double>(counts[classes_[c]]);
            for (double& v : means_.row(c)) v *= inv;
        }
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const std::size_t c = class_index[y[i]];
            auto mean = means_.row(c);
            auto var = vars_.row(c);
            auto r = x.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double d = r[j] - mean[j];
                var[j] += d * d;
            }
        }
        log_priors_.resize(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double inv = 1.0 / static_cast<double>(counts[classes_[c]]);
            for (double& v : vars_.row(c)) v = std::max(v * inv, floor);
            log_priors_[c] = std::log(static_cast<double>(counts[classes_[c]]) /
                                      static_cast<double>(x.rows()));
        }
    }

    // ln prior_c + sum_j [ -ln(2 pi var)/2 - (x-mu)^2/(2 var) ]
    std::vector<double> log_likelihoods(std::span<const double> x) const {
        constexpr double kLog2Pi = 1.8378770664093453;
        std::vector<double> s(classes_.size());
        for (std::size_t c = 0; c < classes_.size(); ++c) {
            auto mean = means_.row(c);
            auto var = vars_.row(c);
            double acc = log_priors_[c];
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double d = x[j] - mean[j];
                acc -= 0.5 * (kLog2Pi + std::log(var[j]) + d * d / var[j]);
            }
            s[c] = acc;
        }
        return s;
    }

    int predict(std::span<const double> x) const override {
        const std::vector<double> s = log_likelihoods(x);
        std::size_t best = 0;
        for (std::size_t c = 1; c < s.size(); ++c)
            if (s[c] > s[best]) best = c;
        return classes_[best];
    }

    std::string name() const override { return "gnb"; }

    const std::vector<int>& classes() const noexcept { return classes_; }
    const Matrix& means() const noexcept { return means_; }
    const Matrix& vars() const noexcept { return vars_; }
    const std::vector<double>& log_priors() const noexcept { return log_priors_; }
    double var_floor_rel() const noexcept { return var_floor_rel_; }

    void restore(double rel, std::vector<int> classes, Matrix means, Matrix vars,
                 std::vector<double> log_priors) {
        var_floor_rel_ = rel;
        classes_ = std::move(classes);
        means_ = std::move(means);
        vars_ = std::move(vars);
        log_priors_ = std::move(log_priors);
    }

private:
    double var_floor_rel_ = 1e-9;
    std::vector<int> classes_;
    Matrix means_;
    Matrix vars_;
    std::vector<double> log_priors_;
};

inline GnbModel fit_gnb(const Matrix& train, const std::vector<int>& labels,
                        double var_floor_rel = 1e-9) {
    GnbModel m(var_floor_rel);
    m.fit(train, labels);
    return m;
}

// ---------------------------------------------------------------------------
// One-vs-rest linear SVM trained by Pegasos-style hinge subgradient descent
// with step 1/(lambda t). Features are centered internally; the bias is an
// augmented constant feature on the centered data.

struct SvmParams {
    double lambda = 1e-4;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;
};

class LinearSvmOvr final : public BaseModel {
public:
    LinearSvmOvr() = default;
    explicit LinearSvmOvr(SvmParams params) : params_(params) {}

    void fit(const Matrix& x, const std::vector<int>& y) override {
        detail::check_fit_shapes(x, y);
        const std::size_t n = x.cols();
        const std::size_t n_samples = x.rows();
        classes_ = detail::sorted_classes(y);
        if (classes_.size() < 2)
            throw ContractError("linear_svm: need at least 2 classes");

        mean_ = column_means(x);
        Matrix centered = center_columns(x, mean_);

        weights_ = Matrix(classes_.size(), n);
        biases_.assign(classes_.size(), 0.0);
        for (std::size_t c = 0; c < classes_.size(); ++c) {
            std::vector<double> w(n + 1, 0.0);  // last entry is the bias weight
            std::uint64_t t = 0;
            for (std::size_t epoch = 0; epoch < params_.epochs; ++epoch) {
                Rng rng = Rng::keyed(params_.seed, 0x53564dULL, c, epoch);
                for (std::size_t i : rng.permutation(n_samples)) {
                    ++t;
                    const double target = (y[i] == classes_[c]) ? 1.0 : -1.0;
                    auto r = centered.row(i);
                    const double margin = target * (dot({w.data(), n}, r) + w[n]);
                    const double decay = 1.0 - 1.0 / static_cast<double>(t);
                    for (double& v : w) v *= decay;
                    if (margin < 1.0) {
                        const double step =
                            target / (params_.lambda * static_cast<double>(t));
                        for (std::size_t j = 0; j < n; ++j) w[j] += step * r[j];
                        w[n] += step;
                    }
                }
            }
            std::copy(w.begin(), w.end() - 1, weights_.row(c).begin());
            biases_[c] = w[n];
        }
    }

    double margin(std::span<const double> x, std::size_t class_index) const {
        double s = biases_[class_index];
        auto w = weights_.row(class_index);
        for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * (x[j] - mean_[j]);
        return s;
    }

    int predict(std::span<const double> x) const override {
        std::size_t best = 0;
        double best_margin = margin(x, 0);
        for (std::size_t c = 1; c < classes_.size(); ++c) {
            const double m = margin(x, c);
            if (m > best_margin) {
                best = c;
                best_margin = m;
            }
        }
        return classes_[best];
    }

    std::string name() const override { return "linear_svm"; }

    const SvmParams& params() const noexcept { return params_; }
    const std::vector<int>& classes() const noexcept { return classes_; }
    const Matrix& weights() const noexcept { return weights_; }
    const std::vector<double>& biases() const noexcept { return biases_; }
    const std::vector<double>& feature_mean() const noexcept { return mean_; }

    void restore(SvmParams params, std::vector<int> classes, Matrix weights,
                 std::vector<double> biases, std::vector<double> mean) {
        params_ = params;
        classes_ = std::move(classes);
        weights_ = std::move(weights);
        biases_ = std::move(biases);
        mean_ = std::move(mean);
    }

private:
    SvmParams params_;
    std::vector<int> classes_;
    Matrix weights_;  // per class
    std::vector<double> biases_;
    std::vector<double> mean_;
};

inline LinearSvmOvr fit_linear_svm_ovr(const Matrix& train, const std::vector<int>& labels,
                                       double lambda = 1e-4, std::size_t epochs = 30,
                                       std::uint64_t seed = 1) {
    LinearSvmOvr m(SvmParams{lambda, epochs, seed});
    m.fit(train, labels);
    return m;
}

// ---------------------------------------------------------------------------
// Polynomial SVM by explicit lifting: build_poly_map -> lift -> per-feature
// standardization -> one-vs-rest linear SVM.

class PolySvmModel final : public BaseModel {
public:
    PolySvmModel() = default;
    PolySvmModel(std::size_t degree, SvmParams params) : degree_(degree), params_(params) {}

    void fit(const Matrix& x, const std::vector<int>& y) override {
        if (degree_ > 5) throw ContractError("poly_svm: degree must be <= 5");
        map_ = build_poly_map(x.cols(), degree_);
        if (map_.output_dim() > 1'000'000)
            throw CapacityError("poly_svm: lifted dimension exceeds 1e6");
        Matrix lifted = lift_rows(map_, x);

        scale_mean_ = column_means(lifted);
        scale_.assign(map_.output_dim(), 1.0);
        for (std::size_t j = 0; j < map_.output_dim(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < lifted.rows(); ++i) {
                const double d = lifted(i, j) - scale_mean_[j];
                s += d * d;
            }
            const double sd =
                std::sqrt(s / static_cast<double>(lifted.rows() > 1 ? lifted.rows() - 1 : 1));
            scale_[j] = sd > 0.0 ? 1.0 / sd : 1.0;
        }
        for (std::size_t i = 0; i < lifted.rows(); ++i) {
            auto r = lifted.row(i);
            for (std::size_t j = 0; j < map_.output_dim(); ++j)
                r[j] = (r[j] - scale_mean_[j]) * scale_[j];
        }
        svm_ = LinearSvmOvr(params_);
        svm_.fit(lifted, y);
    }

    int predict(std::span<const double> x) const override {
        std::vector<double> lifted = lift(map_, x);
        for (std::size_t j = 0; j < lifted.size(); ++j)
            lifted[j] = (lifted[j] - scale_mean_[j]) * scale_[j];
        return svm_.predict(lifted);
    }

    std::string name() const override { return "poly_svm"; }

    std::size_t degree() const noexcept { return degree_; }
    const SvmParams& params() const noexcept { return params_; }
    const PolyFeatureMap& map() const noexcept { return map_; }
    const std::vector<double>& scale_mean() const noexcept { return scale_mean_; }
    const std::vector<double>& scale() const noexcept { return scale_; }
    const LinearSvmOvr& inner() const noexcept { return svm_; }

    void restore(std::size_t degree, SvmParams params, PolyFeatureMap map,
                 std::vector<double> scale_mean, std::vector<double> scale,
                 LinearSvmOvr svm) {
        degree_ = degree;
        params_ = params;
        map_ = std::move(map);
        scale_mean_ = std::move(scale_mean);
        scale_ = std::move(scale);
        svm_ = std::move(svm);
    }

private:
    std::size_t degree_ = 2;
    SvmParams params_;
    PolyFeatureMap map_;
    std::vector<double> scale_mean_;
    std::vector<double> scale_;
    LinearSvmOvr svm_;
};

inline PolySvmModel fit_poly_svm(const Matrix& train, const std::vector<int>& labels,
                                 std::size_t degree, double lambda = 1e-4,
                                 std::size_t epochs = 30, std::uint64_t seed = 1) {
    PolySvmModel m(degree, SvmParams{lambda, epochs, seed});
    m.fit(train, labels);
    return m;
}

// ---------------------------------------------------------------------------

struct EvalResult {
    double accuracy = 0.0;
    Matrix confusion;  // indexed (true, predicted)
    std::size_t n = 0;
};

inline EvalResult evaluate(const BaseModel& model, const Matrix& x,
                           const std::vector<int>& y, int n_classes) {
    EvalResult r;
    r.n = x.rows();
    r.confusion = Matrix(static_cast<std::size_t>(n_classes),
                         static_cast<std::size_t>(n_classes));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const int pred = model.predict(x.row(i));
        r.confusion(static_cast<std::size_t>(y[i]), static_cast<std::size_t>(pred)) += 1.0;
        if (pred == y[i]) ++correct;
    }
    r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(r.n);
    return r;
}

}  // namespace agec
