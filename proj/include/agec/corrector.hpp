#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agec/base.hpp"
#include "agec/errors.hpp"
#include "agec/gesture.hpp"
#include "agec/linalg.hpp"
#include "agec/matrix.hpp"
#include "agec/pipeline.hpp"
#include "agec/poly.hpp"
#include "agec/rng.hpp"

namespace agec {

// A confusion pattern: true label `truth` was predicted as `predicted`.
struct ErrorType {
    int truth = 0;
    int predicted = 0;

    friend bool operator==(const ErrorType&, const ErrorType&) = default;
    friend auto operator<=>(const ErrorType&, const ErrorType&) = default;
};

// Frozen artifacts of corrector training: the feature lift, the correct-set
// centroid in lifted space, PCA whitening fitted on the centered correct
// set, the normalized error-centre direction, and the decision boundary
// theta = theta_min + delta * (theta_max - theta_min).
struct CentroidCorrector {
    PolyFeatureMap map;
    std::vector<double> correct_centroid;  // lifted-space centroid of the correct set
    PcaWhitening pca;
    std::vector<double> error_direction;  // unit vector u*
    double theta_min = 0.0;
    double theta_max = 0.0;
    double delta = 0.0;
    double theta = 0.0;

    std::size_t input_dim() const noexcept { return map.input_dim; }
};

struct DetectResult {
    bool flagged = false;
    double score = 0.0;
};

struct CorrectionOutcome {
    int final_label = 0;
    bool flagged_error = false;
    std::optional<ErrorType> matched_type;
    double score = 0.0;
};

// Split a labelled dataset by base-model correctness. Error samples carry
// their confusion tag (truth, prediction). Throws CorrectorNotNeeded when
// the base model makes no errors at all.
struct CorrectnessSplit {
    Dataset correct;
    Dataset errors;
    std::vector<ErrorType> error_tags;  // one per error sample
};

inline CorrectnessSplit split_by_correctness(const BasePipeline& base,
                                             const Dataset& data) {
    std::vector<GestureSample> correct, errors;
    std::vector<ErrorType> tags;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const GestureSample& s = data[i];
        const int pred = base.predict_flat(data.flat().row(i));
        const int truth = static_cast<int>(s.label);
        if (pred == truth) {
            correct.push_back(s);
        } else {
            errors.push_back(s);
            tags.push_back(ErrorType{truth, pred});
        }
    }
    if (tags.empty()) throw CorrectorNotNeeded();
    return CorrectnessSplit{Dataset(std::move(correct)), Dataset(std::move(errors)),
                            std::move(tags)};
}

namespace corrector_detail {

// Whitened coordinates of the lifted, centroid-centered vector:
// W H (phi(v) - x_bar).
inline std::vector<double> whiten_lifted(const CentroidCorrector& c,
                                         std::span<const double> lifted) {
    std::vector<double> centered(lifted.size());
    for (std::size_t j = 0; j < lifted.size(); ++j)
        centered[j] = lifted[j] - c.correct_centroid[j];
    // The PCA was fitted on already-centered data, so its own mean is ~0 but
    // is still applied for exactness.
    return project_whiten(c.pca, centered);
}

}  // namespace corrector_detail

inline std::vector<double> whitened_coords(const CentroidCorrector& c,
                                           std::span<const double> v) {
    if (v.size() != c.input_dim())
        throw ContractError("corrector: expected input dimension " +
                            std::to_string(c.input_dim()));
    return corrector_detail::whiten_lifted(c, lift(c.map, v));
}

inline double detector_score(const CentroidCorrector& c, std::span<const double> v) {
    const std::vector<double> u = whitened_coords(c, v);
    return dot(c.error_direction, u);
}

// Centroid-classifier error flag: score = (u*, W H (phi(v) - x_bar)),
// flagged when score >= theta.
inline DetectResult detect(const CentroidCorrector& c, std::span<const double> v) {
    DetectResult r;
    r.score = detector_score(c, v);
    r.flagged = r.score >= c.theta;
    return r;
}

inline double theta_for_delta(const CentroidCorrector& c, double delta) {
    return c.theta_min + delta * (c.theta_max - c.theta_min);
}

// Train the centroid error detector on correct-set features X and
// error-set features X* (rows are the base model's PC feature vectors):
// lift both sets, center on the correct-set centroid, fit PCA + whitening
// on the centered correct set only, take the normalized whitened error
// centre as u*, and place theta between theta_min (min error score) and
// theta_max (max score over both sets).
inline CentroidCorrector train_corrector(const Matrix& correct_features,
                                         const Matrix& error_features,
                                         PolyFeatureMap map, double delta,
                                         double eigen_floor = 1e-10) {
    if (correct_features.rows() < 2)
        throw DegenerateDataError("train_corrector: need at least 2 correct samples");
    if (error_features.rows() < 1)
        throw DegenerateDataError("train_corrector: need at least 1 error sample");
    if (delta < 0.0 || delta > 1.0)
        throw ConfigError("train_corrector: delta must be in [0, 1]");
    if (correct_features.cols() != map.input_dim ||
        error_features.cols() != map.input_dim)
        throw ContractError("train_corrector: feature dimension does not match map");

    CentroidCorrector c;
    c.map = std::move(map);
    c.delta = delta;

    Matrix correct_lifted = lift_rows(c.map, correct_features);
    Matrix error_lifted = lift_rows(c.map, error_features);

    c.correct_centroid = column_means(correct_lifted);
    Matrix correct_centered = center_columns(correct_lifted, c.correct_centroid);
    Matrix error_centered = center_columns(error_lifted, c.correct_centroid);

    c.pca = fit_pca_whitening(correct_centered, eigen_floor);

    Matrix correct_w = project_whiten_rows(c.pca, correct_centered);
    Matrix error_w = project_whiten_rows(c.pca, error_centered);

    std::vector<double> error_centre = column_means(error_w);
    const double norm = l2_norm(error_centre);
    if (norm < 1e-12)
        throw DegenerateDataError(
            "train_corrector: error centre coincides with the correct centroid");
    c.error_direction.resize(error_centre.size());
    for (std::size_t i = 0; i < error_centre.size(); ++i)
        c.error_direction[i] = error_centre[i] / norm;

    double theta_min = std::numeric_limits<double>::infinity();
    double theta_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < error_w.rows(); ++i) {
        const double s = dot(c.error_direction, error_w.row(i));
        theta_min = std::min(theta_min, s);
        theta_max = std::max(theta_max, s);
    }
    for (std::size_t i = 0; i < correct_w.rows(); ++i)
        theta_max = std::max(theta_max, dot(c.error_direction, correct_w.row(i)));
    c.theta_min = theta_min;
    c.theta_max = theta_max;
    c.theta = theta_for_delta(c, delta);
    return c;
}

// ---------------------------------------------------------------------------
// Error-type classifier: LDA over confusion patterns with at least
// `min_class` samples. A single surviving type degenerates to a constant
// classifier; samples of dropped singleton types are excluded and counted.

class ErrorTypeClassifier {
public:
    ErrorTypeClassifier() = default;

    const std::vector<ErrorType>& types() const noexcept { return types_; }
    std::size_t dropped_samples() const noexcept { return dropped_samples_; }
    std::size_t dropped_types() const noexcept { return dropped_types_; }
    bool constant() const noexcept { return types_.size() == 1; }
    const LdaModel& lda() const { return lda_; }

    ErrorType classify(std::span<const double> v) const {
        if (types_.empty())
            throw ContractError("error-type classifier has no classes");
        if (types_.size() == 1) return types_[0];
        return types_[static_cast<std::size_t>(lda_.predict(v))];
    }

    void restore(std::vector<ErrorType> types, LdaModel lda, std::size_t dropped_samples,
                 std::size_t dropped_types) {
        types_ = std::move(types);
        lda_ = std::move(lda);
        dropped_samples_ = dropped_samples;
        dropped_types_ = dropped_types;
    }

    friend ErrorTypeClassifier train_error_types(const Matrix&,
                                                 const std::vector<ErrorType>&,
                                                 std::size_t, double);

private:
    std::vector<ErrorType> types_;  // class index -> confusion pattern
    LdaModel lda_;
    std::size_t dropped_samples_ = 0;
    std::size_t dropped_types_ = 0;
};

inline ErrorTypeClassifier train_error_types(const Matrix& error_features,
                                             const std::vector<ErrorType>& tags,
                                             std::size_t min_class = 2,
                                             double ridge = 1e-3) {
    if (error_features.rows() != tags.size())
        throw ContractError("train_error_types: features/tags size mismatch");
    std::map<ErrorType, std::size_t> counts;
    for (const ErrorType& t : tags) ++counts[t];

    ErrorTypeClassifier f;
    for (const auto& [type, count] : counts) {
        if (count >= min_class) {
            f.types_.push_back(type);
        } else {
            ++f.dropped_types_;
            f.dropped_samples_ += count;
        }
    }
    if (f.types_.empty())
        throw NoErrorTypes("no error type reached the minimum class size of " +
                           std::to_string(min_class));
    if (f.types_.size() == 1) return f;

    std::map<ErrorType, int> class_of;
    for (std::size_t i = 0; i < f.types_.size(); ++i) class_of[f.types_[i]] = static_cast<int>(i);
    std::vector<std::vector<double>> rows;
    std::vector<int> classes;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        auto it = class_of.find(tags[i]);
        if (it == class_of.end()) continue;
        auto r = error_features.row(i);
        rows.emplace_back(r.begin(), r.end());
        classes.push_back(it->second);
    }
    f.lda_ = LdaModel(ridge);
    f.lda_.fit(Matrix::from_rows(rows), classes);
    return f;
}

// ---------------------------------------------------------------------------
// Deployment-time correction: flag with the centroid classifier; when
// flagged and the live prediction matches the classified pattern's
// predicted side, rewrite it to the pattern's true side.

inline CorrectionOutcome correct_prediction(const CentroidCorrector& c,
                                            const ErrorTypeClassifier* f,
                                            std::span<const double> v, int y_pred) {
    const DetectResult d = detect(c, v);
    CorrectionOutcome out;
    out.flagged_error = d.flagged;
    out.score = d.score;
    out.final_label = y_pred;
    if (!d.flagged || f == nullptr || f->types().empty()) return out;
    const ErrorType sigma = f->classify(v);
    if (y_pred == sigma.predicted) {
        out.final_label = sigma.truth;
        out.matched_type = sigma;
    }
    return out;
}

struct LatencyStats {
    double median_ms = 0.0;
    double p99_ms = 0.0;
    double mean_ms = 0.0;
    std::size_t calls = 0;
};

// End-to-end per-call latency of correct_prediction over random inputs.
inline LatencyStats correction_latency_probe(const CentroidCorrector& c,
                                             const ErrorTypeClassifier* f,
                                             std::size_t sample_count,
                                             std::uint64_t seed = 1,
                                             int n_labels = kNumLabels) {
    using clock = std::chrono::steady_clock;
    Rng rng(seed);
    const std::size_t n = c.input_dim();
    std::vector<double> v(n);
    std::vector<double> elapsed_ns(sample_count);
    volatile double sink = 0.0;  // keep the call from being optimized out
    for (std::size_t i = 0; i < sample_count; ++i) {
        for (double& x : v) x = rng.uniform(-2.0, 2.0);
        const int y_pred = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_labels)));
        const auto t0 = clock::now();
        CorrectionOutcome out = correct_prediction(c, f, v, y_pred);
        const auto t1 = clock::now();
        sink = sink + out.score;
        elapsed_ns[i] =
            static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    (void)sink;
    std::sort(elapsed_ns.begin(), elapsed_ns.end());
    LatencyStats stats;
    stats.calls = sample_count;
    stats.median_ms = elapsed_ns[sample_count / 2] * 1e-6;
    stats.p99_ms = elapsed_ns[std::min(sample_count - 1,
                                       static_cast<std::size_t>(
                                           static_cast<double>(sample_count) * 0.99))] *
                   1e-6;
    double total = 0.0;
    for (double e : elapsed_ns) total += e;
    stats.mean_ms = total / static_cast<double>(sample_count) * 1e-6;
    return stats;
}

}  // namespace agec
