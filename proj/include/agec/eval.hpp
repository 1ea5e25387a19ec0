#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agec/corrector.hpp"
#include "agec/errors.hpp"
#include "agec/gesture.hpp"
#include "agec/linalg.hpp"
#include "agec/matrix.hpp"
#include "agec/pipeline.hpp"

namespace agec {

// Seven-way outcome taxonomy; exactly one event per prediction.
enum class PredictionEvent : int {
    corrected_error = 0,        // error flagged, pattern matched, rewritten to truth
    error_not_correctable = 1,  // error flagged and matched, but rewritten wrongly
    error_not_found = 2,        // error passed through unflagged
    error_ignored = 3,          // error flagged but no pattern matched
    changed_false_positive = 4, // correct prediction flagged and rewritten
    ignored_false_positive = 5, // correct prediction flagged but kept
    kept_correct = 6,           // correct prediction passed through
};

inline constexpr int kNumEvents = 7;

inline constexpr std::array<std::string_view, kNumEvents> kEventNames = {
    "corrected_err", "err_not_correctable", "err_not_found", "err_ignored",
    "changed_fp",    "ignored_fp",          "kept_correct"};

inline std::string_view to_string(PredictionEvent e) {
    return kEventNames[static_cast<int>(e)];
}

inline PredictionEvent event_from_string(std::string_view s) {
    for (int i = 0; i < kNumEvents; ++i)
        if (kEventNames[i] == s) return static_cast<PredictionEvent>(i);
    throw IoError("unknown event '" + std::string(s) + "'");
}

inline PredictionEvent classify_event(int truth, int y_pred,
                                      const CorrectionOutcome& outcome) {
    const bool base_error = y_pred != truth;
    if (base_error) {
        if (!outcome.flagged_error) return PredictionEvent::error_not_found;
        if (!outcome.matched_type) return PredictionEvent::error_ignored;
        return outcome.final_label == truth ? PredictionEvent::corrected_error
                                            : PredictionEvent::error_not_correctable;
    }
    if (!outcome.flagged_error) return PredictionEvent::kept_correct;
    return outcome.matched_type ? PredictionEvent::changed_false_positive
                                : PredictionEvent::ignored_false_positive;
}

// ---------------------------------------------------------------------------
// Threshold sweep. Detector scores and error-type predictions do not depend
// on delta, so they are computed once and only theta is retrained per point.

struct SweepPoint {
    double delta = 0.0;
    double theta = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    std::array<std::int64_t, kNumEvents> event_counts{};
    double base_accuracy = 0.0;
    double corrected_accuracy = 0.0;
    double accuracy_delta = 0.0;
};

// Per-sample state that is invariant across the sweep grid.
struct SweepSample {
    int truth = 0;
    int base_pred = 0;
    double score = 0.0;
    std::optional<ErrorType> sigma;  // absent when no type classifier exists
};

inline std::vector<SweepSample> prepare_sweep_samples(const CentroidCorrector& c,
                                                      const ErrorTypeClassifier* f,
                                                      const Matrix& features,
                                                      const std::vector<int>& truth,
                                                      const std::vector<int>& base_pred) {
    std::vector<SweepSample> out(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        SweepSample& s = out[i];
        s.truth = truth[i];
        s.base_pred = base_pred[i];
        s.score = detector_score(c, features.row(i));
        if (f != nullptr && !f->types().empty()) s.sigma = f->classify(features.row(i));
    }
    return out;
}

inline SweepPoint sweep_point_at(const CentroidCorrector& c,
                                 const std::vector<SweepSample>& samples, double delta) {
    SweepPoint p;
    p.delta = delta;
    p.theta = theta_for_delta(c, delta);
    std::int64_t errors = 0, flagged_errors = 0, correct = 0, flagged_correct = 0;
    std::int64_t base_right = 0, corrected_right = 0;
    for (const SweepSample& s : samples) {
        const bool flagged = s.score >= p.theta;
        CorrectionOutcome outcome;
        outcome.flagged_error = flagged;
        outcome.score = s.score;
        outcome.final_label = s.base_pred;
        if (flagged && s.sigma && s.base_pred == s.sigma->predicted) {
            outcome.final_label = s.sigma->truth;
            outcome.matched_type = *s.sigma;
        }
        const bool base_error = s.base_pred != s.truth;
        if (base_error) {
            ++errors;
            if (flagged) ++flagged_errors;
        } else {
            ++correct;
            ++base_right;
            if (flagged) ++flagged_correct;
        }
        if (outcome.final_label == s.truth) ++corrected_right;
        ++p.event_counts[static_cast<int>(classify_event(s.truth, s.base_pred, outcome))];
    }
    const auto n = static_cast<double>(samples.size());
    p.tpr = errors > 0 ? static_cast<double>(flagged_errors) / static_cast<double>(errors) : 0.0;
    p.fpr = correct > 0 ? static_cast<double>(flagged_correct) / static_cast<double>(correct) : 0.0;
    p.base_accuracy = n > 0 ? static_cast<double>(base_right) / n : 0.0;
    p.corrected_accuracy = n > 0 ? static_cast<double>(corrected_right) / n : 0.0;
    p.accuracy_delta = p.corrected_accuracy - p.base_accuracy;
    return p;
}

inline std::vector<SweepPoint> sweep(const CentroidCorrector& c,
                                     const ErrorTypeClassifier* f, const Matrix& features,
                                     const std::vector<int>& truth,
                                     const std::vector<int>& base_pred,
                                     const std::vector<double>& deltas) {
    for (double d : deltas)
        if (d < 0.0 || d > 1.0) throw ConfigError("sweep: deltas must lie in [0, 1]");
    const std::vector<SweepSample> samples =
        prepare_sweep_samples(c, f, features, truth, base_pred);
    std::vector<SweepPoint> out;
    out.reserve(deltas.size());
    for (double d : deltas) out.push_back(sweep_point_at(c, samples, d));
    return out;
}

inline std::vector<double> delta_grid(std::size_t points) {
    if (points < 2) throw ConfigError("delta grid needs at least 2 points");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

// ---------------------------------------------------------------------------
// Distance histograms: || W H (phi(x) - x_bar) || for the correct and error
// sets over shared bins.

struct DistanceHistogram {
    std::vector<double> edges;         // bins + 1
    std::vector<std::int64_t> count_correct;
    std::vector<std::int64_t> count_error;
    std::vector<double> correct_distances;
    std::vector<double> error_distances;
};

inline DistanceHistogram distance_histogram(const CentroidCorrector& c,
                                            const Matrix& correct_features,
                                            const Matrix& error_features,
                                            std::size_t bins = 40) {
    if (bins < 1) throw ConfigError("distance_histogram: need at least 1 bin");
    DistanceHistogram h;
    h.correct_distances.reserve(correct_features.rows());
    h.error_distances.reserve(error_features.rows());
    double max_d = 0.0;
    for (std::size_t i = 0; i < correct_features.rows(); ++i) {
        const double d = l2_norm(whitened_coords(c, correct_features.row(i)));
        h.correct_distances.push_back(d);
        max_d = std::max(max_d, d);
    }
    for (std::size_t i = 0; i < error_features.rows(); ++i) {
        const double d = l2_norm(whitened_coords(c, error_features.row(i)));
        h.error_distances.push_back(d);
        max_d = std::max(max_d, d);
    }
    if (max_d <= 0.0) max_d = 1.0;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = max_d * static_cast<double>(i) / static_cast<double>(bins);
    h.count_correct.assign(bins, 0);
    h.count_error.assign(bins, 0);
    auto bin_of = [&](double d) {
        auto b = static_cast<std::size_t>(d / max_d * static_cast<double>(bins));
        return std::min(b, bins - 1);
    };
    for (double d : h.correct_distances) ++h.count_correct[bin_of(d)];
    for (double d : h.error_distances) ++h.count_error[bin_of(d)];
    return h;
}

// ---------------------------------------------------------------------------
// Fisher-separability intrinsic dimension. The data is centered and
// whitened, projected to the unit sphere, and the mean pairwise
// inseparability p = P((x,y) > alpha) is inverted through the sphere
// asymptotic
//
//     p_alpha(n) = (1 - alpha^2)^((n-1)/2) / (alpha sqrt(2 pi (n-1)))
//
// by monotone bisection on n in [1, 1e4]. This formula is the single source
// of truth for the estimator. p = 0 reports the above-measurable-range
// sentinel (empty optional).

inline double sphere_separability(double alpha, double n) {
    return std::pow(1.0 - alpha * alpha, 0.5 * (n - 1.0)) /
           (alpha * std::sqrt(2.0 * std::numbers::pi * (n - 1.0)));
}

inline std::optional<double> intrinsic_dimension(const Matrix& data, double alpha = 0.8) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ContractError("intrinsic_dimension: alpha must be in (0, 1)");
    const std::size_t n_samples = data.rows();
    if (n_samples < 50)
        throw DegenerateDataError("intrinsic_dimension: need at least 50 samples, got " +
                                  std::to_string(n_samples));

    const PcaWhitening white = fit_pca_whitening(data);
    const std::size_t k = white.retained();
    Matrix sphere(n_samples, k);
    std::vector<bool> valid(n_samples, false);
    for (std::size_t i = 0; i < n_samples; ++i) {
        std::vector<double> u = project_whiten(white, data.row(i));
        const double nrm = l2_norm(u);
        if (nrm < 1e-15) continue;  // a point exactly at the centroid has no direction
        valid[i] = true;
        auto r = sphere.row(i);
        for (std::size_t j = 0; j < k; ++j) r[j] = u[j] / nrm;
    }

    std::int64_t pairs = 0, separable = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (!valid[i]) continue;
        for (std::size_t j = i + 1; j < n_samples; ++j) {
            if (!valid[j]) continue;
            ++pairs;
            if (dot(sphere.row(i), sphere.row(j)) > alpha) ++separable;
        }
    }
    if (pairs == 0)
        throw DegenerateDataError("intrinsic_dimension: no usable point pairs");
    const double p_mean = static_cast<double>(separable) / static_cast<double>(pairs);
    if (p_mean == 0.0) return std::nullopt;  // above measurable range

    double lo = 1.0 + 1e-9, hi = 1e4;
    if (p_mean >= sphere_separability(alpha, lo)) return lo;
    if (p_mean <= sphere_separability(alpha, hi)) return std::nullopt;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sphere_separability(alpha, mid) > p_mean)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Table-1 style grid: fit the base system once per row's training set and
// evaluate on all four datasets.

struct Table1Report {
    // rows: trained on base train, trained on new-user train
    // cols: base train, base test, new-user train, new-user test
    std::array<std::array<double, 4>, 2> accuracy{};
};

inline Table1Report table1_report(
    const std::function<BasePipeline(const Dataset&)>& trainer, const Dataset& base_train,
    const Dataset& base_test, const Dataset& new_user_train, const Dataset& new_user_test) {
    Table1Report report;
    const std::array<const Dataset*, 4> columns = {&base_train, &base_test,
                                                   &new_user_train, &new_user_test};
    const std::array<const Dataset*, 2> row_train = {&base_train, &new_user_train};
    for (std::size_t r = 0; r < 2; ++r) {
        const BasePipeline model = trainer(*row_train[r]);
        for (std::size_t c = 0; c < 4; ++c)
            report.accuracy[r][c] = model.evaluate(*columns[c]).accuracy;
    }
    return report;
}

}  // namespace agec
