#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "agec/corrector.hpp"
#include "agec/rng.hpp"
#include "agec/synth.hpp"

using namespace agec;

namespace {

Matrix gaussian_blob(Rng& rng, std::size_t n, std::size_t dim, double center0,
                     double sigma = 1.0) {
    Matrix m(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, 0) = center0 + sigma * rng.normal();
        for (std::size_t j = 1; j < dim; ++j) m(i, j) = sigma * rng.normal();
    }
    return m;
}

// Planted geometry: isotropic correct set at the origin, error set displaced
// six sigma along the first axis, identity (degree-1) lift.
struct Planted {
    Matrix correct;
    Matrix errors;
    CentroidCorrector corrector;

    explicit Planted(double delta) {
        Rng rng(8080);
        correct = gaussian_blob(rng, 500, 10, 0.0);
        errors = gaussian_blob(rng, 50, 10, 6.0);
        corrector = train_corrector(correct, errors, build_poly_map(10, 1), delta);
    }

    double tpr() const {
        std::size_t flagged = 0;
        for (std::size_t i = 0; i < errors.rows(); ++i)
            if (detect(corrector, errors.row(i)).flagged) ++flagged;
        return static_cast<double>(flagged) / static_cast<double>(errors.rows());
    }

    double fpr() const {
        std::size_t flagged = 0;
        for (std::size_t i = 0; i < correct.rows(); ++i)
            if (detect(corrector, correct.row(i)).flagged) ++flagged;
        return static_cast<double>(flagged) / static_cast<double>(correct.rows());
    }
};

}  // namespace

TEST_CASE("split_by_correctness partitions and signals the no-error case") {
    SynthConfig config;
    config.users = 5;
    config.samples_per_gesture_per_user = 8;
    const SynthOutput out = generate(config);

    BasePipelineConfig bc;
    bc.model = "knn";
    bc.knn_k = 1;
    BasePipeline base(bc);
    base.fit(out.base_train);

    // 1-NN is perfect on its own training set
    CHECK_THROWS_AS(split_by_correctness(base, out.base_train), CorrectorNotNeeded);

    const CorrectnessSplit split = split_by_correctness(base, out.new_user_train);
    CHECK(split.correct.size() + split.errors.size() == out.new_user_train.size());
    CHECK(split.error_tags.size() == split.errors.size());
    for (const ErrorType& t : split.error_tags) CHECK(t.truth != t.predicted);
}

TEST_CASE("injected 10% label corruption lands exactly in the error set") {
    SynthConfig config;
    config.users = 5;
    config.samples_per_gesture_per_user = 8;
    const SynthOutput out = generate(config);

    BasePipelineConfig bc;
    bc.model = "knn";
    bc.knn_k = 1;
    BasePipeline base(bc);
    base.fit(out.base_train);

    std::vector<GestureSample> corrupted = out.base_train.samples();
    const std::size_t n_corrupt = corrupted.size() / 10;
    for (std::size_t i = 0; i < n_corrupt; ++i) {
        auto& s = corrupted[i * 10];
        s.label = static_cast<GestureLabel>((static_cast<int>(s.label) + 1) % kNumLabels);
    }
    const CorrectnessSplit split = split_by_correctness(base, Dataset(corrupted));
    CHECK(split.errors.size() == n_corrupt);
}

TEST_CASE("planted geometry: oracle-checked detector behaviour") {
    // NOTE: with theta_min = min error score and theta_max = max score over
    // the union, delta = 0.5 puts theta mid-way through the error score
    // range, so the training TPR there is ~0.5 by symmetry, not ~1. The
    // strong operating point guaranteed by construction is delta = 0.
    Planted at_zero(0.0);
    CHECK(at_zero.tpr() == 1.0);
    CHECK(at_zero.fpr() <= 0.05);  // oracle run: 0 of 500 flagged

    Planted at_half(0.5);
    CHECK(at_half.tpr() >= 0.3);
    CHECK(at_half.tpr() <= 0.7);
    CHECK(at_half.fpr() == 0.0);

    Planted at_one(1.0);
    // only the max-scoring point(s) reach theta_max; flagging uses >=
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < at_one.errors.rows(); ++i)
        if (detect(at_one.corrector, at_one.errors.row(i)).flagged) ++flagged;
    for (std::size_t i = 0; i < at_one.correct.rows(); ++i)
        if (detect(at_one.corrector, at_one.correct.row(i)).flagged) ++flagged;
    CHECK(flagged == 1);

    // u* points from the correct centroid toward the planted error centre
    CHECK(at_zero.corrector.error_direction[0] >= 0.95);
}

TEST_CASE("detector score is linear in the direction and checks dimensions") {
    Planted p(0.5);

    // the lifted correct centroid itself scores exactly zero
    std::vector<double> centroid = p.corrector.correct_centroid;
    CHECK(detector_score(p.corrector, centroid) == Catch::Approx(0.0).margin(1e-9));

    std::vector<double> v(10, 0.0);
    v[0] = 18.0;  // three times the planted displacement
    const double score = detector_score(p.corrector, v);
    CHECK(score >= p.corrector.theta_max);
    CHECK(detect(p.corrector, v).flagged);

    CentroidCorrector negated = p.corrector;
    for (double& x : negated.error_direction) x = -x;
    CHECK(detector_score(negated, v) == Catch::Approx(-score));

    std::vector<double> short_v(9, 0.0);
    CHECK_THROWS_AS(detect(p.corrector, short_v), ContractError);
}

TEST_CASE("train_corrector validates its inputs") {
    Rng rng(5);
    Matrix correct = gaussian_blob(rng, 40, 4, 0.0);
    Matrix errors = gaussian_blob(rng, 10, 4, 5.0);
    CHECK_THROWS_AS(train_corrector(correct, errors, build_poly_map(4, 2), 1.5),
                    ConfigError);
    CHECK_THROWS_AS(train_corrector(correct, errors, build_poly_map(5, 2), 0.5),
                    ContractError);
    Matrix empty_err(0, 4);
    CHECK_THROWS_AS(train_corrector(correct, empty_err, build_poly_map(4, 2), 0.5),
                    DegenerateDataError);

    // error centre at the correct centroid has no direction
    CHECK_THROWS_AS(train_corrector(correct, correct, build_poly_map(4, 1), 0.5),
                    DegenerateDataError);
}

TEST_CASE("error-type classifier: constant, separated clusters, singletons") {
    Rng rng(99);

    // a single qualifying type degenerates to a constant
    Matrix one_type = gaussian_blob(rng, 6, 3, 0.0);
    std::vector<ErrorType> tags(6, ErrorType{0, 1});
    ErrorTypeClassifier constant = train_error_types(one_type, tags);
    CHECK(constant.constant());
    CHECK(constant.classify(one_type.row(0)) == ErrorType{0, 1});

    // two well-separated clusters: leave-one-out accuracy >= 0.9
    Matrix a = gaussian_blob(rng, 20, 3, 0.0, 0.5);
    Matrix b = gaussian_blob(rng, 20, 3, 6.0, 0.5);
    std::vector<std::vector<double>> rows;
    std::vector<ErrorType> two_tags;
    for (std::size_t i = 0; i < 20; ++i) {
        rows.emplace_back(a.row(i).begin(), a.row(i).end());
        two_tags.push_back(ErrorType{0, 1});
    }
    for (std::size_t i = 0; i < 20; ++i) {
        rows.emplace_back(b.row(i).begin(), b.row(i).end());
        two_tags.push_back(ErrorType{2, 3});
    }
    std::size_t loo_right = 0;
    for (std::size_t held = 0; held < rows.size(); ++held) {
        std::vector<std::vector<double>> train_rows;
        std::vector<ErrorType> train_tags;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == held) continue;
            train_rows.push_back(rows[i]);
            train_tags.push_back(two_tags[i]);
        }
        ErrorTypeClassifier f = train_error_types(Matrix::from_rows(train_rows), train_tags);
        if (f.classify(rows[held]) == two_tags[held]) ++loo_right;
    }
    CHECK(static_cast<double>(loo_right) / static_cast<double>(rows.size()) >= 0.9);

    // singleton types are dropped and counted
    rows.emplace_back(std::vector<double>{9.0, 9.0, 9.0});
    two_tags.push_back(ErrorType{4, 0});
    ErrorTypeClassifier dropped = train_error_types(Matrix::from_rows(rows), two_tags);
    CHECK(dropped.types().size() == 2);
    CHECK(dropped.dropped_types() == 1);
    CHECK(dropped.dropped_samples() == 1);

    // nothing qualifies
    Matrix few = gaussian_blob(rng, 2, 3, 0.0);
    std::vector<ErrorType> few_tags = {ErrorType{0, 1}, ErrorType{2, 1}};
    CHECK_THROWS_AS(train_error_types(few, few_tags), NoErrorTypes);
}

TEST_CASE("correct_prediction follows the rewrite rule") {
    Planted p(0.5);
    Rng type_rng(1);
    Matrix type_features = gaussian_blob(type_rng, 6, 10, 6.0);  // near the errors
    std::vector<ErrorType> tags(6, ErrorType{0, 1});
    ErrorTypeClassifier f = train_error_types(type_features, tags);

    std::vector<double> flagged_v(10, 0.0);
    flagged_v[0] = 12.0;  // far along the error direction
    REQUIRE(detect(p.corrector, flagged_v).flagged);

    // flagged and the live prediction matches sigma's predicted side
    CorrectionOutcome hit = correct_prediction(p.corrector, &f, flagged_v, 1);
    CHECK(hit.flagged_error);
    CHECK(hit.final_label == 0);
    REQUIRE(hit.matched_type.has_value());
    CHECK(*hit.matched_type == ErrorType{0, 1});

    // flagged but the prediction does not match the pattern
    CorrectionOutcome miss = correct_prediction(p.corrector, &f, flagged_v, 2);
    CHECK(miss.flagged_error);
    CHECK(miss.final_label == 2);
    CHECK(!miss.matched_type.has_value());

    // not flagged: the prediction passes through untouched
    std::vector<double> calm_v(10, 0.0);
    calm_v[0] = -2.0;
    REQUIRE(!detect(p.corrector, calm_v).flagged);
    CorrectionOutcome keep = correct_prediction(p.corrector, &f, calm_v, 1);
    CHECK(!keep.flagged_error);
    CHECK(keep.final_label == 1);
    CHECK(!keep.matched_type.has_value());

    // purity: the same inputs give the same outcome
    CorrectionOutcome again = correct_prediction(p.corrector, &f, flagged_v, 1);
    CHECK(again.final_label == hit.final_label);
    CHECK(again.score == hit.score);

    // without a type classifier nothing is rewritten
    CorrectionOutcome no_f = correct_prediction(p.corrector, nullptr, flagged_v, 1);
    CHECK(no_f.flagged_error);
    CHECK(no_f.final_label == 1);
}

TEST_CASE("flagged set shrinks as theta grows") {
    Planted p(0.0);
    std::vector<double> scores;
    for (std::size_t i = 0; i < p.correct.rows(); ++i)
        scores.push_back(detector_score(p.corrector, p.correct.row(i)));
    for (std::size_t i = 0; i < p.errors.rows(); ++i)
        scores.push_back(detector_score(p.corrector, p.errors.row(i)));

    std::size_t previous = scores.size() + 1;
    for (double delta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double theta = theta_for_delta(p.corrector, delta);
        std::size_t flagged = 0;
        for (double s : scores)
            if (s >= theta) ++flagged;
        CHECK(flagged <= previous);
        previous = flagged;
    }
}

TEST_CASE("latency probe reports ordered statistics and degree ordering") {
    Rng rng(17);
    Matrix correct = gaussian_blob(rng, 120, 8, 0.0);
    Matrix errors = gaussian_blob(rng, 24, 8, 6.0);

    CentroidCorrector deg1 = train_corrector(correct, errors, build_poly_map(8, 1), 0.2);
    CentroidCorrector deg9 = train_corrector(correct, errors, build_poly_map(8, 9), 0.2);

    const LatencyStats s1 = correction_latency_probe(deg1, nullptr, 400);
    const LatencyStats s9 = correction_latency_probe(deg9, nullptr, 400);
    CHECK(s1.calls == 400);
    CHECK(s1.median_ms <= s1.p99_ms);
    CHECK(s9.median_ms <= s9.p99_ms);
    CHECK(s1.median_ms < s9.median_ms);  // the degree-1 path is strictly cheaper
}
