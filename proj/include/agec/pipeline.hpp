#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "agec/base.hpp"
#include "agec/errors.hpp"
#include "agec/gesture.hpp"
#include "agec/linalg.hpp"

namespace agec {

// Hyperparameters for one base system: PCA dimension reduction composed
// with a classifier.
struct BasePipelineConfig {
    std::string model = "poly_svm";
    std::size_t pcs = 0;  // 0 picks the per-model default below
    std::size_t poly_degree = 2;
    double svm_lambda = 1e-4;
    std::size_t svm_epochs = 30;
    std::size_t knn_k = 5;
    double lda_ridge = 1e-3;
    double gnb_var_floor_rel = 1e-9;
    std::uint64_t seed = 1;
};

inline const std::vector<std::string>& base_model_names() {
    static const std::vector<std::string> names = {"knn", "lda", "gnb", "linear_svm",
                                                   "poly_svm"};
    return names;
}

// PC counts that worked best per classifier in the underlying study.
inline std::size_t default_pcs(const std::string& model) {
    if (model == "knn") return 5;
    if (model == "lda") return 10;
    if (model == "gnb") return 100;
    if (model == "linear_svm") return 100;
    if (model == "poly_svm") return 20;
    return 20;
}

inline std::unique_ptr<BaseModel> make_classifier(const BasePipelineConfig& config) {
    if (config.model == "knn") return std::make_unique<KnnModel>(config.knn_k);
    if (config.model == "lda") return std::make_unique<LdaModel>(config.lda_ridge);
    if (config.model == "gnb") return std::make_unique<GnbModel>(config.gnb_var_floor_rel);
    if (config.model == "linear_svm")
        return std::make_unique<LinearSvmOvr>(
            SvmParams{config.svm_lambda, config.svm_epochs, config.seed});
    if (config.model == "poly_svm")
        return std::make_unique<PolySvmModel>(
            config.poly_degree, SvmParams{config.svm_lambda, config.svm_epochs, config.seed});
    std::string names;
    for (const auto& n : base_model_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown base model '" + config.model + "' (valid: " + names + ")");
}

// A trained base system. The PCA keeps every component above the eigenvalue
// floor; the classifier consumes the first `model_pcs` coordinates and the
// error corrector may consume a different prefix of the same projection.
class BasePipeline {
public:
    BasePipeline() = default;

    explicit BasePipeline(BasePipelineConfig config) : config_(std::move(config)) {
        if (config_.pcs == 0) config_.pcs = default_pcs(config_.model);
    }

    void fit(const Dataset& train) {
        if (train.empty()) throw DegenerateDataError("base pipeline: empty training set");
        pca_ = fit_pca_whitening(train.flat());
        model_pcs_ = std::min(config_.pcs, pca_.retained());
        classifier_ = make_classifier(config_);
        classifier_->fit(projected_features(train, model_pcs_), train.label_ids());
    }

    int predict_flat(std::span<const double> flat) const {
        return classifier_->predict(project(pca_, flat, model_pcs_));
    }

    int predict(const GestureSample& sample) const {
        return predict_flat(sample.signal);
    }

    std::vector<int> predict_all(const Dataset& data) const {
        std::vector<int> out(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            out[i] = predict_flat(data.flat().row(i));
        return out;
    }

    EvalResult evaluate(const Dataset& data) const {
        return agec::evaluate(*classifier_, projected_features(data, model_pcs_),
                              data.label_ids(), kNumLabels);
    }

    // First `pcs` unwhitened PCA coordinates; the corrector's feature space.
    std::vector<double> pc_features(std::span<const double> flat, std::size_t pcs) const {
        if (pcs > pca_.retained())
            throw ConfigError("requested " + std::to_string(pcs) +
                              " PCs but the fitted PCA retains only " +
                              std::to_string(pca_.retained()));
        return project(pca_, flat, pcs);
    }

    Matrix pc_features_all(const Dataset& data, std::size_t pcs) const {
        Matrix out(data.size(), pcs);
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::vector<double> f = pc_features(data.flat().row(i), pcs);
            std::copy(f.begin(), f.end(), out.row(i).begin());
        }
        return out;
    }

    const PcaWhitening& pca() const noexcept { return pca_; }
    const BaseModel& classifier() const { return *classifier_; }
    std::size_t model_pcs() const noexcept { return model_pcs_; }
    const BasePipelineConfig& config() const noexcept { return config_; }

    void restore(BasePipelineConfig config, PcaWhitening pca, std::size_t model_pcs,
                 std::unique_ptr<BaseModel> classifier) {
        config_ = std::move(config);
        pca_ = std::move(pca);
        model_pcs_ = model_pcs;
        classifier_ = std::move(classifier);
    }

private:
    Matrix projected_features(const Dataset& data, std::size_t pcs) const {
        Matrix out(data.size(), pcs);
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::vector<double> f = project(pca_, data.flat().row(i), pcs);
            std::copy(f.begin(), f.end(), out.row(i).begin());
        }
        return out;
    }

    BasePipelineConfig config_;
    PcaWhitening pca_;
    std::size_t model_pcs_ = 0;
    std::unique_ptr<BaseModel> classifier_;
};

}  // namespace agec
