#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agec/base.hpp"
#include "agec/corrector.hpp"
#include "agec/errors.hpp"
#include "agec/gesture.hpp"
#include "agec/linalg.hpp"
#include "agec/pipeline.hpp"
#include "agec/poly.hpp"

// Versioned JSON persistence for trained artifacts. Doubles are serialized
// with shortest round-trip precision, so a reloaded model is
// prediction-identical to the one saved.

namespace agec {

using json = nlohmann::json;

namespace serde {

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

inline Matrix json_to_matrix(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.rows() * m.cols())
        throw IoError("matrix payload has wrong element count");
    m.values() = data;
    return m;
}

inline json pca_to_json(const PcaWhitening& p) {
    return json{{"mean", p.mean},
                {"components", matrix_to_json(p.components)},
                {"eigenvalues", p.eigenvalues}};
}

inline PcaWhitening json_to_pca(const json& j) {
    PcaWhitening p;
    p.mean = j.at("mean").get<std::vector<double>>();
    p.components = json_to_matrix(j.at("components"));
    p.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    p.whitening.resize(p.eigenvalues.size());
    for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) {
        if (p.eigenvalues[i] <= 0.0) throw IoError("pca payload has non-positive eigenvalue");
        p.whitening[i] = 1.0 / std::sqrt(p.eigenvalues[i]);
    }
    return p;
}

inline json map_to_json(const PolyFeatureMap& m) {
    return json{{"input_dim", m.input_dim},
                {"degree", m.degree},
                {"exponents", m.exponents}};
}

inline PolyFeatureMap json_to_map(const json& j) {
    PolyFeatureMap m;
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.degree = j.at("degree").get<std::size_t>();
    m.exponents = j.at("exponents").get<std::vector<std::uint8_t>>();
    if (m.input_dim == 0 || m.exponents.size() % m.input_dim != 0)
        throw IoError("poly map payload is inconsistent");
    return m;
}

inline json svm_to_json(const LinearSvmOvr& m) {
    return json{{"lambda", m.params().lambda}, {"epochs", m.params().epochs},
                {"seed", m.params().seed},     {"classes", m.classes()},
                {"weights", matrix_to_json(m.weights())},
                {"biases", m.biases()},        {"feature_mean", m.feature_mean()}};
}

inline LinearSvmOvr json_to_svm(const json& j) {
    LinearSvmOvr m;
    m.restore(SvmParams{j.at("lambda").get<double>(), j.at("epochs").get<std::size_t>(),
                        j.at("seed").get<std::uint64_t>()},
              j.at("classes").get<std::vector<int>>(), json_to_matrix(j.at("weights")),
              j.at("biases").get<std::vector<double>>(),
              j.at("feature_mean").get<std::vector<double>>());
    return m;
}

inline json classifier_to_json(const BaseModel& model) {
    const std::string kind = model.name();
    json j{{"kind", kind}};
    if (kind == "knn") {
        const auto& m = dynamic_cast<const KnnModel&>(model);
        j["k"] = m.k();
        j["data"] = matrix_to_json(m.data());
        j["labels"] = m.labels();
    } else if (kind == "lda") {
        const auto& m = dynamic_cast<const LdaModel&>(model);
        j["ridge"] = m.ridge();
        j["classes"] = m.classes();
        j["means"] = matrix_to_json(m.means());
        j["alphas"] = matrix_to_json(m.alphas());
        j["betas"] = m.betas();
    } else if (kind == "gnb") {
        const auto& m = dynamic_cast<const GnbModel&>(model);
        j["var_floor_rel"] = m.var_floor_rel();
        j["classes"] = m.classes();
        j["means"] = matrix_to_json(m.means());
        j["vars"] = matrix_to_json(m.vars());
        j["log_priors"] = m.log_priors();
    } else if (kind == "linear_svm") {
        j.update(svm_to_json(dynamic_cast<const LinearSvmOvr&>(model)));
    } else if (kind == "poly_svm") {
        const auto& m = dynamic_cast<const PolySvmModel&>(model);
        j["degree"] = m.degree();
        j["lambda"] = m.params().lambda;
        j["epochs"] = m.params().epochs;
        j["seed"] = m.params().seed;
        j["map"] = map_to_json(m.map());
        j["scale_mean"] = m.scale_mean();
        j["scale"] = m.scale();
        j["inner"] = svm_to_json(m.inner());
    } else {
        throw IoError("cannot serialize classifier kind '" + kind + "'");
    }
    return j;
}

inline std::unique_ptr<BaseModel> json_to_classifier(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "knn") {
        auto m = std::make_unique<KnnModel>();
        m->restore(j.at("k").get<std::size_t>(), json_to_matrix(j.at("data")),
                   j.at("labels").get<std::vector<int>>());
        return m;
    }
    if (kind == "lda") {
        auto m = std::make_unique<LdaModel>();
        m->restore(j.at("ridge").get<double>(), j.at("classes").get<std::vector<int>>(),
                   json_to_matrix(j.at("means")), json_to_matrix(j.at("alphas")),
                   j.at("betas").get<std::vector<double>>());
        return m;
    }
    if (kind == "gnb") {
        auto m = std::make_unique<GnbModel>();
        m->restore(j.at("var_floor_rel").get<double>(),
                   j.at("classes").get<std::vector<int>>(), json_to_matrix(j.at("means")),
                   json_to_matrix(j.at("vars")),
                   j.at("log_priors").get<std::vector<double>>());
        return m;
    }
    if (kind == "linear_svm") return std::make_unique<LinearSvmOvr>(json_to_svm(j));
    if (kind == "poly_svm") {
        auto m = std::make_unique<PolySvmModel>();
        m->restore(j.at("degree").get<std::size_t>(),
                   SvmParams{j.at("lambda").get<double>(), j.at("epochs").get<std::size_t>(),
                             j.at("seed").get<std::uint64_t>()},
                   json_to_map(j.at("map")), j.at("scale_mean").get<std::vector<double>>(),
                   j.at("scale").get<std::vector<double>>(), json_to_svm(j.at("inner")));
        return m;
    }
    throw IoError("unknown classifier kind '" + kind + "'");
}

inline json load_checked(const std::string& path, const std::string& format, int version) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw IoError("failed to parse '" + path + "': " + e.what());
    }
    if (j.value("format", "") != format)
        throw IoError("'" + path + "' is not a " + format + " document");
    if (j.value("version", -1) != version)
        throw IoError("'" + path + "' has unsupported version");
    return j;
}

inline void dump_to_file(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << j.dump(1, '\t') << "\n";
    if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace serde

// ---------------------------------------------------------------------------
// Base model bundle

inline void save_base_model(const std::string& path, const BasePipeline& pipeline,
                            std::uint64_t seed) {
    const BasePipelineConfig& c = pipeline.config();
    json j{{"format", "agec.base_model"},
           {"version", 1},
           {"seed", seed},
           {"label_names", std::vector<std::string>(kLabelNames.begin(), kLabelNames.end())},
           {"config",
            {{"model", c.model},
             {"pcs", c.pcs},
             {"poly_degree", c.poly_degree},
             {"svm_lambda", c.svm_lambda},
             {"svm_epochs", c.svm_epochs},
             {"knn_k", c.knn_k},
             {"lda_ridge", c.lda_ridge},
             {"gnb_var_floor_rel", c.gnb_var_floor_rel},
             {"seed", c.seed}}},
           {"model_pcs", pipeline.model_pcs()},
           {"pca", serde::pca_to_json(pipeline.pca())},
           {"classifier", serde::classifier_to_json(pipeline.classifier())}};
    serde::dump_to_file(path, j);
}

struct LoadedBaseModel {
    BasePipeline pipeline;
    std::uint64_t seed = 0;
};

inline LoadedBaseModel load_base_model(const std::string& path) {
    const json j = serde::load_checked(path, "agec.base_model", 1);
    const json& jc = j.at("config");
    BasePipelineConfig c;
    c.model = jc.at("model").get<std::string>();
    c.pcs = jc.at("pcs").get<std::size_t>();
    c.poly_degree = jc.at("poly_degree").get<std::size_t>();
    c.svm_lambda = jc.at("svm_lambda").get<double>();
    c.svm_epochs = jc.at("svm_epochs").get<std::size_t>();
    c.knn_k = jc.at("knn_k").get<std::size_t>();
    c.lda_ridge = jc.at("lda_ridge").get<double>();
    c.gnb_var_floor_rel = jc.at("gnb_var_floor_rel").get<double>();
    c.seed = jc.at("seed").get<std::uint64_t>();

    LoadedBaseModel out;
    out.seed = j.at("seed").get<std::uint64_t>();
    out.pipeline.restore(c, serde::json_to_pca(j.at("pca")),
                         j.at("model_pcs").get<std::size_t>(),
                         serde::json_to_classifier(j.at("classifier")));
    return out;
}

// ---------------------------------------------------------------------------
// Corrector bundle

struct CorrectorBundle {
    bool pass_through = false;
    std::size_t pcs = 8;
    std::string error_type_features = "pc";  // "pc" or "whitened"
    CentroidCorrector corrector;             // meaningful when !pass_through
    std::optional<ErrorTypeClassifier> types;
    std::uint64_t seed = 0;
};

inline void save_corrector(const std::string& path, const CorrectorBundle& bundle) {
    json j{{"format", "agec.corrector"},
           {"version", 1},
           {"seed", bundle.seed},
           {"pass_through", bundle.pass_through},
           {"pcs", bundle.pcs},
           {"error_type_features", bundle.error_type_features},
           {"label_names", std::vector<std::string>(kLabelNames.begin(), kLabelNames.end())}};
    if (!bundle.pass_through) {
        const CentroidCorrector& c = bundle.corrector;
        j["map"] = serde::map_to_json(c.map);
        j["centroid"] = c.correct_centroid;
        j["pca"] = serde::pca_to_json(c.pca);
        j["error_direction"] = c.error_direction;
        j["theta_min"] = c.theta_min;
        j["theta_max"] = c.theta_max;
        j["delta"] = c.delta;
        j["theta"] = c.theta;
        json jt{{"present", bundle.types.has_value()}};
        if (bundle.types) {
            std::vector<std::array<int, 2>> types;
            for (const ErrorType& t : bundle.types->types())
                types.push_back({t.truth, t.predicted});
            jt["types"] = types;
            jt["dropped_samples"] = bundle.types->dropped_samples();
            jt["dropped_types"] = bundle.types->dropped_types();
            if (!bundle.types->constant()) {
                jt["lda"] = json{{"ridge", bundle.types->lda().ridge()},
                                 {"classes", bundle.types->lda().classes()},
                                 {"means", serde::matrix_to_json(bundle.types->lda().means())},
                                 {"alphas", serde::matrix_to_json(bundle.types->lda().alphas())},
                                 {"betas", bundle.types->lda().betas()}};
            }
        }
        j["error_types"] = jt;
    }
    serde::dump_to_file(path, j);
}

inline CorrectorBundle load_corrector(const std::string& path) {
    const json j = serde::load_checked(path, "agec.corrector", 1);
    CorrectorBundle bundle;
    bundle.seed = j.at("seed").get<std::uint64_t>();
    bundle.pass_through = j.at("pass_through").get<bool>();
    bundle.pcs = j.at("pcs").get<std::size_t>();
    bundle.error_type_features = j.at("error_type_features").get<std::string>();
    if (bundle.pass_through) return bundle;

    CentroidCorrector& c = bundle.corrector;
    c.map = serde::json_to_map(j.at("map"));
    c.correct_centroid = j.at("centroid").get<std::vector<double>>();
    c.pca = serde::json_to_pca(j.at("pca"));
    c.error_direction = j.at("error_direction").get<std::vector<double>>();
    c.theta_min = j.at("theta_min").get<double>();
    c.theta_max = j.at("theta_max").get<double>();
    c.delta = j.at("delta").get<double>();
    c.theta = j.at("theta").get<double>();

    const json& jt = j.at("error_types");
    if (jt.at("present").get<bool>()) {
        std::vector<ErrorType> types;
        for (const auto& t : jt.at("types"))
            types.push_back(ErrorType{t.at(0).get<int>(), t.at(1).get<int>()});
        LdaModel lda;
        if (jt.contains("lda")) {
            const json& jl = jt.at("lda");
            lda.restore(jl.at("ridge").get<double>(), jl.at("classes").get<std::vector<int>>(),
                        serde::json_to_matrix(jl.at("means")),
                        serde::json_to_matrix(jl.at("alphas")),
                        jl.at("betas").get<std::vector<double>>());
        }
        ErrorTypeClassifier f;
        f.restore(std::move(types), std::move(lda),
                  jt.at("dropped_samples").get<std::size_t>(),
                  jt.at("dropped_types").get<std::size_t>());
        bundle.types = std::move(f);
    }
    return bundle;
}

}  // namespace agec
