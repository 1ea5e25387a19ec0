#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agec/corrector.hpp"
#include "agec/errors.hpp"
#include "agec/eval.hpp"
#include "agec/gesture.hpp"
#include "agec/pipeline.hpp"
#include "agec/serialize.hpp"
#include "agec/synth.hpp"

namespace agec {

inline bool log_verbose() {
    static const bool on = [] {
        const char* v = std::getenv("AGEC_LOG");
        return v != nullptr && (std::string_view(v) == "debug" || std::string_view(v) == "trace");
    }();
    return on;
}

// Full pipeline configuration: one structured file, overridable from the
// command line. Defaults follow the study's chosen operating point
// (degree-9 kernel, delta 0.2, 8 PCs).
struct RunConfig {
    std::uint64_t seed = 52;
    std::string out_dir = "out";

    SynthConfig synth;
    BasePipelineConfig base;

    std::size_t corrector_pcs = 8;
    std::size_t corrector_degree = 9;
    double delta = 0.2;
    std::size_t min_class_size = 2;
    // Retaining directions below ~1e-6 of the leading eigenvalue makes the
    // detector memorize the training errors' null-space components; scores
    // then stop generalizing to unseen errors from the same user.
    double eigen_floor = 1e-6;
    std::string error_type_features = "pc";  // "pc" or "whitened"
    std::size_t histogram_bins = 40;

    std::size_t sweep_points = 101;

    double intdim_alpha = 0.8;
    std::size_t intdim_max_samples = 300;

    std::size_t latency_calls = 10000;

    std::string path(const std::string& name) const { return out_dir + "/" + name; }
    std::string base_train_csv() const { return path("base_train.csv"); }
    std::string base_test_csv() const { return path("base_test.csv"); }
    std::string new_user_train_csv() const { return path("new_user_train.csv"); }
    std::string new_user_test_csv() const { return path("new_user_test.csv"); }
    std::string base_model_path() const { return path("base_model.json"); }
    std::string corrector_path() const { return path("corrector.json"); }
    std::string histogram_path() const { return path("histogram.csv"); }
    std::string corrections_csv() const { return path("corrections.csv"); }
    std::string intdim_csv() const { return path("intdim.csv"); }

    void validate() const {
        if (corrector_degree < 1 || corrector_degree > 9)
            throw ConfigError("corrector degree must be in [1, 9]");
        if (delta < 0.0 || delta > 1.0) throw ConfigError("delta must be in [0, 1]");
        if (corrector_pcs < 1) throw ConfigError("corrector PC count must be >= 1");
        if (synth.users < 4) throw ConfigError("synth users must be >= 4");
        if (synth.samples_per_gesture_per_user < 1)
            throw ConfigError("samples per gesture per user must be >= 1");
        if (synth.new_user_shift_multiplier < 1.0)
            throw ConfigError("new-user shift multiplier must be >= 1");
        if (sweep_points < 2) throw ConfigError("sweep grid needs at least 2 points");
        if (!(intdim_alpha > 0.0 && intdim_alpha < 1.0))
            throw ConfigError("intdim alpha must be in (0, 1)");
        if (error_type_features != "pc" && error_type_features != "whitened")
            throw ConfigError("error_type_features must be 'pc' or 'whitened'");
        if (base.model != "knn" && base.model != "lda" && base.model != "gnb" &&
            base.model != "linear_svm" && base.model != "poly_svm") {
            make_classifier(base);  // throws with the list of valid names
        }
    }

    // Sub-seeds follow the top-level seed unless the file set them explicitly.
    void propagate_seed() {
        synth.rng_seed = seed;
        base.seed = seed;
    }

    std::string provenance(const std::string& cmd) const {
        return "agec " + cmd + " seed=" + std::to_string(seed);
    }
};

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw IoError("failed to parse config '" + path + "': " + e.what());
    }
    RunConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
        if (j.contains("synth")) {
            const json& s = j["synth"];
            c.synth.users = s.value("users", c.synth.users);
            c.synth.samples_per_gesture_per_user =
                s.value("samples_per_gesture_per_user", c.synth.samples_per_gesture_per_user);
            c.synth.new_user_shift_multiplier =
                s.value("new_user_shift_multiplier", c.synth.new_user_shift_multiplier);
        }
        if (j.contains("base")) {
            const json& b = j["base"];
            c.base.model = b.value("model", c.base.model);
            c.base.pcs = b.value("pcs", c.base.pcs);
            c.base.poly_degree = b.value("poly_degree", c.base.poly_degree);
            c.base.svm_lambda = b.value("svm_lambda", c.base.svm_lambda);
            c.base.svm_epochs = b.value("svm_epochs", c.base.svm_epochs);
            c.base.knn_k = b.value("knn_k", c.base.knn_k);
            c.base.lda_ridge = b.value("lda_ridge", c.base.lda_ridge);
            c.base.gnb_var_floor_rel = b.value("gnb_var_floor_rel", c.base.gnb_var_floor_rel);
        }
        if (j.contains("corrector")) {
            const json& k = j["corrector"];
            c.corrector_pcs = k.value("pcs", c.corrector_pcs);
            c.corrector_degree = k.value("degree", c.corrector_degree);
            c.delta = k.value("delta", c.delta);
            c.min_class_size = k.value("min_class_size", c.min_class_size);
            c.eigen_floor = k.value("eigen_floor", c.eigen_floor);
            c.error_type_features = k.value("error_type_features", c.error_type_features);
            c.histogram_bins = k.value("histogram_bins", c.histogram_bins);
        }
        if (j.contains("sweep")) c.sweep_points = j["sweep"].value("points", c.sweep_points);
        if (j.contains("intdim")) {
            c.intdim_alpha = j["intdim"].value("alpha", c.intdim_alpha);
            c.intdim_max_samples = j["intdim"].value("max_samples", c.intdim_max_samples);
        }
        if (j.contains("latency")) c.latency_calls = j["latency"].value("calls", c.latency_calls);
    } catch (const json::exception& e) {
        throw ConfigError("bad config value in '" + path + "': " + e.what());
    }
    c.propagate_seed();
    return c;
}

// ---------------------------------------------------------------------------

inline void ensure_out_dir(const RunConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + config.out_dir + "'");
}

inline void cmd_synth(const RunConfig& config, std::ostream& out = std::cout) {
    config.validate();
    ensure_out_dir(config);
    const SynthOutput data = generate(config.synth);
    const std::string prov = config.provenance("synth");
    write_dataset_csv(config.base_train_csv(), data.base_train, prov);
    write_dataset_csv(config.base_test_csv(), data.base_test, prov);
    write_dataset_csv(config.new_user_train_csv(), data.new_user_train, prov);
    write_dataset_csv(config.new_user_test_csv(), data.new_user_test, prov);
    out << "base_train: " << data.base_train.size() << " samples ("
        << data.base_train_users.size() << " users)\n"
        << "base_test: " << data.base_test.size() << " samples ("
        << data.base_test_users.size() << " users)\n"
        << "new_user_train: " << data.new_user_train.size() << " samples (user "
        << data.new_user_id << ")\n"
        << "new_user_test: " << data.new_user_test.size() << " samples (user "
        << data.new_user_id << ")\n";
}

inline void cmd_train_base(const RunConfig& config, std::ostream& out = std::cout) {
    config.validate();
    ensure_out_dir(config);
    const Dataset train = read_dataset_csv(config.base_train_csv());
    const Dataset test = read_dataset_csv(config.base_test_csv());
    BasePipeline pipeline(config.base);
    pipeline.fit(train);
    save_base_model(config.base_model_path(), pipeline, config.seed);
    const double train_acc = pipeline.evaluate(train).accuracy;
    const double test_acc = pipeline.evaluate(test).accuracy;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "model=%s pcs=%zu train_accuracy=%.4f test_accuracy=%.4f\n",
                  pipeline.config().model.c_str(), pipeline.model_pcs(), train_acc,
                  test_acc);
    out << buf << "saved " << config.base_model_path() << "\n";
}

// Detector scores plus error-type predictions for one evaluation set,
// honoring the bundle's error-type feature space.
inline std::vector<SweepSample> bundle_sweep_samples(const CorrectorBundle& bundle,
                                                     const BasePipeline& base,
                                                     const Dataset& data) {
    const Matrix features = base.pc_features_all(data, bundle.pcs);
    std::vector<SweepSample> out(data.size());
    const ErrorTypeClassifier* f = bundle.types ? &*bundle.types : nullptr;
    for (std::size_t i = 0; i < data.size(); ++i) {
        SweepSample& s = out[i];
        s.truth = static_cast<int>(data[i].label);
        s.base_pred = base.predict_flat(data.flat().row(i));
        const std::vector<double> u = whitened_coords(bundle.corrector, features.row(i));
        s.score = dot(bundle.corrector.error_direction, u);
        if (f != nullptr) {
            if (bundle.error_type_features == "whitened")
                s.sigma = f->classify(u);
            else
                s.sigma = f->classify(features.row(i));
        }
    }
    return out;
}

inline CorrectionOutcome apply_corrector(const CorrectorBundle& bundle,
                                         std::span<const double> v, int y_pred) {
    CorrectionOutcome out;
    out.final_label = y_pred;
    if (bundle.pass_through) return out;
    const ErrorTypeClassifier* f = bundle.types ? &*bundle.types : nullptr;
    if (f == nullptr || bundle.error_type_features == "pc")
        return correct_prediction(bundle.corrector, f, v, y_pred);
    // whitened error-type space: reuse the detector's whitened coordinates
    const std::vector<double> u = whitened_coords(bundle.corrector, v);
    out.score = dot(bundle.corrector.error_direction, u);
    out.flagged_error = out.score >= bundle.corrector.theta;
    if (!out.flagged_error) return out;
    const ErrorType sigma = f->classify(u);
    if (y_pred == sigma.predicted) {
        out.final_label = sigma.truth;
        out.matched_type = sigma;
    }
    return out;
}

inline void cmd_train_corrector(const RunConfig& config, std::ostream& out = std::cout) {
    config.validate();
    ensure_out_dir(config);
    const BasePipeline base = load_base_model(config.base_model_path()).pipeline;
    const Dataset adapt = read_dataset_csv(config.new_user_train_csv());

    CorrectorBundle bundle;
    bundle.pcs = config.corrector_pcs;
    bundle.seed = config.seed;
    bundle.error_type_features = config.error_type_features;
    try {
        const CorrectnessSplit split = split_by_correctness(base, adapt);
        const Matrix correct_features = base.pc_features_all(split.correct, config.corrector_pcs);
        const Matrix error_features = base.pc_features_all(split.errors, config.corrector_pcs);
        bundle.corrector = train_corrector(correct_features, error_features,
                                           build_poly_map(config.corrector_pcs,
                                                          config.corrector_degree),
                                           config.delta, config.eigen_floor);
        Matrix type_features = error_features;
        if (config.error_type_features == "whitened") {
            type_features = Matrix(error_features.rows(), bundle.corrector.pca.retained());
            for (std::size_t i = 0; i < error_features.rows(); ++i) {
                const std::vector<double> u =
                    whitened_coords(bundle.corrector, error_features.row(i));
                std::copy(u.begin(), u.end(), type_features.row(i).begin());
            }
        }
        try {
            bundle.types = train_error_types(type_features, split.error_tags,
                                             config.min_class_size, config.base.lda_ridge);
        } catch (const NoErrorTypes& e) {
            out << "notice: " << e.what() << "; corrector will detect but not rewrite\n";
        }

        const DistanceHistogram hist = distance_histogram(
            bundle.corrector, correct_features, error_features, config.histogram_bins);
        {
            std::ofstream hs(config.histogram_path());
            if (!hs) throw IoError("cannot open '" + config.histogram_path() + "'");
            hs << "# " << config.provenance("train-corrector") << "\n";
            hs << "bin_lo,bin_hi,count_correct,count_error\n";
            char buf[96];
            for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
                std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%lld,%lld\n", hist.edges[b],
                              hist.edges[b + 1],
                              static_cast<long long>(hist.count_correct[b]),
                              static_cast<long long>(hist.count_error[b]));
                hs << buf;
            }
        }

        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "correct=%zu errors=%zu theta_min=%.6g theta_max=%.6g delta=%.3f "
                      "theta=%.6g\n",
                      split.correct.size(), split.errors.size(), bundle.corrector.theta_min,
                      bundle.corrector.theta_max, bundle.corrector.delta,
                      bundle.corrector.theta);
        out << buf;
        if (bundle.types) {
            out << "error types: " << bundle.types->types().size() << " kept, "
                << bundle.types->dropped_types() << " dropped ("
                << bundle.types->dropped_samples() << " samples)\n";
        }
    } catch (const CorrectorNotNeeded&) {
        bundle.pass_through = true;
        out << "notice: base model made no errors on " << config.new_user_train_csv()
            << "; writing pass-through corrector\n";
    }
    save_corrector(config.corrector_path(), bundle);
    out << "saved " << config.corrector_path() << "\n";
}

inline void write_sweep_csv(const std::string& path, const std::string& provenance,
                            const std::vector<SweepPoint>& points) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "# " << provenance << "\n";
    os << "delta,theta,tpr,fpr,corrected_err,err_not_correctable,err_not_found,"
          "err_ignored,changed_fp,ignored_fp,kept_correct,base_acc,corrected_acc\n";
    char buf[320];
    for (const SweepPoint& p : points) {
        std::snprintf(buf, sizeof(buf),
                      "%.10g,%.10g,%.10g,%.10g,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%.10g,%.10g\n",
                      p.delta, p.theta, p.tpr, p.fpr,
                      static_cast<long long>(p.event_counts[0]),
                      static_cast<long long>(p.event_counts[1]),
                      static_cast<long long>(p.event_counts[2]),
                      static_cast<long long>(p.event_counts[3]),
                      static_cast<long long>(p.event_counts[4]),
                      static_cast<long long>(p.event_counts[5]),
                      static_cast<long long>(p.event_counts[6]), p.base_accuracy,
                      p.corrected_accuracy);
        os << buf;
    }
    if (!os) throw IoError("failed writing '" + path + "'");
}

struct SweepSetResult {
    std::string name;
    std::vector<SweepPoint> points;
};

inline std::vector<SweepSetResult> run_sweeps(const RunConfig& config,
                                              const CorrectorBundle& bundle,
                                              const BasePipeline& base) {
    if (bundle.pass_through)
        throw DegenerateDataError("cannot sweep a pass-through corrector bundle");
    const std::vector<double> grid = delta_grid(config.sweep_points);
    std::vector<SweepSetResult> out;
    const std::array<std::pair<std::string, std::string>, 3> sets = {
        std::pair{std::string("new_user_train"), config.new_user_train_csv()},
        std::pair{std::string("new_user_test"), config.new_user_test_csv()},
        std::pair{std::string("base_train"), config.base_train_csv()},
    };
    for (const auto& [name, csv] : sets) {
        const Dataset data = read_dataset_csv(csv);
        const std::vector<SweepSample> samples = bundle_sweep_samples(bundle, base, data);
        SweepSetResult r;
        r.name = name;
        r.points.reserve(grid.size());
        for (double d : grid) r.points.push_back(sweep_point_at(bundle.corrector, samples, d));
        out.push_back(std::move(r));
    }
    return out;
}

inline void cmd_sweep(const RunConfig& config, std::ostream& out = std::cout) {
    config.validate();
    ensure_out_dir(config);
    const BasePipeline base = load_base_model(config.base_model_path()).pipeline;
    const CorrectorBundle bundle = load_corrector(config.corrector_path());
    const std::vector<SweepSetResult> results = run_sweeps(config, bundle, base);
    for (const SweepSetResult& r : results) {
        const std::string path = config.path("sweep_" + r.name + ".csv");
        write_sweep_csv(path, config.provenance("sweep"), r.points);
        const SweepPoint* best = &r.points[0];
        for (const SweepPoint& p : r.points)
            if (p.accuracy_delta > best->accuracy_delta) best = &p;
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "%s: base_acc=%.4f best_delta=%.3f corrected_acc=%.4f (%+.4f)\n",
                      r.name.c_str(), best->base_accuracy, best->delta,
                      best->corrected_accuracy, best->accuracy_delta);
        out << buf << "wrote " << path << "\n";
    }
}

inline void cmd_correct(const RunConfig& config, const std::string& input_csv,
                        const std::string& output_csv, bool latency_probe = false,
                        std::ostream& out = std::cout) {
    config.validate();
    ensure_out_dir(config);
    const BasePipeline base = load_base_model(config.base_model_path()).pipeline;
    const CorrectorBundle bundle = load_corrector(config.corrector_path());
    const Dataset data = read_dataset_csv(input_csv);

    std::ofstream os(output_csv);
    if (!os) throw IoError("cannot open '" + output_csv + "' for writing");
    os << "# " << config.provenance("correct") << "\n";
    os << "user_id,truth,base_pred,epsilon,score,sigma,final,event\n";
    std::size_t base_right = 0, corrected_right = 0;
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const GestureSample& s = data[i];
        const int truth = static_cast<int>(s.label);
        const int base_pred = base.predict_flat(data.flat().row(i));
        CorrectionOutcome outcome;
        if (bundle.pass_through) {
            outcome.final_label = base_pred;
        } else {
            const std::vector<double> v = base.pc_features(data.flat().row(i), bundle.pcs);
            outcome = apply_corrector(bundle, v, base_pred);
        }
        const PredictionEvent event = classify_event(truth, base_pred, outcome);
        if (base_pred == truth) ++base_right;
        if (outcome.final_label == truth) ++corrected_right;
        std::string sigma;
        if (outcome.matched_type) {
            sigma = std::string(to_string(static_cast<GestureLabel>(outcome.matched_type->truth))) +
                    ">" +
                    std::string(to_string(static_cast<GestureLabel>(outcome.matched_type->predicted)));
        }
        std::snprintf(buf, sizeof(buf), "%.10g", outcome.score);
        os << s.user_id << ',' << to_string(s.label) << ','
           << to_string(static_cast<GestureLabel>(base_pred)) << ','
           << (outcome.flagged_error ? 1 : 0) << ',' << buf << ',' << sigma << ','
           << to_string(static_cast<GestureLabel>(outcome.final_label)) << ','
           << to_string(event) << '\n';
    }
    if (!os) throw IoError("failed writing '" + output_csv + "'");
    const double n = static_cast<double>(data.size());
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%zu rows: base_accuracy=%.4f corrected_accuracy=%.4f\n", data.size(),
                  n > 0 ? static_cast<double>(base_right) / n : 0.0,
                  n > 0 ? static_cast<double>(corrected_right) / n : 0.0);
    out << line << "wrote " << output_csv << "\n";

    if (latency_probe && !bundle.pass_through) {
        const ErrorTypeClassifier* f = bundle.types ? &*bundle.types : nullptr;
        const LatencyStats stats =
            correction_latency_probe(bundle.corrector, f, config.latency_calls, config.seed);
        std::snprintf(line, sizeof(line),
                      "latency over %zu calls: median=%.4f ms p99=%.4f ms mean=%.4f ms\n",
                      stats.calls, stats.median_ms, stats.p99_ms, stats.mean_ms);
        out << line;
    }
}

inline void cmd_intdim(const RunConfig& config, const std::string& input_csv,
                       std::ostream& out = std::cout) {
    config.validate();
    ensure_out_dir(config);
    const Dataset data = read_dataset_csv(input_csv);
    if (data.size() < 50)
        throw DegenerateDataError("intdim: need at least 50 samples, got " +
                                  std::to_string(data.size()));

    // deterministic subsample keyed by the seed
    std::size_t n = std::min<std::size_t>(data.size(), config.intdim_max_samples);
    Rng rng = Rng::keyed(config.seed, 0x494e54ULL);
    const std::vector<std::size_t> order = rng.permutation(data.size());
    Matrix flat(n, kFlatFeatures);
    for (std::size_t i = 0; i < n; ++i) {
        auto src = data.flat().row(order[i]);
        std::copy(src.begin(), src.end(), flat.row(i).begin());
    }

    const PcaWhitening pca = fit_pca_whitening(flat);
    constexpr std::size_t kMinPcs = 3, kMaxPcs = 9, kMaxDegree = 9;
    if (pca.retained() < kMaxPcs)
        throw DegenerateDataError("intdim: data rank below 9 PCs");

    std::ofstream os(config.intdim_csv());
    if (!os) throw IoError("cannot open '" + config.intdim_csv() + "' for writing");
    os << "# " << config.provenance("intdim") << "\n";
    os << "pcs";
    for (std::size_t d = 1; d <= kMaxDegree; ++d) os << ",d" << d;
    os << "\n";
    out << "intrinsic dimension over " << n << " samples (inf = above measurable range)\n";
    char buf[32];
    for (std::size_t pcs = kMinPcs; pcs <= kMaxPcs; ++pcs) {
        Matrix projected(n, pcs);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> p = project(pca, flat.row(i), pcs);
            std::copy(p.begin(), p.end(), projected.row(i).begin());
        }
        os << pcs;
        out << "pcs=" << pcs << ":";
        for (std::size_t degree = 1; degree <= kMaxDegree; ++degree) {
            const PolyFeatureMap map = build_poly_map(pcs, degree);
            const Matrix lifted = lift_rows(map, projected);
            const std::optional<double> dim = intrinsic_dimension(lifted, config.intdim_alpha);
            if (dim) {
                std::snprintf(buf, sizeof(buf), "%.3f", *dim);
                os << ',' << buf;
                out << ' ' << buf;
            } else {
                os << ",inf";
                out << " inf";
            }
        }
        os << "\n";
        out << "\n";
    }
    if (!os) throw IoError("failed writing '" + config.intdim_csv() + "'");
    out << "wrote " << config.intdim_csv() << "\n";
}

}  // namespace agec
