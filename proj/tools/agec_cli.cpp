// Command-line front end for the gesture error-correction pipeline:
// synthesize datasets, train the base model, train the per-user corrector,
// sweep the decision threshold, correct predictions, and estimate intrinsic
// dimension. Configuration comes from an optional JSON file plus flag
// overrides; every run is deterministic under a fixed seed.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "agec/commands.hpp"
#include "agec/errors.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> users;
    std::optional<int> samples;
    std::optional<double> shift;
    std::optional<std::string> model;
    std::optional<std::size_t> base_pcs;
    std::optional<std::size_t> base_degree;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> knn_k;
    std::optional<std::size_t> pcs;
    std::optional<std::size_t> degree;
    std::optional<double> delta;
    std::optional<std::string> type_features;
    std::optional<std::size_t> sweep_points;
    std::optional<std::size_t> intdim_samples;
    std::optional<double> intdim_alpha;
    std::optional<std::size_t> latency_calls;
};

agec::RunConfig resolve(const std::string& config_path, const Overrides& o) {
    agec::RunConfig c;
    if (!config_path.empty()) c = agec::load_run_config(config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.users) c.synth.users = *o.users;
    if (o.samples) c.synth.samples_per_gesture_per_user = *o.samples;
    if (o.shift) c.synth.new_user_shift_multiplier = *o.shift;
    if (o.model) c.base.model = *o.model;
    if (o.base_pcs) c.base.pcs = *o.base_pcs;
    if (o.base_degree) c.base.poly_degree = *o.base_degree;
    if (o.epochs) c.base.svm_epochs = *o.epochs;
    if (o.knn_k) c.base.knn_k = *o.knn_k;
    if (o.pcs) c.corrector_pcs = *o.pcs;
    if (o.degree) c.corrector_degree = *o.degree;
    if (o.delta) c.delta = *o.delta;
    if (o.type_features) c.error_type_features = *o.type_features;
    if (o.sweep_points) c.sweep_points = *o.sweep_points;
    if (o.intdim_samples) c.intdim_max_samples = *o.intdim_samples;
    if (o.intdim_alpha) c.intdim_alpha = *o.intdim_alpha;
    if (o.latency_calls) c.latency_calls = *o.latency_calls;
    c.propagate_seed();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agec: adaptive few-shot error correction for gesture classifiers"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;
    app.add_option("-c,--config", config_path, "JSON configuration file");
    app.add_option("--seed", o.seed, "master RNG seed");
    app.add_option("--out-dir", o.out_dir, "output directory (default: out)");

    auto* synth = app.add_subcommand("synth", "generate the four synthetic datasets");
    synth->add_option("--users", o.users, "number of base users (>= 4, default 11)");
    synth->add_option("--samples", o.samples, "samples per gesture per user (default 100)");
    synth->add_option("--shift", o.shift, "new-user shift multiplier (>= 1, default 1.5)");

    auto* train_base = app.add_subcommand("train-base", "fit PCA + classifier on base_train");
    train_base->add_option("--model", o.model,
                           "classifier: knn, lda, gnb, linear_svm, poly_svm");
    train_base->add_option("--base-pcs", o.base_pcs, "PCs fed to the classifier (0 = default)");
    train_base->add_option("--base-degree", o.base_degree, "poly_svm lift degree (default 2)");
    train_base->add_option("--epochs", o.epochs, "SVM training epochs (default 30)");
    train_base->add_option("--knn-k", o.knn_k, "KNN neighbour count (default 5)");

    auto* train_corrector =
        app.add_subcommand("train-corrector", "fit the centroid error corrector on new_user_train");
    train_corrector->add_option("--pcs", o.pcs, "corrector PC count (default 8)");
    train_corrector->add_option("--degree", o.degree, "polynomial lift degree 1-9 (default 9)");
    train_corrector->add_option("--delta", o.delta, "threshold parameter in [0,1] (default 0.2)");
    train_corrector->add_option("--error-type-features", o.type_features,
                                "error-type classifier input: pc or whitened");

    auto* sweep = app.add_subcommand(
        "sweep", "sweep delta over new_user_train, new_user_test and base_train");
    sweep->add_option("--points", o.sweep_points, "delta grid size (default 101)");

    std::string input_csv, output_csv;
    bool probe = false;
    auto* correct = app.add_subcommand("correct", "correct base predictions for a dataset");
    correct->add_option("input", input_csv, "input dataset CSV")->required();
    correct->add_option("-o,--output", output_csv, "output CSV (default out/corrections.csv)");
    correct->add_flag("--latency-probe", probe, "measure per-call correction latency");

    std::string intdim_csv;
    auto* intdim =
        app.add_subcommand("intdim", "intrinsic-dimension grid over PCs 3-9 x degrees 1-9");
    intdim->add_option("input", intdim_csv, "input dataset CSV")->required();
    intdim->add_option("--max-samples", o.intdim_samples, "subsample size (default 300)");
    intdim->add_option("--alpha", o.intdim_alpha, "separability threshold (default 0.8)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const agec::RunConfig config = resolve(config_path, o);
        if (synth->parsed()) agec::cmd_synth(config);
        if (train_base->parsed()) agec::cmd_train_base(config);
        if (train_corrector->parsed()) agec::cmd_train_corrector(config);
        if (sweep->parsed()) agec::cmd_sweep(config);
        if (correct->parsed()) {
            if (output_csv.empty()) output_csv = config.corrections_csv();
            agec::cmd_correct(config, input_csv, output_csv, probe);
        }
        if (intdim->parsed()) agec::cmd_intdim(config, intdim_csv);
    } catch (const agec::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
