// Command-line driver for the resting-state EEG VAE experimentation toolkit.
// Stages can run individually (synth, preprocess, train-vae, extract,
// train-clf, evaluate, impurity, visualize, report) or end to end (run) with
// content-addressed caching of finished stages.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "revae/core/binio.hpp"
#include "revae/exp/artifacts.hpp"
#include "revae/exp/experiment.hpp"
#include "revae/viz/render.hpp"
#include "revae/viz/tsne.hpp"

using namespace revae;
namespace fs = std::filesystem;

namespace {

exp::ExperimentConfig load_config(const std::string& config_path, const std::string& out_dir,
                                  std::uint64_t seed, bool seed_set, std::size_t jobs,
                                  bool global_vae) {
    exp::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = exp::ExperimentConfig::from_json_text(read_text_file(config_path));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_set) {
        cfg.seed = seed;
        cfg.corpus.seed = seed;
    }
    if (jobs > 0) cfg.jobs = jobs;
    if (global_vae) cfg.global_vae = true;
    return cfg;
}

std::vector<EpochSet> epochs_from_dir(const std::string& dir) {
    return preprocess::load_epoch_sets(dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resting-state EEG VAE experimentation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t jobs = 0;
    bool global_vae = false;
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--jobs", jobs, "worker threads (0 = hardware default)");
    app.add_flag("--global-vae", global_vae,
                 "train one unsupervised model on all subjects instead of per fold");

    auto* cmd_synth = app.add_subcommand("synth", "generate the surrogate corpus");
    auto* cmd_pre = app.add_subcommand("preprocess", "discard/resample/filter/epoch/normalize");

    auto* cmd_train_vae = app.add_subcommand("train-vae", "train one model on an epochs dir");
    std::string epochs_dir, model_path = "vae.ckpt";
    cmd_train_vae->add_option("--epochs", epochs_dir, "epochs directory")->required();
    cmd_train_vae->add_option("--model", model_path, "output checkpoint path");

    auto* cmd_extract = app.add_subcommand("extract", "encoder features for an epochs dir");
    std::string extract_model, extract_out = "features";
    cmd_extract->add_option("--model", extract_model, "trained checkpoint")->required();
    cmd_extract->add_option("--epochs", epochs_dir, "epochs directory")->required();
    cmd_extract->add_option("--features", extract_out, "output prefix (.bin/.json)");

    auto* cmd_train_clf = app.add_subcommand("train-clf", "train a classifier");
    std::string clf_kind = "cnn1d", features_prefix, clf_out = "clf.ckpt";
    cmd_train_clf->add_option("--kind", clf_kind, "cnn1d | mlp | svm-rbf | eegnet");
    cmd_train_clf->add_option("--features", features_prefix, "feature prefix (feature models)");
    cmd_train_clf->add_option("--epochs", epochs_dir, "epochs dir (eegnet)");
    cmd_train_clf->add_option("--model", clf_out, "output checkpoint path");

    auto* cmd_eval = app.add_subcommand("evaluate", "cross-validated evaluation of pipelines");
    auto* cmd_imp = app.add_subcommand("impurity", "dichotomy impurity of a feature set");
    std::string imp_features, imp_csv, imp_out = "di_report.json", imp_baseline;
    cmd_imp->add_option("--features", imp_features, "feature prefix (.bin/.json)");
    cmd_imp->add_option("--csv", imp_csv, "delimited matrix, label in last column");
    cmd_imp->add_option("--report", imp_out, "output report path");
    cmd_imp->add_option("--baseline", imp_baseline,
                        "second feature prefix; also writes a first-quantile comparison");

    auto* cmd_viz = app.add_subcommand("visualize", "t-SNE scatter of a feature set");
    std::string viz_features, viz_prefix = "embedding";
    double viz_perplexity = 30.0;
    std::size_t viz_iters = 1000;
    cmd_viz->add_option("--features", viz_features, "feature prefix (.bin/.json)")->required();
    cmd_viz->add_option("--prefix", viz_prefix, "output prefix");
    cmd_viz->add_option("--perplexity", viz_perplexity, "t-SNE perplexity");
    cmd_viz->add_option("--iters", viz_iters, "t-SNE iterations");

    auto* cmd_report = app.add_subcommand("report", "render tables for a completed run");
    auto* cmd_run = app.add_subcommand("run", "all stages in dependency order");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = load_config(config_path, out_dir, seed, seed_set, jobs, global_vae);

        if (cmd_synth->parsed()) {
            cfg.corpus.validate();
            const std::string dir = exp::synth_stage(cfg);
            std::printf("corpus: %s (%zu subjects)\n", dir.c_str(), 2 * cfg.corpus.n_per_class);
        } else if (cmd_pre->parsed()) {
            const std::string dir = exp::preprocess_stage(cfg);
            std::printf("epochs: %s\n", dir.c_str());
        } else if (cmd_train_vae->parsed()) {
            const auto sets = epochs_from_dir(epochs_dir);
            models::VAEConfig vc = cfg.vae;
            vc.seed = cfg.seed;
            vc.n_channels = sets.at(0).n_channels;
            vc.epoch_len = sets.at(0).epoch_len;
            const auto model = models::train_vae(sets, {}, vc);
            models::save_vae(model, model_path);
            std::printf("model: %s (final reconstruction %.6f)\n", model_path.c_str(),
                        model.history.back().reconstruction);
        } else if (cmd_extract->parsed()) {
            auto model = models::load_vae(extract_model);
            const auto sets = epochs_from_dir(epochs_dir);
            const auto fm = models::extract_features(model, sets);
            exp::save_features(fm, extract_out, exp::file_digest(extract_model));
            std::printf("features: %s.bin (%zu x %zu)\n", extract_out.c_str(), fm.n_rows, fm.dim);
        } else if (cmd_train_clf->parsed()) {
            models::ClassifierModel model;
            if (clf_kind == "eegnet") {
                if (epochs_dir.empty()) throw std::runtime_error("eegnet needs --epochs");
                const auto sets = epochs_from_dir(epochs_dir);
                models::EEGNetConfig ec = cfg.eegnet;
                ec.seed = cfg.seed;
                ec.n_channels = sets.at(0).n_channels;
                ec.epoch_len = sets.at(0).epoch_len;
                model = models::train_eegnet(sets, {}, ec);
            } else {
                if (features_prefix.empty())
                    throw std::runtime_error("feature classifiers need --features");
                const auto fm = exp::load_features(features_prefix);
                if (clf_kind == "cnn1d") {
                    models::CNN1DConfig cc = cfg.cnn1d;
                    cc.seed = cfg.seed;
                    model = models::train_cnn1d(fm, {}, cc);
                } else if (clf_kind == "mlp") {
                    models::MLPConfig mc = cfg.mlp;
                    mc.seed = cfg.seed;
                    model = models::train_mlp(fm, {}, mc);
                } else if (clf_kind == "svm-rbf") {
                    models::SvmConfig sc = cfg.svm;
                    sc.seed = cfg.seed;
                    model = models::train_svm_rbf(fm, {}, sc);
                } else {
                    throw std::runtime_error("unknown classifier kind: " + clf_kind);
                }
            }
            models::save_classifier(model, clf_out);
            std::printf("classifier: %s (%s)\n", clf_out.c_str(), clf_kind.c_str());
        } else if (cmd_eval->parsed() || cmd_run->parsed()) {
            const auto report = exp::run_experiment(cfg);
            std::fputs(exp::render_report_text(report).c_str(), stdout);
            std::printf("\nreport digest: %s\n", report.digest.c_str());
        } else if (cmd_imp->parsed()) {
            FeatureMatrix fm;
            if (!imp_features.empty())
                fm = exp::load_features(imp_features);
            else if (!imp_csv.empty())
                fm = exp::load_features_delimited(imp_csv);
            else
                throw std::runtime_error("impurity needs --features or --csv");
            const auto di = impurity::dichotomy_impurity(fm);
            atomic_write_file(imp_out, impurity::di_report_to_json(di));
            std::printf("mean DI = %.6f over %zu attributes -> %s\n", di.mean_di,
                        di.attributes.size(), imp_out.c_str());
            if (!imp_baseline.empty()) {
                const auto di_b = impurity::dichotomy_impurity(exp::load_features(imp_baseline));
                const auto cmp = impurity::quantile_comparison(di, di_b);
                nlohmann::json j{{"a_tag", di.feature_tag},
                                 {"b_tag", di_b.feature_tag},
                                 {"a_first_quantile", cmp.a_sorted},
                                 {"b_first_quantile", cmp.b_sorted},
                                 {"a_min", cmp.a_min},       {"a_median", cmp.a_median},
                                 {"a_max", cmp.a_max},       {"b_min", cmp.b_min},
                                 {"b_median", cmp.b_median}, {"b_max", cmp.b_max}};
                const std::string cmp_path = imp_out + ".comparison.json";
                atomic_write_file(cmp_path, j.dump(2) + "\n");
                std::printf("baseline mean DI = %.6f; comparison -> %s\n", di_b.mean_di,
                            cmp_path.c_str());
            }
        } else if (cmd_viz->parsed()) {
            const auto fm = exp::load_features(viz_features);
            viz::TsneParams params;
            params.perplexity = viz_perplexity;
            params.n_iter = viz_iters;
            params.seed = cfg.seed;
            const auto emb = viz::tsne_project(fm, params);
            viz::save_embedding_csv(emb, viz_prefix + ".csv");
            viz::render_scatter(emb, viz::ColorBy::class_label, viz_prefix + ".class.svg");
            viz::render_scatter(emb, viz::ColorBy::subject, viz_prefix + ".subject.svg",
                                cfg.seed);
            std::printf("embedding: %s.csv (+ class/subject svg), final objective %.4f\n",
                        viz_prefix.c_str(), emb.kl_final);
        } else if (cmd_report->parsed()) {
            const auto report = exp::load_run_report(cfg.out_dir);
            std::fputs(exp::render_report_text(report).c_str(), stdout);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
