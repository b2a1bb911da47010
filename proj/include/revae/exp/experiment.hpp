#pragma once

// End-to-end experiment runner: synth -> preprocess -> per-fold training and
// evaluation of the configured pipelines -> impurity -> visualization ->
// report, with content-addressed stage caching under one output directory.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "revae/data.hpp"
#include "revae/eval/evaluation.hpp"
#include "revae/impurity/di.hpp"
#include "revae/models/classifier.hpp"
#include "revae/models/vae.hpp"
#include "revae/preprocess/pipeline.hpp"
#include "revae/synth/synthgen.hpp"

namespace revae::exp {

inline const std::vector<std::string> kKnownPipelines = {"vae+cnn1d", "vae+svm", "vae+mlp",
                                                         "raw+eegnet"};

struct VizParams {
    double perplexity = 30.0;
    std::size_t n_iter = 1000;
    bool enable = true;
};

struct ExperimentConfig {
    std::uint64_t seed = 7;
    std::string out_dir = "out";
    std::vector<std::string> pipelines{"vae+cnn1d", "raw+eegnet"};
    synth::SynthConfig corpus;   // corpus.seed tracks seed unless set explicitly
    std::string corpus_path;     // non-empty: use an existing corpus directory
    preprocess::PreprocessParams preprocessing;
    models::VAEConfig vae;
    models::EEGNetConfig eegnet;
    models::CNN1DConfig cnn1d;
    models::MLPConfig mlp;
    models::SvmConfig svm;
    VizParams viz;
    std::uint64_t fold_seed = 0;  // 0: derived from seed
    bool global_vae = false;      // one unsupervised model on all subjects
    std::size_t jobs = 0;         // worker threads; 0 = hardware default

    void validate() const;
    std::string canonical_json() const;
    static ExperimentConfig from_json_text(const std::string& text);
};

struct PipelineSummary {
    std::string name;
    eval::ScoreTable table;
};

struct PairwiseTest {
    std::string a, b;
    eval::MannWhitneyResult subject_level;
    eval::MannWhitneyResult epoch_level;
};

struct RunReport {
    std::string config_digest;
    std::vector<PipelineSummary> pipelines;
    std::vector<PairwiseTest> tests;
    std::vector<impurity::DIReport> di_reports;
    std::vector<double> spatial_difference;  // fold-averaged, 19 channels (vae runs)
    std::map<std::string, std::string> stage_digests;
    std::map<std::string, double> wall_clock_s;
    std::string digest;  // over everything except wall clock
};

RunReport run_experiment(const ExperimentConfig& cfg);

// Renders the persisted report of a completed run directory, verifying that
// the per-pipeline score files still match their recorded digests.
RunReport load_run_report(const std::string& out_dir);
std::string render_report_text(const RunReport& report);
void write_report_files(const RunReport& report, const std::string& out_dir);

// Individual stages, exposed for the CLI subcommands.
std::string synth_stage(const ExperimentConfig& cfg);        // returns corpus dir
std::string preprocess_stage(const ExperimentConfig& cfg);   // returns epochs dir

}  // namespace revae::exp
