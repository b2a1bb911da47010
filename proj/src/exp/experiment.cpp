#include "revae/exp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "revae/core/binio.hpp"
#include "revae/core/rng.hpp"
#include "revae/core/sha256.hpp"
#include "revae/exp/artifacts.hpp"
#include "revae/viz/render.hpp"
#include "revae/viz/tsne.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace revae::exp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
    std::uint64_t s = base ^ fnv1a64(tag);
    return splitmix64(s);
}

std::string fold_dir_name(std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "fold%02zu", k);
    return buf;
}

// ---- config (de)serialization -------------------------------------------

json synth_to_json(const synth::SynthConfig& c) {
    return json{{"seed", c.seed},
                {"n_per_class", c.n_per_class},
                {"channels", c.channels},
                {"native_rate_hz", c.native_rate_hz},
                {"duration_s", c.duration_s},
                {"class_snr", c.class_snr},
                {"confound_strength", c.confound_strength}};
}

void synth_from_json(const json& j, synth::SynthConfig& c) {
    c.seed = j.value("seed", c.seed);
    c.n_per_class = j.value("n_per_class", c.n_per_class);
    c.channels = j.value("channels", c.channels);
    c.native_rate_hz = j.value("native_rate_hz", c.native_rate_hz);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.class_snr = j.value("class_snr", c.class_snr);
    c.confound_strength = j.value("confound_strength", c.confound_strength);
}

json preprocess_to_json(const preprocess::PreprocessParams& p) {
    return json{{"discard_s", p.discard_s},
                {"target_rate_hz", p.target_rate_hz},
                {"bandpass_lo_hz", p.bandpass_lo_hz},
                {"bandpass_hi_hz", p.bandpass_hi_hz},
                {"epoch_s", p.epoch_s},
                {"normalize_before_epoching", p.normalize_before_epoching}};
}

void preprocess_from_json(const json& j, preprocess::PreprocessParams& p) {
    p.discard_s = j.value("discard_s", p.discard_s);
    p.target_rate_hz = j.value("target_rate_hz", p.target_rate_hz);
    p.bandpass_lo_hz = j.value("bandpass_lo_hz", p.bandpass_lo_hz);
    p.bandpass_hi_hz = j.value("bandpass_hi_hz", p.bandpass_hi_hz);
    p.epoch_s = j.value("epoch_s", p.epoch_s);
    p.normalize_before_epoching = j.value("normalize_before_epoching", p.normalize_before_epoching);
}

json vae_to_json(const models::VAEConfig& c) {
    return json{{"n_temporal_filters", c.n_temporal_filters},
                {"n_spatial_filters", c.n_spatial_filters},
                {"latent_dim", c.latent_dim},
                {"beta", c.beta},
                {"beta_warmup_epochs", c.beta_warmup_epochs},
                {"filterbank_init", c.filterbank_init},
                {"decoder_batchnorm", c.decoder_batchnorm},
                {"grad_clip_norm", c.grad_clip_norm},
                {"leaky_slope", c.leaky_slope},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"early_stop_patience", c.early_stop_patience}};
}

void vae_from_json(const json& j, models::VAEConfig& c) {
    c.n_temporal_filters = j.value("n_temporal_filters", c.n_temporal_filters);
    c.n_spatial_filters = j.value("n_spatial_filters", c.n_spatial_filters);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.beta = j.value("beta", c.beta);
    c.beta_warmup_epochs = j.value("beta_warmup_epochs", c.beta_warmup_epochs);
    c.filterbank_init = j.value("filterbank_init", c.filterbank_init);
    c.decoder_batchnorm = j.value("decoder_batchnorm", c.decoder_batchnorm);
    c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
}

json eegnet_to_json(const models::EEGNetConfig& c) {
    return json{{"f1", c.f1},
                {"depth_mult", c.depth_mult},
                {"f2", c.f2},
                {"dropout", c.dropout},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"early_stop_patience", c.early_stop_patience}};
}

void eegnet_from_json(const json& j, models::EEGNetConfig& c) {
    c.f1 = j.value("f1", c.f1);
    c.depth_mult = j.value("depth_mult", c.depth_mult);
    c.f2 = j.value("f2", c.f2);
    c.dropout = j.value("dropout", c.dropout);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
}

json cnn1d_to_json(const models::CNN1DConfig& c) {
    return json{{"conv1_filters", c.conv1_filters}, {"conv1_width", c.conv1_width},
                {"conv2_filters", c.conv2_filters}, {"conv2_width", c.conv2_width},
                {"pool1", c.pool1},                 {"drop1", c.drop1},
                {"conv3_filters", c.conv3_filters}, {"conv3_width", c.conv3_width},
                {"pool2", c.pool2},                 {"drop2", c.drop2},
                {"leaky_slope", c.leaky_slope},     {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},       {"max_epochs", c.max_epochs},
                {"early_stop_patience", c.early_stop_patience}};
}

void cnn1d_from_json(const json& j, models::CNN1DConfig& c) {
    c.conv1_filters = j.value("conv1_filters", c.conv1_filters);
    c.conv1_width = j.value("conv1_width", c.conv1_width);
    c.conv2_filters = j.value("conv2_filters", c.conv2_filters);
    c.conv2_width = j.value("conv2_width", c.conv2_width);
    c.pool1 = j.value("pool1", c.pool1);
    c.drop1 = j.value("drop1", c.drop1);
    c.conv3_filters = j.value("conv3_filters", c.conv3_filters);
    c.conv3_width = j.value("conv3_width", c.conv3_width);
    c.pool2 = j.value("pool2", c.pool2);
    c.drop2 = j.value("drop2", c.drop2);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
}

json mlp_to_json(const models::MLPConfig& c) {
    return json{{"hidden", c.hidden},
                {"dropout", c.dropout},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"early_stop_patience", c.early_stop_patience}};
}

void mlp_from_json(const json& j, models::MLPConfig& c) {
    c.hidden = j.value("hidden", c.hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
}

json svm_to_json(const models::SvmConfig& c) {
    return json{{"c_grid", c.c_grid},
                {"gamma_factors", c.gamma_factors},
                {"tolerance", c.tolerance},
                {"max_iterations", c.max_iterations}};
}

void svm_from_json(const json& j, models::SvmConfig& c) {
    c.c_grid = j.value("c_grid", c.c_grid);
    c.gamma_factors = j.value("gamma_factors", c.gamma_factors);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (pipelines.empty()) throw std::invalid_argument("config: no pipelines selected");
    for (const auto& p : pipelines) {
        if (std::find(kKnownPipelines.begin(), kKnownPipelines.end(), p) ==
            kKnownPipelines.end()) {
            std::string known;
            for (const auto& k : kKnownPipelines) known += (known.empty() ? "" : ", ") + k;
            throw std::invalid_argument("config: unknown pipeline '" + p + "' (known: " + known +
                                        ")");
        }
    }
    std::set<std::string> uniq(pipelines.begin(), pipelines.end());
    if (uniq.size() != pipelines.size())
        throw std::invalid_argument("config: duplicate pipeline entries");
    if (out_dir.empty()) throw std::invalid_argument("config: out_dir must be set");
    if (corpus_path.empty()) corpus.validate();
    vae.validate();
    eegnet.validate();
    mlp.validate();
}

std::string ExperimentConfig::canonical_json() const {
    const json j{{"seed", seed},
                 {"pipelines", pipelines},
                 {"corpus", synth_to_json(corpus)},
                 {"corpus_path", corpus_path},
                 {"preprocess", preprocess_to_json(preprocessing)},
                 {"vae", vae_to_json(vae)},
                 {"eegnet", eegnet_to_json(eegnet)},
                 {"cnn1d", cnn1d_to_json(cnn1d)},
                 {"mlp", mlp_to_json(mlp)},
                 {"svm", svm_to_json(svm)},
                 {"viz", {{"perplexity", viz.perplexity}, {"n_iter", viz.n_iter}, {"enable", viz.enable}}},
                 {"fold_seed", fold_seed},
                 {"global_vae", global_vae}};
    return j.dump();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.pipelines = j.value("pipelines", c.pipelines);
    c.corpus_path = j.value("corpus_path", c.corpus_path);
    c.corpus.seed = c.seed;
    if (j.contains("corpus")) synth_from_json(j.at("corpus"), c.corpus);
    if (j.contains("preprocess")) preprocess_from_json(j.at("preprocess"), c.preprocessing);
    if (j.contains("vae")) vae_from_json(j.at("vae"), c.vae);
    if (j.contains("eegnet")) eegnet_from_json(j.at("eegnet"), c.eegnet);
    if (j.contains("cnn1d")) cnn1d_from_json(j.at("cnn1d"), c.cnn1d);
    if (j.contains("mlp")) mlp_from_json(j.at("mlp"), c.mlp);
    if (j.contains("svm")) svm_from_json(j.at("svm"), c.svm);
    if (j.contains("viz")) {
        c.viz.perplexity = j.at("viz").value("perplexity", c.viz.perplexity);
        c.viz.n_iter = j.at("viz").value("n_iter", c.viz.n_iter);
        c.viz.enable = j.at("viz").value("enable", c.viz.enable);
    }
    c.fold_seed = j.value("fold_seed", c.fold_seed);
    c.global_vae = j.value("global_vae", c.global_vae);
    c.jobs = j.value("jobs", c.jobs);
    return c;
}

// ---- stages ---------------------------------------------------------------

std::string synth_stage(const ExperimentConfig& cfg) {
    if (!cfg.corpus_path.empty()) return cfg.corpus_path;
    const fs::path dir = fs::path(cfg.out_dir) / "corpus";
    fs::create_directories(dir);
    StageCache cache(dir);
    const std::string key = sha256_hex(synth_to_json(cfg.corpus).dump());
    if (!cache.fresh("synth", key)) {
        const auto manifest = synth::generate_corpus(cfg.corpus, dir);
        std::vector<fs::path> outputs{dir / "manifest.json"};
        for (const auto& s : manifest.subjects) outputs.push_back(dir / s.file);
        cache.commit("synth", key, outputs);
    }
    return dir.string();
}

std::string preprocess_stage(const ExperimentConfig& cfg) {
    const std::string corpus_dir = synth_stage(cfg);
    const fs::path dir = fs::path(cfg.out_dir) / "epochs";
    fs::create_directories(dir);
    StageCache cache(dir);
    const std::string key = sha256_hex(preprocess_to_json(cfg.preprocessing).dump() +
                                       file_digest(fs::path(corpus_dir) / "manifest.json"));
    if (!cache.fresh("preprocess", key)) {
        const auto manifest = synth::load_manifest(corpus_dir);
        std::vector<EpochSet> sets;
        for (std::size_t i = 0; i < manifest.subjects.size(); ++i) {
            const auto rec = synth::load_recording(corpus_dir, manifest, i);
            sets.push_back(preprocess::run_pipeline(rec, cfg.preprocessing));
        }
        preprocess::save_epoch_sets(sets, cfg.preprocessing, dir);
        std::vector<fs::path> outputs{dir / "epochs.json"};
        for (const auto& es : sets) outputs.push_back(dir / (es.subject_id + ".epochs"));
        cache.commit("preprocess", key, outputs);
    }
    return dir.string();
}

namespace {

// ---- per-fold helpers ------------------------------------------------------

struct SubjectPredictions {
    std::string subject_id;
    ClassLabel truth;
    std::vector<float> probs;  // [n_epochs][2]
    std::size_t n_epochs = 0;
};

json predictions_to_json(std::size_t fold, const std::string& clf,
                         const std::vector<SubjectPredictions>& preds) {
    json subjects = json::array();
    for (const auto& p : preds) {
        const auto vote = eval::majority_vote(p.probs, p.n_epochs);
        std::size_t correct = 0;
        for (std::size_t e = 0; e < p.n_epochs; ++e)
            correct += (p.probs[2 * e + 1] > p.probs[2 * e]) == (p.truth == ClassLabel::obese);
        json probs = json::array();
        for (std::size_t e = 0; e < p.n_epochs; ++e)
            probs.push_back(json::array({p.probs[2 * e], p.probs[2 * e + 1]}));
        subjects.push_back(json{{"id", p.subject_id},
                                {"label", int(p.truth)},
                                {"n_epochs", p.n_epochs},
                                {"correct_epochs", correct},
                                {"vote",
                                 {{"label", int(vote.label)},
                                  {"tally_lean", vote.tally_lean},
                                  {"tally_obese", vote.tally_obese},
                                  {"tie", vote.tie}}},
                                {"probs", probs}});
    }
    return json{{"fold", fold}, {"classifier", clf}, {"subjects", subjects}};
}

eval::FoldScore fold_score_from_predictions(const json& j) {
    std::vector<eval::SubjectScore> subjects;
    for (const auto& s : j.at("subjects")) {
        eval::SubjectScore ss;
        ss.subject_id = s.at("id").get<std::string>();
        ss.truth = ClassLabel(s.at("label").get<int>());
        ss.n_epochs = s.at("n_epochs").get<std::size_t>();
        ss.correct_epochs = s.at("correct_epochs").get<std::size_t>();
        const auto& v = s.at("vote");
        ss.vote.label = ClassLabel(v.at("label").get<int>());
        ss.vote.tally_lean = v.at("tally_lean").get<double>();
        ss.vote.tally_obese = v.at("tally_obese").get<double>();
        ss.vote.tie = v.at("tie").get<bool>();
        subjects.push_back(std::move(ss));
    }
    return eval::score_fold(j.at("fold").get<std::size_t>(), subjects);
}

std::vector<EpochSet> select_sets(const std::vector<EpochSet>& all,
                                  const std::vector<std::string>& ids) {
    std::vector<EpochSet> out;
    for (const auto& id : ids) {
        const auto it = std::find_if(all.begin(), all.end(),
                                     [&](const EpochSet& es) { return es.subject_id == id; });
        if (it == all.end()) throw std::runtime_error("missing epochs for subject " + id);
        out.push_back(*it);
    }
    return out;
}

FeatureMatrix select_rows(const FeatureMatrix& fm, const std::vector<std::string>& ids) {
    const std::set<std::string> wanted(ids.begin(), ids.end());
    FeatureMatrix out;
    out.dim = fm.dim;
    out.source = fm.source;
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        if (!wanted.count(fm.rows[i].subject_id)) continue;
        out.rows.push_back(fm.rows[i]);
        out.values.insert(out.values.end(), fm.row(i), fm.row(i) + fm.dim);
    }
    out.n_rows = out.rows.size();
    return out;
}

void assert_disjoint(const eval::FoldSplit& fold) {
    std::set<std::string> seen;
    for (const auto& group :
         {fold.train_subjects, fold.validation_subjects, fold.test_subjects})
        for (const auto& id : group)
            if (!seen.insert(id).second)
                throw std::logic_error("leakage guard: subject " + id +
                                       " appears in multiple splits of fold " +
                                       std::to_string(fold.fold_id));
}

void assert_training_scope(const std::vector<std::string>& used,
                           const std::vector<std::string>& allowed, const std::string& what,
                           std::size_t fold_id) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& id : used)
        if (!ok.count(id))
            throw std::logic_error("leakage guard: " + what + " trained on out-of-scope subject " +
                                   id + " in fold " + std::to_string(fold_id));
}

std::string features_digest(const FeatureMatrix& fm) {
    Sha256 ctx;
    ctx.update(fm.values.data(), fm.values.size() * sizeof(float));
    for (const auto& r : fm.rows) {
        ctx.update(r.subject_id);
        const std::uint32_t e = r.epoch_index;
        ctx.update(&e, sizeof e);
        const int l = int(r.label);
        ctx.update(&l, sizeof l);
    }
    return ctx.hex();
}

json score_table_to_json(const std::string& pipeline, const eval::ScoreTable& t) {
    json folds = json::array();
    for (const auto& f : t.folds) {
        json subjects = json::array();
        for (const auto& s : f.subjects)
            subjects.push_back(json{{"id", s.subject_id},
                                    {"label", int(s.truth)},
                                    {"voted", int(s.vote.label)},
                                    {"tally_lean", s.vote.tally_lean},
                                    {"tally_obese", s.vote.tally_obese},
                                    {"tie", s.vote.tie},
                                    {"n_epochs", s.n_epochs},
                                    {"correct_epochs", s.correct_epochs}});
        folds.push_back(json{{"fold", f.fold_id},
                             {"epoch_accuracy", f.epoch_accuracy},
                             {"subject_accuracy", f.subject_accuracy},
                             {"subjects", subjects}});
    }
    return json{{"pipeline", pipeline},
                {"folds", folds},
                {"epoch_mean", t.epoch_mean},
                {"epoch_std_over_folds", t.epoch_std_over_folds},
                {"epoch_std_over_samples", t.epoch_std_over_samples},
                {"subject_mean", t.subject_mean},
                {"subject_std_over_folds", t.subject_std_over_folds},
                {"subject_std_over_subjects", t.subject_std_over_subjects}};
}

eval::ScoreTable score_table_from_json(const json& j) {
    std::vector<eval::FoldScore> folds;
    for (const auto& f : j.at("folds")) {
        std::vector<eval::SubjectScore> subjects;
        for (const auto& s : f.at("subjects")) {
            eval::SubjectScore ss;
            ss.subject_id = s.at("id").get<std::string>();
            ss.truth = ClassLabel(s.at("label").get<int>());
            ss.vote.label = ClassLabel(s.at("voted").get<int>());
            ss.vote.tally_lean = s.at("tally_lean").get<double>();
            ss.vote.tally_obese = s.at("tally_obese").get<double>();
            ss.vote.tie = s.at("tie").get<bool>();
            ss.n_epochs = s.at("n_epochs").get<std::size_t>();
            ss.correct_epochs = s.at("correct_epochs").get<std::size_t>();
            subjects.push_back(std::move(ss));
        }
        folds.push_back(eval::score_fold(f.at("fold").get<std::size_t>(), subjects));
    }
    return eval::summarize_folds(folds);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double stop() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
#ifdef _OPENMP
    if (cfg.jobs > 0) omp_set_num_threads(int(cfg.jobs));
#endif
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    atomic_write_file(out / "config.json", cfg.canonical_json() + "\n");

    RunReport report;
    report.config_digest = sha256_hex(cfg.canonical_json());
    std::map<std::string, double>& wall = report.wall_clock_s;

    const bool want_vae = std::any_of(cfg.pipelines.begin(), cfg.pipelines.end(),
                                      [](const std::string& p) { return p.rfind("vae+", 0) == 0; });
    const bool want_eegnet = std::find(cfg.pipelines.begin(), cfg.pipelines.end(),
                                       "raw+eegnet") != cfg.pipelines.end();

    // corpus + epochs
    Timer t_synth;
    const std::string corpus_dir = synth_stage(cfg);
    wall["synth"] = t_synth.stop();
    Timer t_pre;
    const std::string epochs_dir = preprocess_stage(cfg);
    wall["preprocess"] = t_pre.stop();
    report.stage_digests["corpus"] = StageCache(fs::path(corpus_dir)).outputs_digest("synth");
    report.stage_digests["epochs"] = StageCache(fs::path(epochs_dir)).outputs_digest("preprocess");

    const std::vector<EpochSet> all_sets = preprocess::load_epoch_sets(epochs_dir);
    if (all_sets.empty()) throw std::runtime_error("no epoch sets found in " + epochs_dir);
    const std::size_t n_channels = all_sets[0].n_channels;
    const std::size_t epoch_len = all_sets[0].epoch_len;
    const std::string epochs_digest =
        StageCache(fs::path(epochs_dir)).outputs_digest("preprocess");

    // folds
    std::vector<eval::SubjectInfo> subjects;
    for (const auto& es : all_sets) subjects.push_back({es.subject_id, es.label});
    const std::uint64_t fold_seed =
        cfg.fold_seed != 0 ? cfg.fold_seed : derive_seed(cfg.seed, "folds");
    const auto folds = eval::make_subject_folds(subjects, fold_seed);
    {
        json jf = json::array();
        for (const auto& f : folds)
            jf.push_back(json{{"fold", f.fold_id},
                              {"test", f.test_subjects},
                              {"validation", f.validation_subjects},
                              {"train", f.train_subjects}});
        atomic_write_file(out / "folds.json",
                          json{{"seed", fold_seed}, {"folds", jf}}.dump(2) + "\n");
    }

    // optional global unsupervised model (permissive protocol)
    models::TrainedVAE global_model;
    bool have_global = false;
    if (want_vae && cfg.global_vae) {
        Timer t;
        const fs::path dir = out / "folds";
        fs::create_directories(dir);
        StageCache cache(dir);
        const std::string key =
            sha256_hex(vae_to_json(cfg.vae).dump() + epochs_digest + "global");
        const fs::path ckpt = dir / "vae_global.ckpt";
        if (!cache.fresh("vae_global", key)) {
            models::VAEConfig vc = cfg.vae;
            vc.seed = derive_seed(cfg.seed, "vae/global");
            vc.n_channels = n_channels;
            vc.epoch_len = epoch_len;
            global_model = models::train_vae(all_sets, {}, vc);
            models::save_vae(global_model, ckpt);
            cache.commit("vae_global", key, {ckpt});
        } else {
            global_model = models::load_vae(ckpt);
        }
        have_global = true;
        wall["vae_global"] = t.stop();
    }

    // per-fold artifacts
    std::map<std::string, std::vector<eval::FoldScore>> fold_scores;  // pipeline -> folds
    FeatureMatrix pooled_vae, pooled_eegnet;
    std::vector<double> spatial_diff_sum(n_channels, 0.0), spatial_lean_sum(n_channels, 0.0),
        spatial_obese_sum(n_channels, 0.0);
    std::size_t spatial_folds = 0;

    for (const auto& fold : folds) {
        assert_disjoint(fold);
        const fs::path fdir = out / "folds" / fold_dir_name(fold.fold_id);
        fs::create_directories(fdir);
        StageCache cache(fdir);
        const std::string membership = [&] {
            json m{{"test", fold.test_subjects},
                   {"validation", fold.validation_subjects},
                   {"train", fold.train_subjects}};
            return m.dump();
        }();

        const auto train_sets = select_sets(all_sets, fold.train_subjects);
        const auto val_sets = select_sets(all_sets, fold.validation_subjects);
        const auto test_sets = select_sets(all_sets, fold.test_subjects);

        FeatureMatrix fold_features;  // all subjects, this fold's encoder
        if (want_vae) {
            Timer t;
            const std::string key = sha256_hex(vae_to_json(cfg.vae).dump() + epochs_digest +
                                               membership + (cfg.global_vae ? "g" : "f"));
            const fs::path ckpt = fdir / "vae.ckpt";
            const fs::path feat_prefix = fdir / "features_all";
            const fs::path spatial_path = fdir / "spatial.json";
            if (!cache.fresh("vae", key)) {
                models::TrainedVAE model;
                if (cfg.global_vae) {
                    model = global_model;
                } else {
                    models::VAEConfig vc = cfg.vae;
                    vc.seed = derive_seed(cfg.seed, "vae/" + std::to_string(fold.fold_id));
                    vc.n_channels = n_channels;
                    vc.epoch_len = epoch_len;
                    std::vector<std::string> used;
                    for (const auto& es : train_sets) used.push_back(es.subject_id);
                    assert_training_scope(used, fold.train_subjects, "vae", fold.fold_id);
                    model = models::train_vae(train_sets, val_sets, vc);
                    models::save_vae(model, ckpt);
                }
                fold_features = models::extract_features(model, all_sets);
                save_features(fold_features, feat_prefix,
                              cfg.global_vae ? "global" : file_digest(ckpt));

                // out-of-sample spatial patterns on the held-out subjects
                std::vector<EpochSet> test_lean, test_obese;
                for (const auto& es : test_sets)
                    (es.label == ClassLabel::lean ? test_lean : test_obese).push_back(es);
                const auto sp = models::spatial_patterns(model, test_lean, test_obese);
                json js{{"lean", sp.lean}, {"obese", sp.obese}, {"difference", sp.difference}};
                atomic_write_file(spatial_path, js.dump(2) + "\n");

                std::vector<fs::path> outputs{feat_prefix.string() + ".bin",
                                              feat_prefix.string() + ".json", spatial_path};
                if (!cfg.global_vae) outputs.push_back(ckpt);
                cache.commit("vae", key, outputs);
            } else {
                fold_features = load_features(feat_prefix);
            }
            const json sp = json::parse(read_text_file(spatial_path));
            const auto lean_v = sp.at("lean").get<std::vector<double>>();
            const auto obese_v = sp.at("obese").get<std::vector<double>>();
            const auto diff_v = sp.at("difference").get<std::vector<double>>();
            for (std::size_t c = 0; c < n_channels; ++c) {
                spatial_lean_sum[c] += lean_v[c];
                spatial_obese_sum[c] += obese_v[c];
                spatial_diff_sum[c] += diff_v[c];
            }
            ++spatial_folds;

            // pool the held-out subjects' rows
            const auto test_rows = select_rows(fold_features, fold.test_subjects);
            pooled_vae.dim = test_rows.dim;
            pooled_vae.source = test_rows.source;
            pooled_vae.rows.insert(pooled_vae.rows.end(), test_rows.rows.begin(),
                                   test_rows.rows.end());
            pooled_vae.values.insert(pooled_vae.values.end(), test_rows.values.begin(),
                                     test_rows.values.end());
            pooled_vae.n_rows = pooled_vae.rows.size();
            wall["vae_folds"] += t.stop();
        }

        // feature-space classifiers
        for (const auto& pipeline : cfg.pipelines) {
            if (pipeline.rfind("vae+", 0) != 0) continue;
            const std::string clf = pipeline.substr(4);
            Timer t;
            const std::string key =
                sha256_hex(clf + features_digest(fold_features) + membership +
                           (clf == "cnn1d"  ? cnn1d_to_json(cfg.cnn1d).dump()
                            : clf == "mlp" ? mlp_to_json(cfg.mlp).dump()
                                           : svm_to_json(cfg.svm).dump()));
            const fs::path pred_path = fdir / ("pred_" + clf + ".json");
            const fs::path ckpt = fdir / ("clf_" + clf + ".ckpt");
            if (!cache.fresh("clf_" + clf, key)) {
                const auto train_rows = select_rows(fold_features, fold.train_subjects);
                const auto val_rows = select_rows(fold_features, fold.validation_subjects);
                models::ClassifierModel model;
                if (clf == "cnn1d") {
                    models::CNN1DConfig cc = cfg.cnn1d;
                    cc.seed = derive_seed(cfg.seed, pipeline + std::to_string(fold.fold_id));
                    model = models::train_cnn1d(train_rows, val_rows, cc);
                } else if (clf == "mlp") {
                    models::MLPConfig mc = cfg.mlp;
                    mc.seed = derive_seed(cfg.seed, pipeline + std::to_string(fold.fold_id));
                    model = models::train_mlp(train_rows, val_rows, mc);
                } else {
                    models::SvmConfig sc = cfg.svm;
                    sc.seed = derive_seed(cfg.seed, pipeline + std::to_string(fold.fold_id));
                    model = models::train_svm_rbf(train_rows, val_rows, sc);
                }
                models::save_classifier(model, ckpt);

                std::vector<SubjectPredictions> preds;
                for (const auto& id : fold.test_subjects) {
                    const auto rows = select_rows(fold_features, {id});
                    SubjectPredictions sp;
                    sp.subject_id = id;
                    sp.truth = rows.rows.front().label;
                    sp.n_epochs = rows.n_rows;
                    sp.probs = models::predict(model, rows.values.data(), rows.n_rows, rows.dim);
                    preds.push_back(std::move(sp));
                }
                atomic_write_file(pred_path,
                                  predictions_to_json(fold.fold_id, clf, preds).dump(2) + "\n");
                cache.commit("clf_" + clf, key, {ckpt, pred_path});
            }
            fold_scores[pipeline].push_back(
                fold_score_from_predictions(json::parse(read_text_file(pred_path))));
            wall[pipeline] += t.stop();
        }

        // raw-input baseline
        if (want_eegnet) {
            Timer t;
            const std::string key =
                sha256_hex(eegnet_to_json(cfg.eegnet).dump() + epochs_digest + membership);
            const fs::path pred_path = fdir / "pred_eegnet.json";
            const fs::path ckpt = fdir / "eegnet.ckpt";
            const fs::path feat_prefix = fdir / "eegnet_features_test";
            if (!cache.fresh("eegnet", key)) {
                models::EEGNetConfig ec = cfg.eegnet;
                ec.seed = derive_seed(cfg.seed, "eegnet/" + std::to_string(fold.fold_id));
                ec.n_channels = n_channels;
                ec.epoch_len = epoch_len;
                std::vector<std::string> used;
                for (const auto& es : train_sets) used.push_back(es.subject_id);
                assert_training_scope(used, fold.train_subjects, "eegnet", fold.fold_id);
                auto model = models::train_eegnet(train_sets, val_sets, ec);
                models::save_classifier(model, ckpt);

                std::vector<SubjectPredictions> preds;
                for (const auto& es : test_sets) {
                    SubjectPredictions sp;
                    sp.subject_id = es.subject_id;
                    sp.truth = es.label;
                    sp.n_epochs = es.n_epochs;
                    sp.probs =
                        models::predict(model, es.epochs.data(), es.n_epochs, es.epoch_numel());
                    preds.push_back(std::move(sp));
                }
                atomic_write_file(
                    pred_path, predictions_to_json(fold.fold_id, "eegnet", preds).dump(2) + "\n");

                const auto feats = models::eegnet_penultimate_features(model, test_sets);
                save_features(feats, feat_prefix, file_digest(ckpt));
                cache.commit("eegnet", key,
                             {ckpt, pred_path, feat_prefix.string() + ".bin",
                              feat_prefix.string() + ".json"});
            }
            fold_scores["raw+eegnet"].push_back(
                fold_score_from_predictions(json::parse(read_text_file(pred_path))));
            const auto feats = load_features(feat_prefix);
            pooled_eegnet.dim = feats.dim;
            pooled_eegnet.source = feats.source;
            pooled_eegnet.rows.insert(pooled_eegnet.rows.end(), feats.rows.begin(),
                                      feats.rows.end());
            pooled_eegnet.values.insert(pooled_eegnet.values.end(), feats.values.begin(),
                                        feats.values.end());
            pooled_eegnet.n_rows = pooled_eegnet.rows.size();
            wall["raw+eegnet"] += t.stop();
        }
    }

    // score tables
    fs::create_directories(out / "scores");
    for (const auto& pipeline : cfg.pipelines) {
        const auto table = eval::summarize_folds(fold_scores.at(pipeline));
        report.pipelines.push_back(PipelineSummary{pipeline, table});
        atomic_write_file(out / "scores" / (pipeline + ".json"),
                          score_table_to_json(pipeline, table).dump(2) + "\n");
    }

    // pairwise significance tests on the per-fold accuracy lists
    for (std::size_t i = 0; i < report.pipelines.size(); ++i)
        for (std::size_t j = i + 1; j < report.pipelines.size(); ++j) {
            PairwiseTest pt;
            pt.a = report.pipelines[i].name;
            pt.b = report.pipelines[j].name;
            pt.subject_level =
                eval::mann_whitney_u(report.pipelines[i].table.fold_subject_accuracies(),
                                     report.pipelines[j].table.fold_subject_accuracies());
            pt.epoch_level =
                eval::mann_whitney_u(report.pipelines[i].table.fold_epoch_accuracies(),
                                     report.pipelines[j].table.fold_epoch_accuracies());
            report.tests.push_back(pt);
        }

    // dichotomy impurity per feature scheme (held-out rows pooled over folds)
    {
        Timer t;
        fs::create_directories(out / "di");
        std::vector<const FeatureMatrix*> schemes;
        if (pooled_vae.n_rows > 0) schemes.push_back(&pooled_vae);
        if (pooled_eegnet.n_rows > 0) schemes.push_back(&pooled_eegnet);
        for (const FeatureMatrix* fm : schemes) {
            const auto di = impurity::dichotomy_impurity(*fm);
            report.di_reports.push_back(di);
            atomic_write_file(out / "di" / (fm->source + ".json"),
                              impurity::di_report_to_json(di));
        }
        if (report.di_reports.size() == 2) {
            const auto cmp = impurity::quantile_comparison(report.di_reports[0],
                                                           report.di_reports[1]);
            const json j{{"a_tag", report.di_reports[0].feature_tag},
                         {"b_tag", report.di_reports[1].feature_tag},
                         {"a_first_quantile", cmp.a_sorted},
                         {"b_first_quantile", cmp.b_sorted},
                         {"a_min", cmp.a_min},   {"a_median", cmp.a_median},
                         {"a_max", cmp.a_max},   {"b_min", cmp.b_min},
                         {"b_median", cmp.b_median}, {"b_max", cmp.b_max}};
            atomic_write_file(out / "di" / "quantile_comparison.json", j.dump(2) + "\n");
        }
        wall["impurity"] = t.stop();
    }

    if (spatial_folds > 0) {
        report.spatial_difference.resize(n_channels);
        for (std::size_t c = 0; c < n_channels; ++c)
            report.spatial_difference[c] = spatial_diff_sum[c] / double(spatial_folds);
    }

    // visualization
    if (cfg.viz.enable) {
        Timer t;
        fs::create_directories(out / "viz");
        const auto run_viz = [&](const FeatureMatrix& fm, const std::string& tag) {
            if (fm.n_rows == 0) return;
            viz::TsneParams params;
            params.n_iter = cfg.viz.n_iter;
            params.perplexity =
                std::min(cfg.viz.perplexity, std::max(2.0, double(fm.n_rows - 1) / 4.0));
            params.seed = derive_seed(cfg.seed, "tsne/" + tag);
            const auto emb = viz::tsne_project(fm, params);
            viz::save_embedding_csv(emb, out / "viz" / (tag + ".csv"));
            viz::render_scatter(emb, viz::ColorBy::class_label,
                                out / "viz" / (tag + ".class.svg"));
            viz::render_scatter(emb, viz::ColorBy::subject, out / "viz" / (tag + ".subject.svg"),
                                derive_seed(cfg.seed, "scatter/" + tag));
        };
        run_viz(pooled_vae, "vae-mu");
        run_viz(pooled_eegnet, "eegnet-penultimate");

        if (spatial_folds > 0 && n_channels == kNumChannels) {
            const std::vector<std::string> names(kMontage10_20.begin(), kMontage10_20.end());
            std::vector<double> lean(n_channels), obese(n_channels);
            for (std::size_t c = 0; c < n_channels; ++c) {
                lean[c] = spatial_lean_sum[c] / double(spatial_folds);
                obese[c] = spatial_obese_sum[c] / double(spatial_folds);
            }
            viz::render_topomap(lean, names, out / "viz" / "spatial_lean.svg");
            viz::render_topomap(obese, names, out / "viz" / "spatial_obese.svg");
            viz::render_topomap(report.spatial_difference, names,
                                out / "viz" / "spatial_difference.svg");
        }
        wall["visualize"] = t.stop();
    }

    write_report_files(report, cfg.out_dir);
    return report;
}

namespace {

json report_to_json(const RunReport& r, bool with_volatile) {
    json pipelines = json::array();
    for (const auto& p : r.pipelines) pipelines.push_back(score_table_to_json(p.name, p.table));
    json tests = json::array();
    for (const auto& t : r.tests)
        tests.push_back(json{{"a", t.a},
                             {"b", t.b},
                             {"subject_level",
                              {{"u_a", t.subject_level.u_a},
                               {"u_b", t.subject_level.u_b},
                               {"p", t.subject_level.p_two_sided},
                               {"exact", t.subject_level.exact}}},
                             {"epoch_level",
                              {{"u_a", t.epoch_level.u_a},
                               {"u_b", t.epoch_level.u_b},
                               {"p", t.epoch_level.p_two_sided},
                               {"exact", t.epoch_level.exact}}}});
    json di = json::array();
    for (const auto& d : r.di_reports)
        di.push_back(json{{"tag", d.feature_tag}, {"mean_di", d.mean_di}});
    json j{{"config_digest", r.config_digest},
           {"pipelines", pipelines},
           {"tests", tests},
           {"di", di},
           {"spatial_difference", r.spatial_difference},
           {"stage_digests", r.stage_digests}};
    if (with_volatile) {
        j["digest"] = r.digest;
        j["wall_clock_s"] = r.wall_clock_s;
    }
    return j;
}

}  // namespace

void write_report_files(const RunReport& report, const std::string& out_dir) {
    RunReport& mut = const_cast<RunReport&>(report);
    mut.digest = sha256_hex(report_to_json(report, false).dump());
    atomic_write_file(fs::path(out_dir) / "report.json",
                      report_to_json(mut, true).dump(2) + "\n");
    atomic_write_file(fs::path(out_dir) / "report.txt", render_report_text(mut));
}

RunReport load_run_report(const std::string& out_dir) {
    const fs::path out(out_dir);
    if (!fs::exists(out / "report.json"))
        throw std::runtime_error("incomplete run: missing " + (out / "report.json").string());
    const json j = json::parse(read_text_file(out / "report.json"));

    RunReport r;
    r.config_digest = j.at("config_digest").get<std::string>();
    r.digest = j.at("digest").get<std::string>();
    for (const auto& [k, v] : j.at("stage_digests").items())
        r.stage_digests[k] = v.get<std::string>();
    if (j.contains("wall_clock_s"))
        for (const auto& [k, v] : j.at("wall_clock_s").items())
            r.wall_clock_s[k] = v.get<double>();
    r.spatial_difference = j.value("spatial_difference", std::vector<double>{});

    for (const auto& p : j.at("pipelines")) {
        const std::string name = p.at("pipeline").get<std::string>();
        // integrity: the standalone score file must match the report copy
        const fs::path score_file = out / "scores" / (name + ".json");
        if (!fs::exists(score_file))
            throw std::runtime_error("integrity error: missing score file " +
                                     score_file.string());
        const json on_disk = json::parse(read_text_file(score_file));
        eval::ScoreTable from_disk;
        try {
            from_disk = score_table_from_json(on_disk);
        } catch (const std::exception& e) {
            throw std::runtime_error("integrity error: corrupt score file " +
                                     score_file.string() + ": " + e.what());
        }
        const eval::ScoreTable from_report = score_table_from_json(p);
        if (std::abs(from_disk.epoch_mean - from_report.epoch_mean) > 1e-12 ||
            std::abs(from_disk.subject_mean - from_report.subject_mean) > 1e-12)
            throw std::runtime_error("integrity error: score file disagrees with report: " +
                                     score_file.string());
        r.pipelines.push_back(PipelineSummary{name, from_disk});
    }
    for (const auto& t : j.at("tests")) {
        PairwiseTest pt;
        pt.a = t.at("a").get<std::string>();
        pt.b = t.at("b").get<std::string>();
        pt.subject_level.u_a = t.at("subject_level").at("u_a").get<double>();
        pt.subject_level.u_b = t.at("subject_level").at("u_b").get<double>();
        pt.subject_level.p_two_sided = t.at("subject_level").at("p").get<double>();
        pt.subject_level.exact = t.at("subject_level").at("exact").get<bool>();
        pt.epoch_level.u_a = t.at("epoch_level").at("u_a").get<double>();
        pt.epoch_level.u_b = t.at("epoch_level").at("u_b").get<double>();
        pt.epoch_level.p_two_sided = t.at("epoch_level").at("p").get<double>();
        pt.epoch_level.exact = t.at("epoch_level").at("exact").get<bool>();
        r.tests.push_back(pt);
    }
    for (const auto& d : j.at("di")) {
        const fs::path di_file = out / "di" / (d.at("tag").get<std::string>() + ".json");
        if (fs::exists(di_file))
            r.di_reports.push_back(impurity::di_report_from_json(read_text_file(di_file)));
    }
    return r;
}

std::string render_report_text(const RunReport& report) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(3);
    ss << "pipeline        subject-level          epoch-level\n";
    ss << "--------------------------------------------------------\n";
    for (const auto& p : report.pipelines) {
        ss << p.name;
        for (std::size_t k = p.name.size(); k < 16; ++k) ss << ' ';
        ss << p.table.subject_mean << " +/- " << p.table.subject_std_over_folds << "    "
           << p.table.epoch_mean << " +/- " << p.table.epoch_std_over_folds << "\n";
    }
    if (!report.tests.empty()) {
        ss << "\nmann-whitney u (two-sided, per-fold accuracies)\n";
        for (const auto& t : report.tests) {
            ss.precision(4);
            ss << "  " << t.a << " vs " << t.b << ": subject-level U=" << t.subject_level.u_a
               << " p=" << t.subject_level.p_two_sided << ", epoch-level U=" << t.epoch_level.u_a
               << " p=" << t.epoch_level.p_two_sided << "\n";
            ss.precision(3);
        }
    }
    if (!report.di_reports.empty()) {
        ss << "\ndichotomy impurity (lower = more separable)\n";
        for (const auto& d : report.di_reports)
            ss << "  " << d.feature_tag << ": mean DI = " << d.mean_di << "\n";
    }
    if (!report.spatial_difference.empty()) {
        ss << "\nspatial |obese - lean| by channel\n  ";
        for (std::size_t c = 0; c < report.spatial_difference.size(); ++c) {
            ss << kMontage10_20[c] << "=" << report.spatial_difference[c];
            ss << (c + 1 == report.spatial_difference.size() ? "\n" : " ");
        }
    }
    return ss.str();
}

}  // namespace revae::exp
