#include "revae/models/classifier.hpp"

#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "revae/nn/checkpoint.hpp"

namespace revae::models {

using nlohmann::json;

const char* to_string(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::eegnet: return "eegnet";
        case ClassifierKind::svm_rbf: return "svm-rbf";
        case ClassifierKind::mlp: return "mlp";
        case ClassifierKind::cnn1d: return "cnn1d";
    }
    return "?";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "eegnet") return ClassifierKind::eegnet;
    if (s == "svm-rbf") return ClassifierKind::svm_rbf;
    if (s == "mlp") return ClassifierKind::mlp;
    if (s == "cnn1d") return ClassifierKind::cnn1d;
    throw std::invalid_argument("unknown classifier kind: " + s);
}

namespace {

struct LabeledRows {
    std::vector<float> X;
    std::vector<int> y;
    std::size_t n = 0;
    std::size_t numel = 0;
};

LabeledRows rows_from_epochs(const std::vector<EpochSet>& sets) {
    LabeledRows out;
    for (const auto& es : sets) {
        if (out.numel == 0) out.numel = es.epoch_numel();
        if (es.epoch_numel() != out.numel)
            throw std::invalid_argument("epoch sets disagree on shape");
        for (std::size_t e = 0; e < es.n_epochs; ++e) {
            out.X.insert(out.X.end(), es.epoch(e), es.epoch(e) + out.numel);
            out.y.push_back(int(es.label));
            ++out.n;
        }
    }
    return out;
}

LabeledRows rows_from_features(const FeatureMatrix& fm) {
    LabeledRows out;
    out.numel = fm.dim;
    out.n = fm.n_rows;
    out.X = fm.values;
    for (const auto& r : fm.rows) out.y.push_back(int(r.label));
    return out;
}

std::vector<float> softmax_rows(const std::vector<float>& logits, std::size_t n) {
    std::vector<float> probs(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const float a = logits[2 * i], b = logits[2 * i + 1];
        const float m = std::max(a, b);
        const double ea = std::exp(double(a - m)), eb = std::exp(double(b - m));
        probs[2 * i] = float(ea / (ea + eb));
        probs[2 * i + 1] = float(eb / (ea + eb));
    }
    return probs;
}

}  // namespace

std::vector<float> predict(ClassifierModel& model, const float* X, std::size_t n_rows,
                           std::size_t row_numel) {
    const std::size_t expect =
        model.raw_input ? model.input_channels * model.input_len : model.feature_dim;
    if (row_numel != expect)
        throw std::invalid_argument("predict: input rows of " + std::to_string(row_numel) +
                                    " values do not match the model contract of " +
                                    std::to_string(expect));
    std::vector<float> probs(n_rows * 2);
    Rng dummy(0);
    const std::size_t chunk = 256;
    for (std::size_t begin = 0; begin < n_rows; begin += chunk) {
        const std::size_t count = std::min(chunk, n_rows - begin);
        const float* rows = X + begin * row_numel;
        std::vector<float> part;
        switch (model.kind) {
            case ClassifierKind::eegnet:
                model.eegnet->forward(rows, count, false, dummy);
                part = softmax_rows(model.eegnet->logits(), count);
                break;
            case ClassifierKind::cnn1d:
                model.cnn1d->forward(rows, count, false, dummy);
                part = softmax_rows(model.cnn1d->logits(), count);
                break;
            case ClassifierKind::mlp:
                model.mlp->forward(rows, count, false, dummy);
                part = softmax_rows(model.mlp->logits(), count);
                break;
            case ClassifierKind::svm_rbf: {
                part.resize(count * 2);
                for (std::size_t i = 0; i < count; ++i) {
                    const double p1 = model.svm->probability(rows + i * row_numel);
                    part[2 * i] = float(1.0 - p1);
                    part[2 * i + 1] = float(p1);
                }
                break;
            }
        }
        std::copy(part.begin(), part.end(), probs.begin() + begin * 2);
    }
    return probs;
}

ClassifierModel train_eegnet(const std::vector<EpochSet>& train_sets,
                             const std::vector<EpochSet>& val_sets, EEGNetConfig cfg) {
    const LabeledRows train = rows_from_epochs(train_sets);
    const LabeledRows val = rows_from_epochs(val_sets);
    if (!train_sets.empty()) {
        cfg.n_channels = train_sets[0].n_channels;
        cfg.epoch_len = train_sets[0].epoch_len;
    }
    ClassifierModel model;
    model.kind = ClassifierKind::eegnet;
    model.raw_input = true;
    model.input_channels = cfg.n_channels;
    model.input_len = cfg.epoch_len;
    model.eegnet = std::make_shared<EEGNetNet<float>>(cfg);

    TrainOpts opts;
    opts.learning_rate = cfg.learning_rate;
    opts.batch_size = cfg.batch_size;
    opts.max_epochs = cfg.max_epochs;
    opts.early_stop_patience = cfg.early_stop_patience;
    opts.seed = cfg.seed;
    model.history = train_supervised(*model.eegnet, train.X.data(), train.y.data(), train.n,
                                     val.X.data(), val.y.data(), val.n, opts);
    return model;
}

FeatureMatrix eegnet_penultimate_features(ClassifierModel& model,
                                          const std::vector<EpochSet>& sets) {
    if (model.kind != ClassifierKind::eegnet)
        throw std::invalid_argument("penultimate features need an eegnet model");
    FeatureMatrix fm;
    fm.dim = model.eegnet->penultimate_dim();
    fm.source = "eegnet-penultimate";
    Rng dummy(0);
    for (const auto& es : sets) {
        const std::size_t numel = es.epoch_numel();
        const std::size_t chunk = 128;
        for (std::size_t begin = 0; begin < es.n_epochs; begin += chunk) {
            const std::size_t count = std::min(chunk, es.n_epochs - begin);
            model.eegnet->forward(es.epoch(begin), count, false, dummy);
            const auto& feats = model.eegnet->penultimate();
            fm.values.insert(fm.values.end(), feats.begin(), feats.begin() + count * fm.dim);
            for (std::size_t i = 0; i < count; ++i)
                fm.rows.push_back(FeatureRow{es.subject_id, std::uint32_t(begin + i), es.label});
            (void)numel;
        }
    }
    fm.n_rows = fm.rows.size();
    return fm;
}

ClassifierModel train_cnn1d(const FeatureMatrix& train, const FeatureMatrix& val,
                            CNN1DConfig cfg) {
    cfg.input_dim = train.dim;
    const LabeledRows tr = rows_from_features(train);
    const LabeledRows va = rows_from_features(val);

    ClassifierModel model;
    model.kind = ClassifierKind::cnn1d;
    model.feature_dim = train.dim;
    model.cnn1d = std::make_shared<Cnn1dNet<float>>(cfg);

    TrainOpts opts;
    opts.learning_rate = cfg.learning_rate;
    opts.batch_size = cfg.batch_size;
    opts.max_epochs = cfg.max_epochs;
    opts.early_stop_patience = cfg.early_stop_patience;
    opts.seed = cfg.seed;
    model.history = train_supervised(*model.cnn1d, tr.X.data(), tr.y.data(), tr.n, va.X.data(),
                                     va.y.data(), va.n, opts);
    return model;
}

ClassifierModel train_mlp(const FeatureMatrix& train, const FeatureMatrix& val, MLPConfig cfg) {
    cfg.input_dim = train.dim;
    const LabeledRows tr = rows_from_features(train);
    const LabeledRows va = rows_from_features(val);

    ClassifierModel model;
    model.kind = ClassifierKind::mlp;
    model.feature_dim = train.dim;
    model.mlp = std::make_shared<MlpNet<float>>(cfg);

    TrainOpts opts;
    opts.learning_rate = cfg.learning_rate;
    opts.batch_size = cfg.batch_size;
    opts.max_epochs = cfg.max_epochs;
    opts.early_stop_patience = cfg.early_stop_patience;
    opts.seed = cfg.seed;
    model.history = train_supervised(*model.mlp, tr.X.data(), tr.y.data(), tr.n, va.X.data(),
                                     va.y.data(), va.n, opts);
    return model;
}

ClassifierModel train_svm_rbf(const FeatureMatrix& train, const FeatureMatrix& val,
                              SvmConfig cfg) {
    const LabeledRows tr = rows_from_features(train);
    const LabeledRows va = rows_from_features(val);

    ClassifierModel model;
    model.kind = ClassifierKind::svm_rbf;
    model.feature_dim = train.dim;
    model.svm = std::make_shared<SvmModel>(models::train_svm_rbf(
        tr.X.data(), tr.y.data(), tr.n, train.dim, va.X.data(), va.y.data(), va.n, cfg));
    return model;
}

namespace {

json history_json(const std::vector<EpochStats>& h) {
    json arr = json::array();
    for (const auto& e : h)
        arr.push_back(json{{"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"train_accuracy", e.train_accuracy},
                           {"val_accuracy", e.val_accuracy}});
    return arr;
}

std::vector<EpochStats> history_from_json(const json& arr) {
    std::vector<EpochStats> h;
    for (const auto& e : arr) {
        EpochStats s;
        s.train_loss = e.at("train_loss").get<double>();
        s.val_loss = e.at("val_loss").get<double>();
        s.train_accuracy = e.at("train_accuracy").get<double>();
        s.val_accuracy = e.at("val_accuracy").get<double>();
        h.push_back(s);
    }
    return h;
}

template <class Net>
void save_net(nn::ArchiveEntries& entries, Net& net) {
    for (const auto& p : net.params())
        entries.emplace_back("param/" + p.name,
                             nn::floats_to_bytes(std::vector<float>(p.value, p.value + p.n)));
    for (const auto& s : net.state())
        entries.emplace_back("state/" + s.name,
                             nn::floats_to_bytes(std::vector<float>(s.value, s.value + s.n)));
}

template <class Net>
void load_net(const nn::ArchiveEntries& entries, Net& net) {
    for (const auto& p : net.params()) {
        const std::string* bytes = nn::find_entry(entries, "param/" + p.name);
        if (!bytes) throw std::runtime_error("checkpoint: missing tensor " + p.name);
        const auto v = nn::bytes_to_floats(*bytes);
        if (v.size() != p.n) throw std::runtime_error("checkpoint: size mismatch " + p.name);
        std::copy(v.begin(), v.end(), p.value);
    }
    for (const auto& s : net.state()) {
        const std::string* bytes = nn::find_entry(entries, "state/" + s.name);
        if (!bytes) throw std::runtime_error("checkpoint: missing state " + s.name);
        const auto v = nn::bytes_to_floats(*bytes);
        if (v.size() != s.n) throw std::runtime_error("checkpoint: size mismatch " + s.name);
        std::copy(v.begin(), v.end(), s.value);
    }
}

}  // namespace

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path) {
    auto& m = const_cast<ClassifierModel&>(model);
    nn::ArchiveEntries entries;
    json cfg{{"kind", to_string(model.kind)},
             {"raw_input", model.raw_input},
             {"input_channels", model.input_channels},
             {"input_len", model.input_len},
             {"feature_dim", model.feature_dim},
             {"history", history_json(model.history)}};
    switch (model.kind) {
        case ClassifierKind::eegnet: {
            const auto& c = m.eegnet->config();
            cfg["eegnet"] = json{{"f1", c.f1},
                                 {"depth_mult", c.depth_mult},
                                 {"f2", c.f2},
                                 {"dropout", c.dropout},
                                 {"learning_rate", c.learning_rate},
                                 {"batch_size", c.batch_size},
                                 {"max_epochs", c.max_epochs},
                                 {"early_stop_patience", c.early_stop_patience},
                                 {"seed", c.seed},
                                 {"n_channels", c.n_channels},
                                 {"epoch_len", c.epoch_len},
                                 {"temporal_kernel", c.temporal_kernel},
                                 {"separable_kernel", c.separable_kernel},
                                 {"pool1", c.pool1},
                                 {"pool2", c.pool2}};
            entries.emplace_back("config.json", cfg.dump(2));
            save_net(entries, *m.eegnet);
            break;
        }
        case ClassifierKind::cnn1d: {
            const auto& c = m.cnn1d->config();
            cfg["cnn1d"] = json{{"conv1_filters", c.conv1_filters}, {"conv1_width", c.conv1_width},
                                {"conv2_filters", c.conv2_filters}, {"conv2_width", c.conv2_width},
                                {"pool1", c.pool1},                 {"drop1", c.drop1},
                                {"conv3_filters", c.conv3_filters}, {"conv3_width", c.conv3_width},
                                {"pool2", c.pool2},                 {"drop2", c.drop2},
                                {"leaky_slope", c.leaky_slope},     {"learning_rate", c.learning_rate},
                                {"batch_size", c.batch_size},       {"max_epochs", c.max_epochs},
                                {"early_stop_patience", c.early_stop_patience},
                                {"seed", c.seed},                   {"input_dim", c.input_dim}};
            entries.emplace_back("config.json", cfg.dump(2));
            save_net(entries, *m.cnn1d);
            break;
        }
        case ClassifierKind::mlp: {
            const auto& c = m.mlp->config();
            cfg["mlp"] = json{{"hidden", c.hidden},
                              {"dropout", c.dropout},
                              {"learning_rate", c.learning_rate},
                              {"batch_size", c.batch_size},
                              {"max_epochs", c.max_epochs},
                              {"early_stop_patience", c.early_stop_patience},
                              {"seed", c.seed},
                              {"input_dim", c.input_dim}};
            entries.emplace_back("config.json", cfg.dump(2));
            save_net(entries, *m.mlp);
            break;
        }
        case ClassifierKind::svm_rbf: {
            const auto& s = *m.svm;
            cfg["svm"] = json{{"dim", s.dim},
                              {"gamma", s.gamma},
                              {"c", s.c},
                              {"rho", s.rho},
                              {"platt_a", s.platt_a},
                              {"platt_b", s.platt_b},
                              {"degenerate", s.degenerate},
                              {"majority_label", s.majority_label}};
            entries.emplace_back("config.json", cfg.dump(2));
            entries.emplace_back("param/support_vectors", nn::floats_to_bytes(s.support_vectors));
            entries.emplace_back(
                "param/coef",
                nn::floats_to_bytes(std::vector<float>(s.coef.begin(), s.coef.end())));
            break;
        }
    }
    nn::save_archive(path, entries);
}

ClassifierModel load_classifier(const std::filesystem::path& path) {
    const auto entries = nn::load_archive(path);
    const std::string* cfg_s = nn::find_entry(entries, "config.json");
    if (!cfg_s) throw std::runtime_error("checkpoint: missing config.json");
    const json j = json::parse(*cfg_s);

    ClassifierModel model;
    model.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    model.raw_input = j.at("raw_input").get<bool>();
    model.input_channels = j.at("input_channels").get<std::size_t>();
    model.input_len = j.at("input_len").get<std::size_t>();
    model.feature_dim = j.at("feature_dim").get<std::size_t>();
    model.history = history_from_json(j.at("history"));

    switch (model.kind) {
        case ClassifierKind::eegnet: {
            const json& c = j.at("eegnet");
            EEGNetConfig cfg;
            cfg.f1 = c.at("f1").get<std::size_t>();
            cfg.depth_mult = c.at("depth_mult").get<std::size_t>();
            cfg.f2 = c.at("f2").get<std::size_t>();
            cfg.dropout = c.at("dropout").get<double>();
            cfg.learning_rate = c.at("learning_rate").get<double>();
            cfg.batch_size = c.at("batch_size").get<std::size_t>();
            cfg.max_epochs = c.at("max_epochs").get<std::size_t>();
            cfg.early_stop_patience = c.at("early_stop_patience").get<std::size_t>();
            cfg.seed = c.at("seed").get<std::uint64_t>();
            cfg.n_channels = c.at("n_channels").get<std::size_t>();
            cfg.epoch_len = c.at("epoch_len").get<std::size_t>();
            cfg.temporal_kernel = c.at("temporal_kernel").get<std::size_t>();
            cfg.separable_kernel = c.at("separable_kernel").get<std::size_t>();
            cfg.pool1 = c.at("pool1").get<std::size_t>();
            cfg.pool2 = c.at("pool2").get<std::size_t>();
            model.eegnet = std::make_shared<EEGNetNet<float>>(cfg);
            load_net(entries, *model.eegnet);
            break;
        }
        case ClassifierKind::cnn1d: {
            const json& c = j.at("cnn1d");
            CNN1DConfig cfg;
            cfg.conv1_filters = c.at("conv1_filters").get<std::size_t>();
            cfg.conv1_width = c.at("conv1_width").get<std::size_t>();
            cfg.conv2_filters = c.at("conv2_filters").get<std::size_t>();
            cfg.conv2_width = c.at("conv2_width").get<std::size_t>();
            cfg.pool1 = c.at("pool1").get<std::size_t>();
            cfg.drop1 = c.at("drop1").get<double>();
            cfg.conv3_filters = c.at("conv3_filters").get<std::size_t>();
            cfg.conv3_width = c.at("conv3_width").get<std::size_t>();
            cfg.pool2 = c.at("pool2").get<std::size_t>();
            cfg.drop2 = c.at("drop2").get<double>();
            cfg.leaky_slope = c.at("leaky_slope").get<double>();
            cfg.learning_rate = c.at("learning_rate").get<double>();
            cfg.batch_size = c.at("batch_size").get<std::size_t>();
            cfg.max_epochs = c.at("max_epochs").get<std::size_t>();
            cfg.early_stop_patience = c.at("early_stop_patience").get<std::size_t>();
            cfg.seed = c.at("seed").get<std::uint64_t>();
            cfg.input_dim = c.at("input_dim").get<std::size_t>();
            model.cnn1d = std::make_shared<Cnn1dNet<float>>(cfg);
            load_net(entries, *model.cnn1d);
            break;
        }
        case ClassifierKind::mlp: {
            const json& c = j.at("mlp");
            MLPConfig cfg;
            cfg.hidden = c.at("hidden").get<std::vector<std::size_t>>();
            cfg.dropout = c.at("dropout").get<double>();
            cfg.learning_rate = c.at("learning_rate").get<double>();
            cfg.batch_size = c.at("batch_size").get<std::size_t>();
            cfg.max_epochs = c.at("max_epochs").get<std::size_t>();
            cfg.early_stop_patience = c.at("early_stop_patience").get<std::size_t>();
            cfg.seed = c.at("seed").get<std::uint64_t>();
            cfg.input_dim = c.at("input_dim").get<std::size_t>();
            model.mlp = std::make_shared<MlpNet<float>>(cfg);
            load_net(entries, *model.mlp);
            break;
        }
        case ClassifierKind::svm_rbf: {
            const json& c = j.at("svm");
            auto svm = std::make_shared<SvmModel>();
            svm->dim = c.at("dim").get<std::size_t>();
            svm->gamma = c.at("gamma").get<double>();
            svm->c = c.at("c").get<double>();
            svm->rho = c.at("rho").get<double>();
            svm->platt_a = c.at("platt_a").get<double>();
            svm->platt_b = c.at("platt_b").get<double>();
            svm->degenerate = c.at("degenerate").get<bool>();
            svm->majority_label = c.at("majority_label").get<int>();
            if (const std::string* sv = nn::find_entry(entries, "param/support_vectors"))
                svm->support_vectors = nn::bytes_to_floats(*sv);
            if (const std::string* co = nn::find_entry(entries, "param/coef")) {
                const auto f = nn::bytes_to_floats(*co);
                svm->coef.assign(f.begin(), f.end());
            }
            model.svm = std::move(svm);
            break;
        }
    }
    return model;
}

}  // namespace revae::models
