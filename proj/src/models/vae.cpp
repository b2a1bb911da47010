#include "revae/models/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "revae/nn/adam.hpp"
#include "revae/nn/checkpoint.hpp"

namespace revae::models {

using nlohmann::json;

namespace {

struct SampleIndex {
    std::vector<const float*> ptrs;
    std::vector<const EpochSet*> sets;
    std::vector<std::uint32_t> epoch_of;
};

SampleIndex collect_samples(const std::vector<EpochSet>& sets, const VAEConfig& cfg) {
    SampleIndex idx;
    for (const auto& es : sets) {
        if (es.n_channels != cfg.n_channels || es.epoch_len != cfg.epoch_len)
            throw std::invalid_argument("vae: epoch geometry does not match config");
        for (std::size_t e = 0; e < es.n_epochs; ++e) {
            idx.ptrs.push_back(es.epoch(e));
            idx.sets.push_back(&es);
            idx.epoch_of.push_back(std::uint32_t(e));
        }
    }
    return idx;
}

void gather_batch(const std::vector<const float*>& ptrs, const std::vector<std::size_t>& order,
                  std::size_t begin, std::size_t count, std::size_t numel, std::vector<float>& out) {
    out.resize(count * numel);
    for (std::size_t i = 0; i < count; ++i) {
        const float* src = ptrs[order[begin + i]];
        std::copy(src, src + numel, out.begin() + i * numel);
    }
}

struct Snapshot {
    std::vector<float> params, state;
};

Snapshot take_snapshot(VAENet<float>& net) {
    Snapshot s;
    for (const auto& p : net.params()) s.params.insert(s.params.end(), p.value, p.value + p.n);
    for (const auto& st : net.state()) s.state.insert(s.state.end(), st.value, st.value + st.n);
    return s;
}

void restore_snapshot(VAENet<float>& net, const Snapshot& s) {
    std::size_t off = 0;
    for (const auto& p : net.params()) {
        std::copy(s.params.begin() + off, s.params.begin() + off + p.n, p.value);
        off += p.n;
    }
    off = 0;
    for (const auto& st : net.state()) {
        std::copy(s.state.begin() + off, s.state.begin() + off + st.n, st.value);
        off += st.n;
    }
}

}  // namespace

TrainedVAE train_vae(const std::vector<EpochSet>& train_sets,
                     const std::vector<EpochSet>& val_sets, const VAEConfig& cfg) {
    cfg.validate();
    const SampleIndex train = collect_samples(train_sets, cfg);
    const SampleIndex val = collect_samples(val_sets, cfg);
    if (train.ptrs.empty()) throw std::invalid_argument("vae: no training epochs");

    TrainedVAE model;
    model.config = cfg;
    model.net = VAENet<float>(cfg);

    Rng init_rng(cfg.seed, "vae/init");
    model.net.init_params(init_rng);
    Rng shuffle_rng(cfg.seed, "vae/shuffle");
    Rng noise_rng(cfg.seed, "vae/noise");

    nn::Adam<float> opt(cfg.learning_rate);
    const auto param_refs = model.net.params();
    opt.attach(param_refs);

    const std::size_t numel = cfg.n_channels * cfg.epoch_len;
    std::vector<std::size_t> order(train.ptrs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> val_order(val.ptrs.size());
    std::iota(val_order.begin(), val_order.end(), 0);

    std::vector<float> batch;
    double best_val = 1e300;
    std::size_t wait = 0, step = 0;
    Snapshot best;
    bool have_best = false;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        // optional warm-up: ramp the KL weight over the first epochs
        const double beta_now =
            cfg.beta_warmup_epochs == 0
                ? cfg.beta
                : cfg.beta * std::min(1.0, double(epoch) / double(cfg.beta_warmup_epochs));
        double sum_recon = 0.0, sum_kl = 0.0, sum_total = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
            gather_batch(train.ptrs, order, begin, count, numel, batch);
            model.net.forward_train(batch.data(), count, noise_rng);
            const LossBreakdown loss =
                vae_loss(batch.data(), model.net.xhat().data(), model.net.mu().data(),
                         model.net.logvar().data(), count, numel, cfg.latent_dim, beta_now);
            ++step;
            if (!std::isfinite(loss.total)) throw DivergenceError(step);
            sum_recon += loss.reconstruction * double(count);
            sum_kl += loss.kl * double(count);
            sum_total += loss.total * double(count);
            seen += count;
            opt.zero_grad();
            model.net.backward(batch.data(), count, beta_now);
            if (cfg.grad_clip_norm > 0.0) {
                double norm2 = 0.0;
                for (const auto& p : param_refs)
                    for (std::size_t i = 0; i < p.n; ++i)
                        norm2 += double(p.grad[i]) * double(p.grad[i]);
                const double norm = std::sqrt(norm2);
                if (norm > cfg.grad_clip_norm) {
                    const float scale = float(cfg.grad_clip_norm / norm);
                    for (const auto& p : param_refs)
                        for (std::size_t i = 0; i < p.n; ++i) p.grad[i] *= scale;
                }
            }
            opt.step();
        }

        TrainingRecord rec;
        rec.reconstruction = sum_recon / double(seen);
        rec.kl = sum_kl / double(seen);
        rec.total = sum_total / double(seen);

        if (!val.ptrs.empty()) {
            double val_se = 0.0;
            std::size_t val_elems = 0;
            for (std::size_t begin = 0; begin < val.ptrs.size(); begin += cfg.batch_size) {
                const std::size_t count = std::min(cfg.batch_size, val.ptrs.size() - begin);
                gather_batch(val.ptrs, val_order, begin, count, numel, batch);
                model.net.forward_encode(batch.data(), count, false);
                model.net.forward_decode(model.net.mu().data(), count, false);
                const auto& xh = model.net.xhat();
                for (std::size_t i = 0; i < count * numel; ++i) {
                    const double d = double(batch[i]) - double(xh[i]);
                    val_se += d * d;
                }
                val_elems += count * numel;
            }
            rec.val_reconstruction = val_se / double(val_elems);
        } else {
            rec.val_reconstruction = rec.reconstruction;
        }
        model.history.push_back(rec);

        if (rec.val_reconstruction < best_val - 1e-12) {
            best_val = rec.val_reconstruction;
            best = take_snapshot(model.net);
            have_best = true;
            wait = 0;
        } else if (++wait >= cfg.early_stop_patience && !val_sets.empty()) {
            break;
        }
    }
    if (have_best && !val_sets.empty()) restore_snapshot(model.net, best);
    return model;
}

void encode(TrainedVAE& model, const float* x, std::size_t n_channels, std::size_t epoch_len,
            std::vector<float>& mu, std::vector<float>& logvar) {
    const auto& cfg = model.config;
    if (n_channels != cfg.n_channels || epoch_len != cfg.epoch_len)
        throw std::invalid_argument("encode: input shape does not match the trained model");
    model.net.forward_encode(x, 1, false);
    mu = model.net.mu();
    logvar = model.net.logvar();
}

std::vector<float> decode(TrainedVAE& model, const std::vector<float>& z) {
    if (z.size() != model.config.latent_dim)
        throw std::invalid_argument("decode: latent size does not match the trained model");
    model.net.forward_decode(z.data(), 1, false);
    return model.net.xhat();
}

FeatureMatrix extract_features(TrainedVAE& model, const std::vector<EpochSet>& sets) {
    const auto& cfg = model.config;
    const SampleIndex idx = collect_samples(sets, cfg);
    const std::size_t numel = cfg.n_channels * cfg.epoch_len;

    FeatureMatrix fm;
    fm.dim = cfg.latent_dim;
    fm.n_rows = idx.ptrs.size();
    fm.values.resize(fm.n_rows * fm.dim);
    fm.source = "vae-mu";

    std::set<std::pair<std::string, std::uint32_t>> seen;
    std::vector<std::size_t> order(idx.ptrs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<float> batch;
    const std::size_t chunk = 128;
    for (std::size_t begin = 0; begin < idx.ptrs.size(); begin += chunk) {
        const std::size_t count = std::min(chunk, idx.ptrs.size() - begin);
        gather_batch(idx.ptrs, order, begin, count, numel, batch);
        model.net.forward_encode(batch.data(), count, false);
        const auto& mu = model.net.mu();
        std::copy(mu.begin(), mu.begin() + count * fm.dim,
                  fm.values.begin() + begin * fm.dim);
    }
    for (std::size_t i = 0; i < idx.ptrs.size(); ++i) {
        const EpochSet* es = idx.sets[i];
        if (!seen.emplace(es->subject_id, idx.epoch_of[i]).second)
            throw std::invalid_argument("features: duplicate (subject, epoch) row");
        fm.rows.push_back(FeatureRow{es->subject_id, idx.epoch_of[i], es->label});
    }
    return fm;
}

namespace {

std::vector<double> group_attribution(TrainedVAE& model, const std::vector<EpochSet>& group) {
    const auto& cfg = model.config;
    const SampleIndex idx = collect_samples(group, cfg);
    if (idx.ptrs.empty()) throw std::invalid_argument("spatial_patterns: empty group");
    const std::size_t numel = cfg.n_channels * cfg.epoch_len;
    const std::size_t Fs = cfg.n_spatial_filters;
    const std::size_t Ft = cfg.n_temporal_filters;
    const std::size_t W = cfg.epoch_len;

    // mean |activation| per spatial filter over the whole group
    std::vector<double> act(Fs, 0.0);
    std::vector<std::size_t> order(idx.ptrs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<float> batch;
    const std::size_t chunk = 64;
    for (std::size_t begin = 0; begin < idx.ptrs.size(); begin += chunk) {
        const std::size_t count = std::min(chunk, idx.ptrs.size() - begin);
        gather_batch(idx.ptrs, order, begin, count, numel, batch);
        model.net.spatial_forward(batch.data(), count);
        const auto& a = model.net.spatial_activation();  // [count][Fs][W]
        for (std::size_t s = 0; s < count; ++s)
            for (std::size_t f = 0; f < Fs; ++f) {
                const float* row = a.data() + (s * Fs + f) * W;
                double m = 0.0;
                for (std::size_t t = 0; t < W; ++t) m += std::abs(double(row[t]));
                act[f] += m / double(W);
            }
    }
    for (auto& v : act) v /= double(idx.ptrs.size());

    // map filter activity back to channels via |kernel weight|
    const auto& w = model.net.spatial_weights();  // [Fs][Ft][C][1]
    const std::size_t C = cfg.n_channels;
    std::vector<double> attr(C, 0.0);
    for (std::size_t f = 0; f < Fs; ++f)
        for (std::size_t m = 0; m < Ft; ++m)
            for (std::size_t c = 0; c < C; ++c)
                attr[c] += act[f] * std::abs(double(w[(f * Ft + m) * C + c]));

    const double mx = *std::max_element(attr.begin(), attr.end());
    if (mx > 0.0)
        for (auto& v : attr) v /= mx;
    return attr;
}

}  // namespace

SpatialPatterns spatial_patterns(TrainedVAE& model, const std::vector<EpochSet>& group_lean,
                                 const std::vector<EpochSet>& group_obese) {
    SpatialPatterns out;
    out.lean = group_attribution(model, group_lean);
    out.obese = group_attribution(model, group_obese);
    out.difference.resize(out.lean.size());
    for (std::size_t c = 0; c < out.lean.size(); ++c)
        out.difference[c] = std::abs(out.obese[c] - out.lean[c]);
    return out;
}

namespace {

json vae_config_json(const VAEConfig& c) {
    return json{{"kind", "vae"},
                {"n_temporal_filters", c.n_temporal_filters},
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
                {"early_stop_patience", c.early_stop_patience},
                {"seed", c.seed},
                {"n_channels", c.n_channels},
                {"epoch_len", c.epoch_len},
                {"temporal_kernel", c.temporal_kernel}};
}

VAEConfig vae_config_from_json(const json& j) {
    VAEConfig c;
    c.n_temporal_filters = j.at("n_temporal_filters").get<std::size_t>();
    c.n_spatial_filters = j.at("n_spatial_filters").get<std::size_t>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.beta = j.at("beta").get<double>();
    c.beta_warmup_epochs = j.value("beta_warmup_epochs", std::size_t(0));
    c.filterbank_init = j.value("filterbank_init", false);
    c.decoder_batchnorm = j.value("decoder_batchnorm", true);
    c.grad_clip_norm = j.value("grad_clip_norm", 5.0);
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_channels = j.at("n_channels").get<std::size_t>();
    c.epoch_len = j.at("epoch_len").get<std::size_t>();
    c.temporal_kernel = j.at("temporal_kernel").get<std::size_t>();
    return c;
}

std::string history_csv(const std::vector<TrainingRecord>& history) {
    std::ostringstream ss;
    ss << "epoch,reconstruction,kl,total,val_reconstruction\n";
    ss.precision(17);
    for (std::size_t i = 0; i < history.size(); ++i)
        ss << i << ',' << history[i].reconstruction << ',' << history[i].kl << ','
           << history[i].total << ',' << history[i].val_reconstruction << '\n';
    return ss.str();
}

std::vector<TrainingRecord> history_from_csv(const std::string& csv) {
    std::vector<TrainingRecord> out;
    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        TrainingRecord r;
        std::size_t idx;
        std::istringstream ls(line);
        char comma;
        ls >> idx >> comma >> r.reconstruction >> comma >> r.kl >> comma >> r.total >> comma >>
            r.val_reconstruction;
        out.push_back(r);
    }
    return out;
}

}  // namespace

void save_vae(const TrainedVAE& model, const std::filesystem::path& path) {
    auto& net = const_cast<TrainedVAE&>(model).net;
    nn::ArchiveEntries entries;
    entries.emplace_back("config.json", vae_config_json(model.config).dump(2));
    for (const auto& p : net.params())
        entries.emplace_back("param/" + p.name,
                             nn::floats_to_bytes(std::vector<float>(p.value, p.value + p.n)));
    for (const auto& s : net.state())
        entries.emplace_back("state/" + s.name,
                             nn::floats_to_bytes(std::vector<float>(s.value, s.value + s.n)));
    entries.emplace_back("history.csv", history_csv(model.history));
    nn::save_archive(path, entries);
}

TrainedVAE load_vae(const std::filesystem::path& path) {
    const auto entries = nn::load_archive(path);
    const std::string* cfg_s = nn::find_entry(entries, "config.json");
    if (!cfg_s) throw std::runtime_error("vae checkpoint: missing config.json");
    const json j = json::parse(*cfg_s);
    if (j.at("kind").get<std::string>() != "vae")
        throw std::runtime_error("vae checkpoint: wrong model kind");

    TrainedVAE model;
    model.config = vae_config_from_json(j);
    model.net = VAENet<float>(model.config);
    for (const auto& p : model.net.params()) {
        const std::string* bytes = nn::find_entry(entries, "param/" + p.name);
        if (!bytes) throw std::runtime_error("vae checkpoint: missing tensor " + p.name);
        const auto v = nn::bytes_to_floats(*bytes);
        if (v.size() != p.n) throw std::runtime_error("vae checkpoint: size mismatch " + p.name);
        std::copy(v.begin(), v.end(), p.value);
    }
    for (const auto& s : model.net.state()) {
        const std::string* bytes = nn::find_entry(entries, "state/" + s.name);
        if (!bytes) throw std::runtime_error("vae checkpoint: missing state " + s.name);
        const auto v = nn::bytes_to_floats(*bytes);
        if (v.size() != s.n) throw std::runtime_error("vae checkpoint: size mismatch " + s.name);
        std::copy(v.begin(), v.end(), s.value);
    }
    if (const std::string* h = nn::find_entry(entries, "history.csv"))
        model.history = history_from_csv(*h);
    return model;
}

}  // namespace revae::models
