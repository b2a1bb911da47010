#include "revae/preprocess/pipeline.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "revae/core/binio.hpp"
#include "revae/dsp/filters.hpp"

namespace revae::preprocess {

using nlohmann::json;
namespace fs = std::filesystem;

EEGRecording discard_head(const EEGRecording& rec, double seconds) {
    if (seconds < 0.0) throw std::invalid_argument("discard_head: negative duration");
    const std::size_t drop = std::size_t(seconds * rec.rate_hz);
    if (drop >= rec.n_timepoints)
        throw std::invalid_argument("discard_head: recording shorter than discard window");
    EEGRecording out;
    out.subject_id = rec.subject_id;
    out.label = rec.label;
    out.rate_hz = rec.rate_hz;
    out.channels = rec.channels;
    out.n_timepoints = rec.n_timepoints - drop;
    out.samples.resize(rec.channels.size() * out.n_timepoints);
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        const float* src = rec.samples.data() + c * rec.n_timepoints + drop;
        std::copy(src, src + out.n_timepoints, out.samples.begin() + c * out.n_timepoints);
    }
    return out;
}

EEGRecording resample(const EEGRecording& rec, double target_hz) {
    const dsp::Resampler rs(rec.rate_hz, target_hz);
    EEGRecording out;
    out.subject_id = rec.subject_id;
    out.label = rec.label;
    out.rate_hz = target_hz;
    out.channels = rec.channels;
    out.n_timepoints = rs.output_len(rec.n_timepoints);
    out.samples.resize(rec.channels.size() * out.n_timepoints);
    std::vector<double> chan(rec.n_timepoints);
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        const float* src = rec.samples.data() + c * rec.n_timepoints;
        for (std::size_t t = 0; t < rec.n_timepoints; ++t) chan[t] = src[t];
        const std::vector<double> y = rs.apply(chan);
        float* dst = out.samples.data() + c * out.n_timepoints;
        for (std::size_t t = 0; t < out.n_timepoints; ++t) dst[t] = float(y[t]);
    }
    return out;
}

EEGRecording bandpass(const EEGRecording& rec, double lo_hz, double hi_hz) {
    const auto sos = dsp::butterworth_bandpass(4, lo_hz, hi_hz, rec.rate_hz);
    EEGRecording out = rec;
    std::vector<double> chan(rec.n_timepoints);
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        const float* src = rec.samples.data() + c * rec.n_timepoints;
        for (std::size_t t = 0; t < rec.n_timepoints; ++t) chan[t] = src[t];
        const std::vector<double> y = dsp::sosfiltfilt(sos, chan);
        float* dst = out.samples.data() + c * rec.n_timepoints;
        for (std::size_t t = 0; t < rec.n_timepoints; ++t) dst[t] = float(y[t]);
    }
    return out;
}

EpochSet epoch_segment(const EEGRecording& rec, double epoch_s) {
    const std::size_t epoch_len = std::size_t(std::llround(epoch_s * rec.rate_hz));
    if (epoch_len == 0) throw std::invalid_argument("epoch_segment: epoch too short");
    const std::size_t n_epochs = rec.n_timepoints / epoch_len;
    if (n_epochs == 0)
        throw std::invalid_argument("epoch_segment: recording shorter than one epoch");

    EpochSet es;
    es.subject_id = rec.subject_id;
    es.label = rec.label;
    es.rate_hz = rec.rate_hz;
    es.n_epochs = n_epochs;
    es.n_channels = rec.channels.size();
    es.epoch_len = epoch_len;
    es.epochs.resize(n_epochs * es.n_channels * epoch_len);
    for (std::size_t e = 0; e < n_epochs; ++e) {
        for (std::size_t c = 0; c < es.n_channels; ++c) {
            const float* src = rec.samples.data() + c * rec.n_timepoints + e * epoch_len;
            float* dst = es.epochs.data() + (e * es.n_channels + c) * epoch_len;
            std::copy(src, src + epoch_len, dst);
        }
    }
    return es;
}

EpochSet zscore_normalize(const EpochSet& es) {
    if (es.n_epochs == 0) throw std::invalid_argument("zscore: empty epoch set");
    EpochSet out = es;
    out.normalization.mean.assign(es.n_channels, 0.0);
    out.normalization.stddev.assign(es.n_channels, 0.0);
    const std::size_t n_total = es.n_epochs * es.epoch_len;
    for (std::size_t c = 0; c < es.n_channels; ++c) {
        double sum = 0.0;
        for (std::size_t e = 0; e < es.n_epochs; ++e) {
            const float* x = es.epochs.data() + (e * es.n_channels + c) * es.epoch_len;
            for (std::size_t t = 0; t < es.epoch_len; ++t) sum += x[t];
        }
        const double mean = sum / double(n_total);
        double var = 0.0;
        for (std::size_t e = 0; e < es.n_epochs; ++e) {
            const float* x = es.epochs.data() + (e * es.n_channels + c) * es.epoch_len;
            for (std::size_t t = 0; t < es.epoch_len; ++t)
                var += (double(x[t]) - mean) * (double(x[t]) - mean);
        }
        var /= double(n_total);
        if (!(var > 0.0))
            throw std::invalid_argument("zscore: zero-variance channel " + std::to_string(c) +
                                        " for subject " + es.subject_id);
        const double inv_std = 1.0 / std::sqrt(var);
        out.normalization.mean[c] = mean;
        out.normalization.stddev[c] = std::sqrt(var);
        for (std::size_t e = 0; e < es.n_epochs; ++e) {
            float* x = out.epochs.data() + (e * es.n_channels + c) * es.epoch_len;
            for (std::size_t t = 0; t < es.epoch_len; ++t)
                x[t] = float((double(x[t]) - mean) * inv_std);
        }
    }
    out.normalized = true;
    return out;
}

EpochSet run_pipeline(const EEGRecording& rec, const PreprocessParams& p) {
    EEGRecording r = discard_head(rec, p.discard_s);
    r = resample(r, p.target_rate_hz);
    r = bandpass(r, p.bandpass_lo_hz, p.bandpass_hi_hz);
    if (p.normalize_before_epoching) {
        // sensitivity variant: statistics over the continuous signal
        EpochSet whole = epoch_segment(r, double(r.n_timepoints) / r.rate_hz);
        whole = zscore_normalize(whole);
        EEGRecording rn = r;
        rn.samples = whole.epochs;
        EpochSet es = epoch_segment(rn, p.epoch_s);
        es.normalized = true;
        es.normalization = whole.normalization;
        return es;
    }
    return zscore_normalize(epoch_segment(r, p.epoch_s));
}

void save_epoch_sets(const std::vector<EpochSet>& sets, const PreprocessParams& p,
                     const fs::path& dir) {
    fs::create_directories(dir);
    json subjects = json::array();
    for (const auto& es : sets) {
        const std::string file = es.subject_id + ".epochs";
        atomic_write_f32_file(dir / file, es.epochs);
        subjects.push_back(json{{"id", es.subject_id},
                                {"label", int(es.label)},
                                {"n_epochs", es.n_epochs},
                                {"n_channels", es.n_channels},
                                {"epoch_len", es.epoch_len},
                                {"rate_hz", es.rate_hz},
                                {"file", file},
                                {"mean", es.normalization.mean},
                                {"stddev", es.normalization.stddev}});
    }
    const json j{{"format_version", 1},
                 {"params",
                  {{"discard_s", p.discard_s},
                   {"target_rate_hz", p.target_rate_hz},
                   {"bandpass_lo_hz", p.bandpass_lo_hz},
                   {"bandpass_hi_hz", p.bandpass_hi_hz},
                   {"epoch_s", p.epoch_s},
                   {"normalize_before_epoching", p.normalize_before_epoching}}},
                 {"subjects", subjects}};
    atomic_write_file(dir / "epochs.json", j.dump(2) + "\n");
}

std::vector<EpochSet> load_epoch_sets(const fs::path& dir) {
    const json j = json::parse(read_text_file(dir / "epochs.json"));
    std::vector<EpochSet> sets;
    for (const auto& s : j.at("subjects")) {
        EpochSet es;
        es.subject_id = s.at("id").get<std::string>();
        es.label = ClassLabel(s.at("label").get<int>());
        es.rate_hz = s.at("rate_hz").get<double>();
        es.n_epochs = s.at("n_epochs").get<std::size_t>();
        es.n_channels = s.at("n_channels").get<std::size_t>();
        es.epoch_len = s.at("epoch_len").get<std::size_t>();
        es.normalization.mean = s.at("mean").get<std::vector<double>>();
        es.normalization.stddev = s.at("stddev").get<std::vector<double>>();
        es.normalized = true;
        es.epochs = read_f32_file(dir / s.at("file").get<std::string>());
        if (es.epochs.size() != es.n_epochs * es.n_channels * es.epoch_len)
            throw std::runtime_error("epochs: size mismatch for " + es.subject_id);
        sets.push_back(std::move(es));
    }
    return sets;
}

}  // namespace revae::preprocess
