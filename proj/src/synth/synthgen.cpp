#include "revae/synth/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "revae/core/binio.hpp"
#include "revae/core/rng.hpp"
#include "revae/core/sha256.hpp"
#include "revae/dsp/filters.hpp"

namespace revae::synth {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBackgroundSigmaUv = 10.0;  // background scale in microvolts
constexpr double kClassSignalHz = 10.0;      // occipital class component

bool is_finite(double v) { return std::isfinite(v); }

}  // namespace

void SynthConfig::validate() const {
    if (n_per_class < 1) throw std::invalid_argument("synth: n_per_class must be >= 1");
    if (!is_finite(duration_s) || duration_s < 15.0)
        throw std::invalid_argument("synth: duration_s must be >= 15");
    if (!is_finite(native_rate_hz) || native_rate_hz <= 0.0)
        throw std::invalid_argument("synth: native_rate_hz must be positive");
    if (channels.size() != kNumChannels)
        throw std::invalid_argument("synth: channel list must have 19 entries");
    std::set<std::string> uniq(channels.begin(), channels.end());
    if (uniq.size() != channels.size())
        throw std::invalid_argument("synth: channel names must be unique");
    if (!is_finite(class_snr) || class_snr < 0.0)
        throw std::invalid_argument("synth: class_snr must be finite and >= 0");
    if (!is_finite(confound_strength) || confound_strength < 0.0)
        throw std::invalid_argument("synth: confound_strength must be finite and >= 0");
}

Fingerprint subject_fingerprint(std::uint64_t seed, const std::string& subject_id) {
    if (subject_id.empty()) throw std::invalid_argument("fingerprint: empty subject id");
    Rng rng(seed, "fingerprint/" + subject_id);
    Fingerprint fp;
    fp.subject_id = subject_id;
    // peaks stay clear of the class component at 10 Hz so the two signals
    // remain identifiable in the surrogate
    const double span = (9.2 - 8.0) + (13.0 - 10.8);
    const double u = rng.uniform(0.0, span);
    fp.alpha_peak_hz = u < 1.2 ? 8.0 + u : 10.8 + (u - 1.2);
    fp.channel_gain.resize(kNumChannels);
    fp.channel_phase.resize(kNumChannels);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        fp.channel_gain[c] = std::exp(0.45 * rng.normal());  // lognormal, median 1
        fp.channel_phase[c] = rng.uniform(0.0, kTwoPi);
    }
    fp.envelope_hz = rng.uniform(0.05, 0.15);
    fp.envelope_phase = rng.uniform(0.0, kTwoPi);
    return fp;
}

EEGRecording generate_recording(const SynthConfig& cfg, const std::string& subject_id,
                                ClassLabel label) {
    cfg.validate();
    if (subject_id.empty()) throw std::invalid_argument("generate_recording: empty subject id");

    const double fs = cfg.native_rate_hz;
    const std::size_t n = std::size_t(std::llround(cfg.duration_s * fs));
    const Fingerprint fp = subject_fingerprint(cfg.seed, subject_id);

    EEGRecording rec;
    rec.subject_id = subject_id;
    rec.label = label;
    rec.rate_hz = fs;
    rec.channels = cfg.channels;
    rec.n_timepoints = n;
    rec.samples.assign(kNumChannels * n, 0.0f);

    // warm-up so the pink filter reaches stationarity before t=0
    const std::size_t warmup = std::size_t(fs * 8.0);

    std::size_t occ1 = kNumChannels, occ2 = kNumChannels;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (cfg.channels[c] == "O1") occ1 = c;
        if (cfg.channels[c] == "O2") occ2 = c;
    }

    Rng class_rng(cfg.seed, "class/" + subject_id);
    const double class_phase = class_rng.uniform(0.0, kTwoPi);
    const double class_env_hz = class_rng.uniform(0.05, 0.12);
    const double class_env_phase = class_rng.uniform(0.0, kTwoPi);

    std::vector<double> chan(n);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        Rng rng(cfg.seed, "bg/" + subject_id + "/" + cfg.channels[c]);
        dsp::PinkFilter pink(fs);
        for (std::size_t t = 0; t < warmup; ++t) pink.step(rng.normal());
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            chan[t] = pink.step(rng.normal());
            sum += chan[t];
            sumsq += chan[t] * chan[t];
        }
        const double mean = sum / double(n);
        const double var = sumsq / double(n) - mean * mean;
        const double inv_std = 1.0 / std::sqrt(std::max(var, 1e-30));

        const double alpha_amp = cfg.confound_strength * kBackgroundSigmaUv * fp.channel_gain[c];
        const bool occipital = (c == occ1 || c == occ2);
        const double class_amp =
            (label == ClassLabel::obese && occipital) ? cfg.class_snr * kBackgroundSigmaUv : 0.0;

        float* out = rec.samples.data() + c * n;
        for (std::size_t t = 0; t < n; ++t) {
            const double tt = double(t) / fs;
            double v = (chan[t] - mean) * inv_std * kBackgroundSigmaUv;
            const double env = 1.0 + 0.4 * std::sin(kTwoPi * fp.envelope_hz * tt + fp.envelope_phase);
            v += alpha_amp * env * std::sin(kTwoPi * fp.alpha_peak_hz * tt + fp.channel_phase[c]);
            if (class_amp > 0.0) {
                const double cenv =
                    1.0 + 0.3 * std::sin(kTwoPi * class_env_hz * tt + class_env_phase);
                v += class_amp * cenv * std::sin(kTwoPi * kClassSignalHz * tt + class_phase);
            }
            out[t] = float(v);
        }
    }
    return rec;
}

namespace {

std::string subject_name(std::size_t index1) {
    std::ostringstream ss;
    ss << "s" << (index1 < 10 ? "0" : "") << index1;
    return ss.str();
}

json config_to_json(const SynthConfig& c) {
    return json{{"seed", c.seed},
                {"n_per_class", c.n_per_class},
                {"channels", c.channels},
                {"native_rate_hz", c.native_rate_hz},
                {"duration_s", c.duration_s},
                {"class_snr", c.class_snr},
                {"confound_strength", c.confound_strength}};
}

SynthConfig config_from_json(const json& j) {
    SynthConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_per_class = j.at("n_per_class").get<std::size_t>();
    c.channels = j.at("channels").get<std::vector<std::string>>();
    c.native_rate_hz = j.at("native_rate_hz").get<double>();
    c.duration_s = j.at("duration_s").get<double>();
    c.class_snr = j.at("class_snr").get<double>();
    c.confound_strength = j.at("confound_strength").get<double>();
    return c;
}

}  // namespace

std::string manifest_to_json(const CorpusManifest& m) {
    json subjects = json::array();
    for (const auto& s : m.subjects) {
        subjects.push_back(json{{"id", s.subject_id},
                                {"label", int(s.label)},
                                {"n_timepoints", s.n_timepoints},
                                {"file", s.file},
                                {"sha256", s.sha256}});
    }
    const json j{{"format_version", 1},
                 {"channels", m.channels},
                 {"rate_hz", m.rate_hz},
                 {"subjects", subjects},
                 {"config", config_to_json(m.config)}};
    return j.dump(2) + "\n";
}

CorpusManifest generate_corpus(const SynthConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    CorpusManifest manifest;
    manifest.channels = cfg.channels;
    manifest.rate_hz = cfg.native_rate_hz;
    manifest.config = cfg;

    std::set<std::string> seen;
    const std::size_t total = 2 * cfg.n_per_class;
    for (std::size_t i = 1; i <= total; ++i) {
        const std::string id = subject_name(i);
        if (!seen.insert(id).second) throw std::runtime_error("duplicate subject id: " + id);
        const ClassLabel label = (i <= cfg.n_per_class) ? ClassLabel::lean : ClassLabel::obese;
        const EEGRecording rec = generate_recording(cfg, id, label);

        std::ostringstream blob;
        write_f32_le(blob, rec.samples.data(), rec.samples.size());
        const std::string bytes = blob.str();
        const std::string file = id + ".eeg";
        atomic_write_file(out_dir / file, bytes);

        manifest.subjects.push_back(
            ManifestEntry{id, label, rec.n_timepoints, file, sha256_hex(bytes)});
    }
    atomic_write_file(out_dir / "manifest.json", manifest_to_json(manifest));
    return manifest;
}

CorpusManifest load_manifest(const fs::path& corpus_dir) {
    const json j = json::parse(read_text_file(corpus_dir / "manifest.json"));
    CorpusManifest m;
    m.channels = j.at("channels").get<std::vector<std::string>>();
    m.rate_hz = j.at("rate_hz").get<double>();
    m.config = config_from_json(j.at("config"));
    for (const auto& s : j.at("subjects")) {
        m.subjects.push_back(ManifestEntry{s.at("id").get<std::string>(),
                                           ClassLabel(s.at("label").get<int>()),
                                           s.at("n_timepoints").get<std::size_t>(),
                                           s.at("file").get<std::string>(),
                                           s.at("sha256").get<std::string>()});
    }
    return m;
}

EEGRecording load_recording(const fs::path& corpus_dir, const CorpusManifest& m,
                            std::size_t subject_index) {
    const auto& entry = m.subjects.at(subject_index);
    EEGRecording rec;
    rec.subject_id = entry.subject_id;
    rec.label = entry.label;
    rec.rate_hz = m.rate_hz;
    rec.channels = m.channels;
    rec.n_timepoints = entry.n_timepoints;
    rec.samples = read_f32_file(corpus_dir / entry.file);
    if (rec.samples.size() != kNumChannels * entry.n_timepoints)
        throw std::runtime_error("corpus: unexpected sample count in " + entry.file);
    return rec;
}

}  // namespace revae::synth
