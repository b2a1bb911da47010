#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "revae/data.hpp"

namespace revae::synth {

// Parameters of the surrogate resting-state corpus. The corpus is a pure
// function of this struct: content digests are reproducible bit for bit.
struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t n_per_class = 30;
    std::vector<std::string> channels{kMontage10_20.begin(), kMontage10_20.end()};
    double native_rate_hz = 256.0;
    double duration_s = 270.0;
    double class_snr = 1.0;          // class signal amplitude / background sigma
    double confound_strength = 1.0;  // subject alpha amplitude / background sigma

    void validate() const;  // throws std::invalid_argument
};

// Subject-specific signal characteristics, a pure function of (seed, id).
struct Fingerprint {
    std::string subject_id;
    double alpha_peak_hz = 10.0;           // in [8, 13]
    std::vector<double> channel_gain;      // length 19, positive
    std::vector<double> channel_phase;     // radians
    double envelope_hz = 0.1;              // slow amplitude modulation
    double envelope_phase = 0.0;
};

Fingerprint subject_fingerprint(std::uint64_t seed, const std::string& subject_id);

// Pink background + the subject's alpha rhythm on all channels + a fixed
// 10 Hz occipital component on O1/O2 for the obese class, scaled by class_snr.
EEGRecording generate_recording(const SynthConfig& cfg, const std::string& subject_id,
                                ClassLabel label);

struct ManifestEntry {
    std::string subject_id;
    ClassLabel label;
    std::size_t n_timepoints;
    std::string file;
    std::string sha256;
};

struct CorpusManifest {
    std::vector<std::string> channels;
    double rate_hz = 0.0;
    std::vector<ManifestEntry> subjects;
    SynthConfig config;
};

// Writes <out_dir>/<subject>.eeg (float32 LE, channel-major) for every
// subject plus <out_dir>/manifest.json. Lean subjects come first.
CorpusManifest generate_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir);

std::string manifest_to_json(const CorpusManifest& m);
CorpusManifest load_manifest(const std::filesystem::path& corpus_dir);
EEGRecording load_recording(const std::filesystem::path& corpus_dir, const CorpusManifest& m,
                            std::size_t subject_index);

}  // namespace revae::synth
