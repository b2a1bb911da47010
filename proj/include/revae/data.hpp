#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace revae {

enum class ClassLabel : int { lean = 0, obese = 1 };

inline const char* to_string(ClassLabel c) { return c == ClassLabel::lean ? "lean" : "obese"; }

// The 19 electrodes of the standard 10-20 montage, in the fixed order used
// throughout: row i of every sample matrix is channel kMontage10_20[i].
inline const std::array<const char*, 19> kMontage10_20 = {
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
    "C4",  "T4",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};

constexpr std::size_t kNumChannels = 19;

// One subject's continuous multichannel recording, microvolt scale.
// samples is channel-major: samples[c * n_timepoints + t].
struct EEGRecording {
    std::string subject_id;
    ClassLabel label = ClassLabel::lean;
    double rate_hz = 0.0;
    std::vector<std::string> channels;
    std::size_t n_timepoints = 0;
    std::vector<float> samples;

    float at(std::size_t c, std::size_t t) const { return samples[c * n_timepoints + t]; }
};

// Per-channel statistics recorded by z-score normalization.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Fixed-length epochs for one subject, the unit of model input.
// epochs is [n_epochs][n_channels][epoch_len] flattened.
struct EpochSet {
    std::string subject_id;
    ClassLabel label = ClassLabel::lean;
    double rate_hz = 0.0;
    std::size_t n_epochs = 0;
    std::size_t n_channels = 0;
    std::size_t epoch_len = 0;
    std::vector<float> epochs;
    bool normalized = false;
    ChannelStats normalization;

    const float* epoch(std::size_t e) const { return epochs.data() + e * n_channels * epoch_len; }
    std::size_t epoch_numel() const { return n_channels * epoch_len; }
};

// Row provenance of a feature matrix.
struct FeatureRow {
    std::string subject_id;
    std::uint32_t epoch_index = 0;
    ClassLabel label = ClassLabel::lean;
};

// N x D feature values with per-row provenance.
struct FeatureMatrix {
    std::size_t n_rows = 0;
    std::size_t dim = 0;
    std::vector<float> values;  // row-major
    std::vector<FeatureRow> rows;
    std::string source;  // e.g. "vae-mu", "eegnet-penultimate"

    const float* row(std::size_t i) const { return values.data() + i * dim; }
    float* row(std::size_t i) { return values.data() + i * dim; }
};

}  // namespace revae
