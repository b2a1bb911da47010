#pragma once

#include <filesystem>
#include <vector>

#include "revae/data.hpp"

namespace revae::preprocess {

struct PreprocessParams {
    double discard_s = 5.0;
    double target_rate_hz = 128.0;
    double bandpass_lo_hz = 0.1;
    double bandpass_hi_hz = 45.0;
    double epoch_s = 10.0;
    bool normalize_before_epoching = false;  // sensitivity knob; default matches the pipeline order
};

// Drops the first floor(seconds * rate) samples of every channel.
EEGRecording discard_head(const EEGRecording& rec, double seconds = 5.0);

// Band-limited rational resampling; output length is round(n * target / source).
EEGRecording resample(const EEGRecording& rec, double target_hz = 128.0);

// Zero-phase Butterworth band-pass (4th-order prototype, forward-backward).
EEGRecording bandpass(const EEGRecording& rec, double lo_hz = 0.1, double hi_hz = 45.0);

// Consecutive non-overlapping epochs; the trailing remainder is dropped.
EpochSet epoch_segment(const EEGRecording& rec, double epoch_s = 10.0);

// Per subject, per channel z-score over all epochs concatenated.
EpochSet zscore_normalize(const EpochSet& es);

// discard -> resample -> bandpass -> epoch -> normalize
EpochSet run_pipeline(const EEGRecording& rec, const PreprocessParams& p = {});

// On-disk: <dir>/<subject>.epochs (float32 LE, [E x C x T]) + epochs.json.
void save_epoch_sets(const std::vector<EpochSet>& sets, const PreprocessParams& p,
                     const std::filesystem::path& dir);
std::vector<EpochSet> load_epoch_sets(const std::filesystem::path& dir);

}  // namespace revae::preprocess
