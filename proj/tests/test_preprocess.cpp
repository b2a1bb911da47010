#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "revae/preprocess/pipeline.hpp"
#include "revae/synth/synthgen.hpp"

using namespace revae;
namespace pp = revae::preprocess;
namespace fs = std::filesystem;

namespace {

EEGRecording toy_recording(double rate, std::size_t n) {
    EEGRecording rec;
    rec.subject_id = "t1";
    rec.rate_hz = rate;
    rec.channels.assign(kMontage10_20.begin(), kMontage10_20.end());
    rec.n_timepoints = n;
    rec.samples.resize(19 * n);
    for (std::size_t c = 0; c < 19; ++c)
        for (std::size_t t = 0; t < n; ++t)
            rec.samples[c * n + t] =
                float(std::sin(0.01 * double(t) + double(c)) + 0.1 * double(c));
    return rec;
}

}  // namespace

TEST_CASE("discard_head arithmetic") {
    const auto rec = toy_recording(256.0, 69120);
    const auto out = pp::discard_head(rec, 5.0);
    CHECK(out.n_timepoints == 67840);
    CHECK(out.at(0, 0) == rec.at(0, 1280));
    CHECK(out.channels == rec.channels);

    const auto same = pp::discard_head(rec, 0.0);
    CHECK(same.n_timepoints == rec.n_timepoints);
    CHECK(same.samples == rec.samples);

    const auto tiny = toy_recording(256.0, 1024);  // 4 s
    CHECK_THROWS(pp::discard_head(tiny, 5.0));
}

TEST_CASE("resample length and channel count") {
    const auto rec = toy_recording(256.0, 67840);
    const auto out = pp::resample(rec, 128.0);
    CHECK(out.n_timepoints == 33920);
    CHECK(out.rate_hz == 128.0);
    CHECK(out.channels.size() == 19);
}

TEST_CASE("epoch segmentation counts") {
    const auto rec = toy_recording(128.0, 33920);
    const auto es = pp::epoch_segment(rec, 10.0);
    CHECK(es.n_epochs == 26);
    CHECK(es.epoch_len == 1280);
    CHECK(es.n_channels == 19);

    // concatenating epochs reproduces the head of the recording exactly
    for (std::size_t e = 0; e < es.n_epochs; ++e)
        for (std::size_t c = 0; c < 19; ++c)
            for (std::size_t t = 0; t < 1280; t += 97)
                CHECK(es.epochs[(e * 19 + c) * 1280 + t] == rec.at(c, e * 1280 + t));

    const auto one = pp::epoch_segment(toy_recording(128.0, 1280), 10.0);
    CHECK(one.n_epochs == 1);

    CHECK_THROWS(pp::epoch_segment(toy_recording(128.0, 1279), 10.0));
}

TEST_CASE("zscore normalization definitional checks") {
    auto rec = toy_recording(128.0, 5120);
    auto es = pp::epoch_segment(rec, 10.0);
    const auto norm = pp::zscore_normalize(es);
    for (std::size_t c = 0; c < 19; ++c) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t e = 0; e < norm.n_epochs; ++e) {
            const float* x = norm.epochs.data() + (e * 19 + c) * norm.epoch_len;
            for (std::size_t t = 0; t < norm.epoch_len; ++t) {
                sum += x[t];
                sumsq += double(x[t]) * double(x[t]);
            }
        }
        const double n = double(norm.n_epochs * norm.epoch_len);
        const double mean = sum / n;
        const double std = std::sqrt(sumsq / n - mean * mean);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(std - 1.0) < 1e-6);
    }

    // idempotence
    const auto again = pp::zscore_normalize(norm);
    for (std::size_t i = 0; i < again.epochs.size(); i += 211)
        CHECK(std::abs(again.epochs[i] - norm.epochs[i]) < 1e-5);

    // constant channel: zero variance
    auto flat = es;
    for (std::size_t e = 0; e < flat.n_epochs; ++e)
        for (std::size_t t = 0; t < flat.epoch_len; ++t)
            flat.epochs[(e * 19 + 3) * flat.epoch_len + t] = 2.0f;
    CHECK_THROWS(pp::zscore_normalize(flat));
}

TEST_CASE("pipeline on a synthetic subject gives 26 epochs of 19x1280") {
    synth::SynthConfig cfg;
    cfg.seed = 13;
    cfg.n_per_class = 1;
    const auto rec = synth::generate_recording(cfg, "s01", ClassLabel::obese);
    const auto es = pp::run_pipeline(rec);
    CHECK(es.n_epochs == 26);
    CHECK(es.n_channels == 19);
    CHECK(es.epoch_len == 1280);
    CHECK(es.normalized);
}

TEST_CASE("normalize-before-epoching sensitivity flag") {
    synth::SynthConfig cfg;
    cfg.seed = 23;
    cfg.n_per_class = 1;
    cfg.duration_s = 47.0;  // 42 s after discard: 4 epochs + a 2 s remainder
    const auto rec = synth::generate_recording(cfg, "s01", ClassLabel::lean);
    pp::PreprocessParams p;
    p.normalize_before_epoching = true;
    const auto es = pp::run_pipeline(rec, p);
    CHECK(es.n_epochs == 4);
    CHECK(es.normalized);
    // statistics cover the full continuous signal, so the per-epoch subset is
    // close to but not exactly standardized
    const auto after = pp::run_pipeline(rec, pp::PreprocessParams{});
    CHECK(es.epochs != after.epochs);
    double mean = 0.0;
    for (std::size_t t = 0; t < es.epoch_len; ++t) mean += es.epochs[t];
    CHECK(std::abs(mean / double(es.epoch_len)) < 0.5);
}

TEST_CASE("pipeline ignores labels") {
    synth::SynthConfig cfg;
    cfg.seed = 17;
    cfg.n_per_class = 1;
    cfg.duration_s = 45.0;
    auto rec = synth::generate_recording(cfg, "s01", ClassLabel::lean);
    auto a = pp::run_pipeline(rec);
    rec.label = ClassLabel::obese;  // flip the label only
    auto b = pp::run_pipeline(rec);
    CHECK(a.epochs == b.epochs);
}

TEST_CASE("epoch sets round trip through disk") {
    synth::SynthConfig cfg;
    cfg.seed = 19;
    cfg.n_per_class = 1;
    cfg.duration_s = 45.0;
    std::vector<EpochSet> sets;
    sets.push_back(pp::run_pipeline(synth::generate_recording(cfg, "s01", ClassLabel::lean)));
    sets.push_back(pp::run_pipeline(synth::generate_recording(cfg, "s02", ClassLabel::obese)));

    const auto dir = fs::temp_directory_path() / "revae_pp_test";
    fs::remove_all(dir);
    pp::save_epoch_sets(sets, pp::PreprocessParams{}, dir);
    const auto back = pp::load_epoch_sets(dir);
    REQUIRE(back.size() == 2);
    CHECK(back[0].subject_id == "s01");
    CHECK(back[1].label == ClassLabel::obese);
    CHECK(back[0].epochs == sets[0].epochs);
    CHECK(back[1].normalization.mean == sets[1].normalization.mean);
    fs::remove_all(dir);
}
