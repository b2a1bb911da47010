#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "revae/core/rng.hpp"
#include "revae/dsp/filters.hpp"
#include "support/oracles.hpp"

using namespace revae;
using dsp::Biquad;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::sin(2.0 * kPi * freq * double(t) / fs);
    return x;
}
}  // namespace

TEST_CASE("bandpass attenuates 50 Hz by at least 20 dB at 128 Hz") {
    const double fs = 128.0;
    const auto sos = dsp::butterworth_bandpass(4, 0.1, 45.0, fs);
    const auto x = sine(50.0, fs, 33920);
    const auto y = dsp::sosfiltfilt(sos, x);
    const double in_amp = oracles::tone_amplitude(x, fs, 50.0);
    const double out_amp = oracles::tone_amplitude(y, fs, 50.0);
    const double atten_db = 20.0 * std::log10(in_amp / out_amp);
    CHECK(atten_db >= 20.0);
}

TEST_CASE("bandpass passes 10 Hz within 1 dB") {
    const double fs = 128.0;
    const auto sos = dsp::butterworth_bandpass(4, 0.1, 45.0, fs);
    const auto x = sine(10.0, fs, 33920);
    const auto y = dsp::sosfiltfilt(sos, x);
    const double gain_db =
        20.0 * std::log10(oracles::tone_amplitude(y, fs, 10.0) / oracles::tone_amplitude(x, fs, 10.0));
    CHECK(std::abs(gain_db) <= 1.0);
}

TEST_CASE("bandpass removes DC offset") {
    const double fs = 128.0;
    const auto sos = dsp::butterworth_bandpass(4, 0.1, 45.0, fs);
    auto x = sine(10.0, fs, 33920, 20.0);
    for (auto& v : x) v += 100.0;  // 100 uV offset
    const auto y = dsp::sosfiltfilt(sos, x);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= double(y.size());
    CHECK(std::abs(mean) < 1.0);
}

TEST_CASE("bandpass is linear") {
    const double fs = 128.0;
    const auto sos = dsp::butterworth_bandpass(4, 0.1, 45.0, fs);
    Rng rng(11);
    std::vector<double> x(4096), y(4096);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    const double a = 2.5, b = -1.25;
    std::vector<double> mix(4096);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];

    const auto fx = dsp::sosfiltfilt(sos, x);
    const auto fy = dsp::sosfiltfilt(sos, y);
    const auto fmix = dsp::sosfiltfilt(sos, mix);
    double max_rel = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) scale = std::max(scale, std::abs(fmix[i]));
    for (std::size_t i = 0; i < mix.size(); ++i)
        max_rel = std::max(max_rel, std::abs(fmix[i] - (a * fx[i] + b * fy[i])) / scale);
    CHECK(max_rel < 1e-6);
}

TEST_CASE("bandpass rejects invalid edges") {
    CHECK_THROWS(dsp::butterworth_bandpass(4, 45.0, 0.1, 128.0));
    CHECK_THROWS(dsp::butterworth_bandpass(4, 0.1, 70.0, 128.0));
    CHECK_THROWS(dsp::butterworth_bandpass(4, 0.0, 45.0, 128.0));
}

TEST_CASE("resampler 256 to 128 length and tone preservation") {
    const double fs = 256.0;
    dsp::Resampler rs(fs, 128.0);
    CHECK(rs.output_len(67840) == 33920);

    const auto x = sine(5.0, fs, 67840, 3.0);
    const auto y = rs.apply(x);
    REQUIRE(y.size() == 33920);
    const double amp_in = oracles::tone_amplitude(x, 256.0, 5.0);
    const double amp_out = oracles::tone_amplitude(y, 128.0, 5.0);
    CHECK(std::abs(amp_out - amp_in) / amp_in < 0.01);
}

TEST_CASE("resampler preserves constants at several ratios") {
    for (auto [src, dst] : {std::pair{256.0, 128.0}, {128.0, 256.0}, {200.0, 128.0}}) {
        dsp::Resampler rs(src, dst);
        std::vector<double> x(5000, 4.2);
        const auto y = rs.apply(x);
        for (double v : y) CHECK(std::abs(v - 4.2) < 1e-6);
    }
}

TEST_CASE("resampler rejects irrational-ish ratios") {
    CHECK_THROWS(dsp::Resampler(256.0, 256.0 * std::numbers::sqrt2, 64, 1e-12));
}

TEST_CASE("pink filter spectrum slope near -1") {
    const double fs = 256.0;
    Rng rng(3);
    dsp::PinkFilter pink(fs);
    std::vector<double> x(1 << 16);
    for (std::size_t i = 0; i < 2048; ++i) pink.step(rng.normal());  // warm up
    for (auto& v : x) v = pink.step(rng.normal());
    const auto psd = oracles::welch_psd(x, fs, 2048);
    const double slope = oracles::loglog_slope(psd, 1.0, 40.0);
    CHECK(slope < -0.6);
    CHECK(slope > -1.4);
}
