#pragma once

#include <cstddef>
#include <vector>

namespace revae::dsp {

// One biquad section, direct form II transposed coefficients.
// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
    double b0, b1, b2, a1, a2;
};

// Butterworth band-pass of the given prototype order, as a biquad cascade
// (2 * order poles after the band transform). Edges in Hz.
std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz);

// Zero-phase filtering: odd-reflection padding, forward pass, reverse,
// forward again, reverse, trim. Section states are initialized to the
// steady-state response of the first padded sample, so constant inputs
// produce their steady-state output from sample zero.
std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x);

// Polyphase rational-ratio resampler with a Kaiser-windowed sinc anti-alias
// filter. Each polyphase branch is normalized to unit DC gain, and edges are
// handled by replicating the boundary samples, so constants are preserved
// exactly. Output length is round(n * p / q).
struct Resampler {
    // Throws std::invalid_argument if target/source cannot be approximated by
    // a rational p/q with q <= max_denominator to within rel_tol.
    Resampler(double source_hz, double target_hz, std::size_t max_denominator = 1024,
              double rel_tol = 1e-9);

    std::vector<double> apply(const std::vector<double>& x) const;
    std::size_t output_len(std::size_t n) const;

    std::size_t up() const { return p_; }
    std::size_t down() const { return q_; }

private:
    std::size_t p_ = 1, q_ = 1;
    std::size_t half_ = 0;
    std::vector<double> taps_;
    std::vector<double> branch_gain_;  // per-phase DC normalization
};

// 1/f ("pink") shaping filter: a cascade of first-order pole/zero sections
// with corners geometrically spaced between lo_hz and hi_hz. Feeding white
// noise through it yields a power spectrum with log-log slope close to -1
// inside the band.
class PinkFilter {
public:
    PinkFilter(double fs_hz, double lo_hz = 0.03, double hi_hz = 100.0, int sections_per_decade = 3);

    double step(double x);
    void reset();

private:
    struct Section {
        double pole, zero;
        double x1 = 0.0, y1 = 0.0;
    };
    std::vector<Section> sections_;
};

}  // namespace revae::dsp
