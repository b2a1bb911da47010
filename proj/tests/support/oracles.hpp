#pragma once

// Test-only oracles, deliberately independent of the library code paths they
// check: a plain radix-2 FFT, Welch spectra, and single-bin amplitude probes.

#include <complex>
#include <cstddef>
#include <vector>

namespace oracles {

// In-place radix-2 FFT; length must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// Amplitude of the sinusoid at freq_hz estimated from the DFT bin nearest to
// it (signal zero-padded to the next power of two).
double tone_amplitude(const std::vector<double>& x, double fs_hz, double freq_hz);

// Welch PSD with Hann window and 50% overlap. Returns (freqs, psd).
struct Psd {
    std::vector<double> freq;
    std::vector<double> power;
};
Psd welch_psd(const std::vector<double>& x, double fs_hz, std::size_t segment = 512);

// Band power by integrating the Welch PSD over [lo, hi].
double band_power(const Psd& p, double lo_hz, double hi_hz);

// Least-squares slope of log10(power) vs log10(freq) over [lo, hi].
double loglog_slope(const Psd& p, double lo_hz, double hi_hz);

// Welch's t-test two-sided p-value (unequal variances).
double welch_t_test_p(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace oracles
