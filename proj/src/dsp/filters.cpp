#include "revae/dsp/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace revae::dsp {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Response of a biquad cascade at z = exp(i w).
cd sos_response(const std::vector<Biquad>& sos, double w) {
    const cd z1 = std::exp(cd(0.0, -w));
    const cd z2 = z1 * z1;
    cd h(1.0, 0.0);
    for (const auto& s : sos) {
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return h;
}

double bessel_i0(double x) {
    // Series expansion; converges quickly for the beta values used here.
    double sum = 1.0, term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (double(k) * double(k));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

}  // namespace

std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz) {
    if (!(order >= 1)) throw std::invalid_argument("butterworth: order must be >= 1");
    if (!(0.0 < lo_hz && lo_hz < hi_hz && hi_hz < fs_hz / 2.0))
        throw std::invalid_argument("butterworth: need 0 < lo < hi < fs/2");

    // Bilinear prewarp of the band edges.
    const double k = 2.0 * fs_hz;
    const double w1 = k * std::tan(kPi * lo_hz / fs_hz);
    const double w2 = k * std::tan(kPi * hi_hz / fs_hz);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;

    // Analog low-pass prototype poles on the unit circle, then the low-pass
    // to band-pass transform: s_lp -> (s^2 + w0^2) / (bw * s), which maps each
    // prototype pole to a conjugate-closed pair.
    std::vector<cd> zpoles;
    for (int m = 0; m < order; ++m) {
        const double theta = kPi * (2.0 * m + 1.0) / (2.0 * order) + kPi / 2.0;
        const cd p_lp(std::cos(theta), std::sin(theta));
        const cd bp_half = bw * p_lp / 2.0;
        const cd root = std::sqrt(bp_half * bp_half - w0sq);
        for (const cd s : {bp_half + root, bp_half - root}) {
            zpoles.push_back((k + s) / (k - s));  // bilinear map
        }
    }

    // Sort by radius so the sections nearest the unit circle come last.
    std::sort(zpoles.begin(), zpoles.end(), [](const cd& a, const cd& b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return std::imag(a) < std::imag(b);
    });

    // Pair conjugates into biquads. Every section takes one zero at z=1 and
    // one at z=-1 (the band-pass transform contributes `order` zeros at each).
    std::vector<Biquad> sos;
    std::vector<bool> used(zpoles.size(), false);
    for (std::size_t i = 0; i < zpoles.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        const cd p = zpoles[i];
        std::size_t j = i;
        double best = 1e300;
        for (std::size_t c = i + 1; c < zpoles.size(); ++c) {
            if (used[c]) continue;
            const double d = std::abs(zpoles[c] - std::conj(p));
            if (d < best) { best = d; j = c; }
        }
        double a1, a2;
        if (j != i) {
            used[j] = true;
            a1 = -2.0 * std::real(p);
            a2 = std::norm(p);
        } else {
            a1 = -std::real(p);  // lone real pole (odd orders)
            a2 = 0.0;
        }
        sos.push_back(Biquad{1.0, 0.0, -1.0, a1, a2});
    }

    // Unit gain at the geometric band center, distributed across sections.
    const double wc = 2.0 * std::atan(std::sqrt(w0sq) / k);
    const double mag = std::abs(sos_response(sos, wc));
    const double per_section = std::pow(1.0 / mag, 1.0 / double(sos.size()));
    for (auto& s : sos) {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    return sos;
}

namespace {

// DF2T run over x, in place, with states initialized to the steady-state
// response for a step of height x[0].
void sosfilt_steady(const std::vector<Biquad>& sos, std::vector<double>& x) {
    for (const auto& s : sos) {
        const double hdc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double x0 = x.empty() ? 0.0 : x[0];
        const double y0 = hdc * x0;
        double s2 = s.b2 * x0 - s.a2 * y0;
        double s1 = s.b1 * x0 - s.a1 * y0 + s2;
        for (double& v : x) {
            const double xn = v;
            const double yn = s.b0 * xn + s1;
            s1 = s.b1 * xn - s.a1 * yn + s2;
            s2 = s.b2 * xn - s.a2 * yn;
            v = yn;
        }
    }
}

}  // namespace

std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("sosfiltfilt: signal too short");
    const std::size_t n = x.size();
    const std::size_t pad = std::min(n - 1, std::size_t(3 * (2 * sos.size() + 1) + 600));

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    sosfilt_steady(sos, ext);
    std::reverse(ext.begin(), ext.end());
    sosfilt_steady(sos, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + std::ptrdiff_t(pad),
                               ext.begin() + std::ptrdiff_t(pad + n));
}

Resampler::Resampler(double source_hz, double target_hz, std::size_t max_denominator,
                     double rel_tol) {
    if (!(source_hz > 0.0) || !(target_hz > 0.0))
        throw std::invalid_argument("resample: rates must be positive");
    const double ratio = target_hz / source_hz;

    // Best rational approximation by continued fractions.
    double r = ratio;
    std::size_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(r);
        const std::size_t ai = std::size_t(a);
        const std::size_t p2 = ai * p1 + p0;
        const std::size_t q2 = ai * q1 + q0;
        if (q2 > max_denominator) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        const double frac = r - a;
        if (frac < 1e-12) break;
        r = 1.0 / frac;
    }
    p_ = p1;
    q_ = q1;
    if (p_ == 0 || q_ == 0 || std::abs(double(p_) / double(q_) - ratio) > rel_tol * ratio)
        throw std::invalid_argument("resample: rate ratio is not rational within tolerance");
    const std::size_t g = std::gcd(p_, q_);
    p_ /= g;
    q_ /= g;

    // Kaiser-windowed sinc low-pass at the Nyquist of the lower rate,
    // expressed at the upsampled rate fs * p.
    const std::size_t m = std::max(p_, q_);
    half_ = 10 * m;
    const double beta = 5.0;
    const double fc = 1.0 / double(m);  // fraction of upsampled Nyquist
    taps_.assign(2 * half_ + 1, 0.0);
    const double i0b = bessel_i0(beta);
    for (std::size_t j = 0; j < taps_.size(); ++j) {
        const double t = double(j) - double(half_);
        const double sinc = (t == 0.0) ? 1.0 : std::sin(kPi * fc * t) / (kPi * fc * t);
        const double u = t / double(half_ + 1);
        const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0b;
        taps_[j] = fc * sinc * win;
    }

    branch_gain_.assign(p_, 0.0);
    for (std::size_t j = 0; j < taps_.size(); ++j) {
        // Tap j participates in output m when (m q + half - j) mod p == 0.
        const std::size_t phase = j % p_;
        branch_gain_[phase] += taps_[j];
    }
}

std::size_t Resampler::output_len(std::size_t n) const {
    return std::size_t(std::llround(double(n) * double(p_) / double(q_)));
}

std::vector<double> Resampler::apply(const std::vector<double>& x) const {
    if (x.empty()) return {};
    const std::size_t n = x.size();
    const std::size_t n_out = output_len(n);
    std::vector<double> y(n_out, 0.0);
    const std::ptrdiff_t nn = std::ptrdiff_t(n);
    for (std::size_t m = 0; m < n_out; ++m) {
        const std::ptrdiff_t center = std::ptrdiff_t(m * q_) + std::ptrdiff_t(half_);
        // j must satisfy (center - j) divisible by p; smallest such j >= 0:
        const std::size_t j0 = std::size_t(center % std::ptrdiff_t(p_));
        double acc = 0.0;
        for (std::size_t j = j0; j < taps_.size(); j += p_) {
            std::ptrdiff_t idx = (center - std::ptrdiff_t(j)) / std::ptrdiff_t(p_);
            if (idx < 0) idx = 0;             // replicate edges
            if (idx >= nn) idx = nn - 1;
            acc += taps_[j] * x[std::size_t(idx)];
        }
        y[m] = acc / branch_gain_[j0 % p_];
    }
    return y;
}

PinkFilter::PinkFilter(double fs_hz, double lo_hz, double hi_hz, int sections_per_decade) {
    const double decades = std::log10(hi_hz / lo_hz);
    const int n_sections = std::max(1, int(std::ceil(decades * sections_per_decade)));
    const double ratio = std::pow(hi_hz / lo_hz, 1.0 / n_sections);
    for (int i = 0; i < n_sections; ++i) {
        // Pole at the section corner, zero half a step above it: the average
        // amplitude slope over each step is -10 dB/decade, i.e. 1/f power.
        const double f_pole = lo_hz * std::pow(ratio, double(i));
        const double f_zero = f_pole * std::sqrt(ratio);
        Section s;
        s.pole = std::exp(-2.0 * kPi * f_pole / fs_hz);
        s.zero = std::exp(-2.0 * kPi * f_zero / fs_hz);
        sections_.push_back(s);
    }
}

double PinkFilter::step(double x) {
    for (auto& s : sections_) {
        const double y = x - s.zero * s.x1 + s.pole * s.y1;
        s.x1 = x;
        s.y1 = y;
        x = y;
    }
    return x;
}

void PinkFilter::reset() {
    for (auto& s : sections_) s.x1 = s.y1 = 0.0;
}

}  // namespace revae::dsp
