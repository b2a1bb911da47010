#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracles {

namespace {
constexpr double kPi = std::numbers::pi;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: length not a power of 2");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / double(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& v : a) v /= double(n);
}

double tone_amplitude(const std::vector<double>& x, double fs_hz, double freq_hz) {
    std::size_t n = 1;
    while (n < x.size()) n <<= 1;
    std::vector<std::complex<double>> a(n, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft(a);
    const std::size_t bin = std::size_t(std::llround(freq_hz / fs_hz * double(n)));
    // peak may fall in an adjacent bin after zero-padding; take the local max
    double best = 0.0;
    const std::size_t lo = bin > 2 ? bin - 2 : 0;
    for (std::size_t b = lo; b <= std::min(bin + 2, n / 2); ++b)
        best = std::max(best, std::abs(a[b]));
    return 2.0 * best / double(x.size());
}

Psd welch_psd(const std::vector<double>& x, double fs_hz, std::size_t segment) {
    if ((segment & (segment - 1)) != 0) throw std::invalid_argument("welch: segment not pow2");
    if (x.size() < segment) throw std::invalid_argument("welch: signal shorter than segment");
    std::vector<double> window(segment);
    double wss = 0.0;
    for (std::size_t i = 0; i < segment; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * double(i) / double(segment));
        wss += window[i] * window[i];
    }
    const std::size_t hop = segment / 2;
    const std::size_t n_segs = (x.size() - segment) / hop + 1;

    Psd out;
    out.freq.resize(segment / 2 + 1);
    out.power.assign(segment / 2 + 1, 0.0);
    for (std::size_t k = 0; k <= segment / 2; ++k)
        out.freq[k] = double(k) * fs_hz / double(segment);

    std::vector<std::complex<double>> a(segment);
    for (std::size_t s = 0; s < n_segs; ++s) {
        const double* seg = x.data() + s * hop;
        double mean = 0.0;
        for (std::size_t i = 0; i < segment; ++i) mean += seg[i];
        mean /= double(segment);
        for (std::size_t i = 0; i < segment; ++i) a[i] = (seg[i] - mean) * window[i];
        fft(a);
        for (std::size_t k = 0; k <= segment / 2; ++k) {
            const double scale = (k == 0 || k == segment / 2) ? 1.0 : 2.0;
            out.power[k] += scale * std::norm(a[k]) / (fs_hz * wss);
        }
    }
    for (auto& v : out.power) v /= double(n_segs);
    return out;
}

double band_power(const Psd& p, double lo_hz, double hi_hz) {
    double total = 0.0;
    const double df = p.freq.size() > 1 ? p.freq[1] - p.freq[0] : 1.0;
    for (std::size_t k = 0; k < p.freq.size(); ++k)
        if (p.freq[k] >= lo_hz && p.freq[k] <= hi_hz) total += p.power[k] * df;
    return total;
}

double loglog_slope(const Psd& p, double lo_hz, double hi_hz) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < p.freq.size(); ++k) {
        if (p.freq[k] < lo_hz || p.freq[k] > hi_hz || p.power[k] <= 0.0) continue;
        const double lx = std::log10(p.freq[k]);
        const double ly = std::log10(p.power[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("loglog_slope: not enough points in band");
    return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
}

namespace {

// Regularized incomplete beta via continued fraction (Lentz), for the
// Student-t CDF used by the Welch test.
double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-12) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double welch_t_test_p(const std::vector<double>& a, const std::vector<double>& b) {
    const auto stats = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= double(v.size());
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        s2 /= double(v.size() - 1);
        return std::pair<double, double>(m, s2);
    };
    const auto [ma, va] = stats(a);
    const auto [mb, vb] = stats(b);
    const double na = double(a.size()), nb = double(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 <= 0.0) return 1.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    const double x = df / (df + t * t);
    return betai(df / 2.0, 0.5, x);
}

}  // namespace oracles
