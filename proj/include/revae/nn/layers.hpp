#pragma once

// Small dense/conv layer zoo with explicit backward passes. Everything is
// templated on the scalar type: training runs in float, gradient checks run
// the same code in double. Layers cache whatever their backward needs, and
// all parallel loops write disjoint slices, so results do not depend on the
// number of threads.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "revae/core/rng.hpp"

namespace revae::nn {

template <class Real>
struct ParamRef {
    std::string name;
    Real* value;
    Real* grad;
    std::size_t n;
};

template <class Real>
struct StateRef {  // non-trainable state (batch-norm running statistics)
    std::string name;
    Real* value;
    std::size_t n;
};

template <class Real>
inline void fill_normal(std::vector<Real>& v, Rng& rng, double stddev) {
    for (auto& x : v) x = Real(stddev * rng.normal());
}

// ---------------------------------------------------------------------------
// 2-D convolution, stride 1, asymmetric zero padding, optional groups.
// Input  [n][in_ch][H][W], output [n][out_ch][Ho][Wo].
// Covers the temporal (1 x k, same padding) and spatial (19 x 1, valid)
// convolutions, depthwise/separable blocks (groups) and, with swapped
// channel roles and inverted padding, stride-1 transposed convolutions.
// ---------------------------------------------------------------------------
template <class Real>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t H, std::size_t W, std::size_t kh,
           std::size_t kw, std::size_t pad_top, std::size_t pad_bottom, std::size_t pad_left,
           std::size_t pad_right, bool bias, std::size_t groups = 1)
        : in_ch_(in_ch), out_ch_(out_ch), H_(H), W_(W), kh_(kh), kw_(kw), pt_(pad_top),
          pb_(pad_bottom), pl_(pad_left), pr_(pad_right), groups_(groups), has_bias_(bias) {
        if (in_ch % groups != 0 || out_ch % groups != 0)
            throw std::invalid_argument("conv: channels not divisible by groups");
        if (H + pad_top + pad_bottom < kh || W + pad_left + pad_right < kw)
            throw std::invalid_argument("conv: kernel larger than padded input");
        Ho_ = H + pad_top + pad_bottom + 1 - kh;
        Wo_ = W + pad_left + pad_right + 1 - kw;
        cg_ = in_ch / groups;
        w.assign(out_ch * cg_ * kh * kw, Real(0));
        gw.assign(w.size(), Real(0));
        if (has_bias_) {
            b.assign(out_ch, Real(0));
            gb.assign(out_ch, Real(0));
        }
    }

    // "same" width padding for even or odd kernels: total kw-1, split low/high
    static Conv2d same_width(std::size_t in_ch, std::size_t out_ch, std::size_t H, std::size_t W,
                             std::size_t kw, bool bias, std::size_t groups = 1) {
        const std::size_t total = kw - 1;
        return Conv2d(in_ch, out_ch, H, W, 1, kw, 0, 0, total / 2, total - total / 2, bias, groups);
    }

    void init(Rng& rng) {
        const double fan_in = double(cg_ * kh_ * kw_);
        fill_normal(w, rng, std::sqrt(2.0 / fan_in));
    }

    std::size_t in_numel() const { return in_ch_ * H_ * W_; }
    std::size_t out_numel() const { return out_ch_ * Ho_ * Wo_; }
    std::size_t out_h() const { return Ho_; }
    std::size_t out_w() const { return Wo_; }
    std::size_t out_channels() const { return out_ch_; }

    void forward(const Real* x, Real* y, std::size_t n) const {
        const std::size_t co_per_g = out_ch_ / groups_;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t sp = 0; sp < std::ptrdiff_t(n); ++sp) {
            const std::size_t s = std::size_t(sp);
            for (std::size_t co = 0; co < out_ch_; ++co) {
                Real* yb = y + (s * out_ch_ + co) * Ho_ * Wo_;
                const Real bias = has_bias_ ? b[co] : Real(0);
                const std::size_t g = co / co_per_g;
                for (std::size_t i = 0; i < Ho_ * Wo_; ++i) yb[i] = bias;
                for (std::size_t cig = 0; cig < cg_; ++cig) {
                    const std::size_t ci = g * cg_ + cig;
                    const Real* xc = x + (s * in_ch_ + ci) * H_ * W_;
                    const Real* wk = w.data() + (co * cg_ + cig) * kh_ * kw_;
                    for (std::size_t kh = 0; kh < kh_; ++kh) {
                        for (std::size_t ho = 0; ho < Ho_; ++ho) {
                            const std::ptrdiff_t h =
                                std::ptrdiff_t(ho + kh) - std::ptrdiff_t(pt_);
                            if (h < 0 || h >= std::ptrdiff_t(H_)) continue;
                            const Real* xrow = xc + std::size_t(h) * W_;
                            Real* yrow = yb + ho * Wo_;
                            for (std::size_t kw = 0; kw < kw_; ++kw) {
                                const Real wv = wk[kh * kw_ + kw];
                                const std::ptrdiff_t shift =
                                    std::ptrdiff_t(kw) - std::ptrdiff_t(pl_);
                                const std::size_t lo =
                                    shift < 0 ? std::size_t(-shift) : std::size_t(0);
                                const std::size_t hi =
                                    std::min(Wo_, std::size_t(std::ptrdiff_t(W_) - shift));
                                const Real* xs = xrow + shift;
                                for (std::size_t wo = lo; wo < hi; ++wo)
                                    yrow[wo] += wv * xs[wo];
                            }
                        }
                    }
                }
            }
        }
    }

    // gx may be null (first layer). Accumulates into gw/gb.
    void backward(const Real* x, const Real* gy, Real* gx, std::size_t n) {
        const std::size_t co_per_g = out_ch_ / groups_;
        if (gx) {
            for (std::size_t i = 0; i < n * in_numel(); ++i) gx[i] = Real(0);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t sp = 0; sp < std::ptrdiff_t(n); ++sp) {
                const std::size_t s = std::size_t(sp);
                for (std::size_t co = 0; co < out_ch_; ++co) {
                    const Real* gyb = gy + (s * out_ch_ + co) * Ho_ * Wo_;
                    const std::size_t g = co / co_per_g;
                    for (std::size_t cig = 0; cig < cg_; ++cig) {
                        const std::size_t ci = g * cg_ + cig;
                        Real* gxc = gx + (s * in_ch_ + ci) * H_ * W_;
                        const Real* wk = w.data() + (co * cg_ + cig) * kh_ * kw_;
                        for (std::size_t kh = 0; kh < kh_; ++kh) {
                            for (std::size_t ho = 0; ho < Ho_; ++ho) {
                                const std::ptrdiff_t h =
                                    std::ptrdiff_t(ho + kh) - std::ptrdiff_t(pt_);
                                if (h < 0 || h >= std::ptrdiff_t(H_)) continue;
                                Real* gxrow = gxc + std::size_t(h) * W_;
                                const Real* gyrow = gyb + ho * Wo_;
                                for (std::size_t kw = 0; kw < kw_; ++kw) {
                                    const Real wv = wk[kh * kw_ + kw];
                                    const std::ptrdiff_t shift =
                                        std::ptrdiff_t(kw) - std::ptrdiff_t(pl_);
                                    const std::size_t lo =
                                        shift < 0 ? std::size_t(-shift) : std::size_t(0);
                                    const std::size_t hi =
                                        std::min(Wo_, std::size_t(std::ptrdiff_t(W_) - shift));
                                    Real* gxs = gxrow + shift;
                                    for (std::size_t wo = lo; wo < hi; ++wo)
                                        gxs[wo] += wv * gyrow[wo];
                                }
                            }
                        }
                    }
                }
            }
        }
        // weight gradients: parallel over output channels (disjoint slices)
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t cop = 0; cop < std::ptrdiff_t(out_ch_); ++cop) {
            const std::size_t co = std::size_t(cop);
            const std::size_t g = co / co_per_g;
            for (std::size_t cig = 0; cig < cg_; ++cig) {
                const std::size_t ci = g * cg_ + cig;
                Real* gwk = gw.data() + (co * cg_ + cig) * kh_ * kw_;
                for (std::size_t s = 0; s < n; ++s) {
                    const Real* gyb = gy + (s * out_ch_ + co) * Ho_ * Wo_;
                    const Real* xc = x + (s * in_ch_ + ci) * H_ * W_;
                    for (std::size_t kh = 0; kh < kh_; ++kh) {
                        for (std::size_t ho = 0; ho < Ho_; ++ho) {
                            const std::ptrdiff_t h =
                                std::ptrdiff_t(ho + kh) - std::ptrdiff_t(pt_);
                            if (h < 0 || h >= std::ptrdiff_t(H_)) continue;
                            const Real* xrow = xc + std::size_t(h) * W_;
                            const Real* gyrow = gyb + ho * Wo_;
                            for (std::size_t kw = 0; kw < kw_; ++kw) {
                                const std::ptrdiff_t shift =
                                    std::ptrdiff_t(kw) - std::ptrdiff_t(pl_);
                                const std::size_t lo =
                                    shift < 0 ? std::size_t(-shift) : std::size_t(0);
                                const std::size_t hi =
                                    std::min(Wo_, std::size_t(std::ptrdiff_t(W_) - shift));
                                const Real* xs = xrow + shift;
                                Real acc = Real(0);
                                for (std::size_t wo = lo; wo < hi; ++wo)
                                    acc += gyrow[wo] * xs[wo];
                                gwk[kh * kw_ + kw] += acc;
                            }
                        }
                    }
                }
            }
            if (has_bias_) {
                Real acc = Real(0);
                for (std::size_t s = 0; s < n; ++s) {
                    const Real* gyb = gy + (s * out_ch_ + co) * Ho_ * Wo_;
                    for (std::size_t i = 0; i < Ho_ * Wo_; ++i) acc += gyb[i];
                }
                gb[co] += acc;
            }
        }
    }

    void collect(std::vector<ParamRef<Real>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", w.data(), gw.data(), w.size()});
        if (has_bias_) out.push_back({prefix + ".b", b.data(), gb.data(), b.size()});
    }

    std::vector<Real> w, b, gw, gb;

private:
    std::size_t in_ch_ = 0, out_ch_ = 0, H_ = 0, W_ = 0, kh_ = 0, kw_ = 0;
    std::size_t pt_ = 0, pb_ = 0, pl_ = 0, pr_ = 0;
    std::size_t Ho_ = 0, Wo_ = 0, groups_ = 1, cg_ = 0;
    bool has_bias_ = true;
};

// Stride-1 transposed convolution expressed as the equivalent forward
// convolution with swapped channel roles and inverted padding.
template <class Real>
inline Conv2d<Real> conv_transpose2d(std::size_t in_ch, std::size_t out_ch, std::size_t H,
                                     std::size_t W, std::size_t kh, std::size_t kw,
                                     std::size_t fwd_pad_top, std::size_t fwd_pad_bottom,
                                     std::size_t fwd_pad_left, std::size_t fwd_pad_right,
                                     bool bias) {
    return Conv2d<Real>(in_ch, out_ch, H, W, kh, kw, kh - 1 - fwd_pad_top,
                        kh - 1 - fwd_pad_bottom, kw - 1 - fwd_pad_left, kw - 1 - fwd_pad_right,
                        bias);
}

// ---------------------------------------------------------------------------
// Fully connected layer: y = x W^T + b, W is [out][in].
// ---------------------------------------------------------------------------
template <class Real>
class Dense {
public:
    Dense() = default;
    Dense(std::size_t in, std::size_t out, bool bias = true)
        : in_(in), out_(out), has_bias_(bias) {
        w.assign(in * out, Real(0));
        gw.assign(w.size(), Real(0));
        if (bias) {
            b.assign(out, Real(0));
            gb.assign(out, Real(0));
        }
    }

    void init(Rng& rng) { fill_normal(w, rng, std::sqrt(2.0 / double(in_))); }

    std::size_t in_numel() const { return in_; }
    std::size_t out_numel() const { return out_; }

    void forward(const Real* x, Real* y, std::size_t n) const {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t sp = 0; sp < std::ptrdiff_t(n); ++sp) {
            const std::size_t s = std::size_t(sp);
            const Real* xs = x + s * in_;
            Real* ys = y + s * out_;
            for (std::size_t o = 0; o < out_; ++o) {
                const Real* wo = w.data() + o * in_;
                Real acc = has_bias_ ? b[o] : Real(0);
                for (std::size_t k = 0; k < in_; ++k) acc += wo[k] * xs[k];
                ys[o] = acc;
            }
        }
    }

    void backward(const Real* x, const Real* gy, Real* gx, std::size_t n) {
        if (gx) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t sp = 0; sp < std::ptrdiff_t(n); ++sp) {
                const std::size_t s = std::size_t(sp);
                const Real* gys = gy + s * out_;
                Real* gxs = gx + s * in_;
                for (std::size_t k = 0; k < in_; ++k) gxs[k] = Real(0);
                for (std::size_t o = 0; o < out_; ++o) {
                    const Real g = gys[o];
                    const Real* wo = w.data() + o * in_;
                    for (std::size_t k = 0; k < in_; ++k) gxs[k] += g * wo[k];
                }
            }
        }
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t op = 0; op < std::ptrdiff_t(out_); ++op) {
            const std::size_t o = std::size_t(op);
            Real* gwo = gw.data() + o * in_;
            Real gbo = Real(0);
            for (std::size_t s = 0; s < n; ++s) {
                const Real g = gy[s * out_ + o];
                const Real* xs = x + s * in_;
                for (std::size_t k = 0; k < in_; ++k) gwo[k] += g * xs[k];
                gbo += g;
            }
            if (has_bias_) gb[o] += gbo;
        }
    }

    void collect(std::vector<ParamRef<Real>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", w.data(), gw.data(), w.size()});
        if (has_bias_) out.push_back({prefix + ".b", b.data(), gb.data(), b.size()});
    }

    std::vector<Real> w, b, gw, gb;

private:
    std::size_t in_ = 0, out_ = 0;
    bool has_bias_ = true;
};

// ---------------------------------------------------------------------------
// Batch normalization over per-channel statistics; channel c covers a
// contiguous block of `spatial` values in each sample.
// ---------------------------------------------------------------------------
template <class Real>
class BatchNorm {
public:
    BatchNorm() = default;
    BatchNorm(std::size_t channels, std::size_t spatial, double eps = 1e-5, double momentum = 0.1)
        : C_(channels), S_(spatial), eps_(eps), momentum_(momentum) {
        gamma.assign(C_, Real(1));
        beta.assign(C_, Real(0));
        ggamma.assign(C_, Real(0));
        gbeta.assign(C_, Real(0));
        running_mean.assign(C_, Real(0));
        running_var.assign(C_, Real(1));
    }

    std::size_t numel() const { return C_ * S_; }

    void forward(const Real* x, Real* y, std::size_t n, bool train) {
        if (train) {
            xhat_.resize(n * C_ * S_);
            invstd_.resize(C_);
            const double m = double(n * S_);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t cp = 0; cp < std::ptrdiff_t(C_); ++cp) {
                const std::size_t c = std::size_t(cp);
                double sum = 0.0;
                for (std::size_t s = 0; s < n; ++s) {
                    const Real* xc = x + (s * C_ + c) * S_;
                    for (std::size_t i = 0; i < S_; ++i) sum += double(xc[i]);
                }
                const double mean = sum / m;
                double var = 0.0;
                for (std::size_t s = 0; s < n; ++s) {
                    const Real* xc = x + (s * C_ + c) * S_;
                    for (std::size_t i = 0; i < S_; ++i) {
                        const double d = double(xc[i]) - mean;
                        var += d * d;
                    }
                }
                var /= m;
                const Real inv = Real(1.0 / std::sqrt(var + eps_));
                invstd_[c] = inv;
                const Real mu = Real(mean);
                for (std::size_t s = 0; s < n; ++s) {
                    const Real* xc = x + (s * C_ + c) * S_;
                    Real* yc = y + (s * C_ + c) * S_;
                    Real* hc = xhat_.data() + (s * C_ + c) * S_;
                    for (std::size_t i = 0; i < S_; ++i) {
                        const Real h = (xc[i] - mu) * inv;
                        hc[i] = h;
                        yc[i] = gamma[c] * h + beta[c];
                    }
                }
                running_mean[c] = Real((1.0 - momentum_) * double(running_mean[c]) + momentum_ * mean);
                running_var[c] = Real((1.0 - momentum_) * double(running_var[c]) + momentum_ * var);
            }
        } else {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t cp = 0; cp < std::ptrdiff_t(C_); ++cp) {
                const std::size_t c = std::size_t(cp);
                const Real inv = Real(1.0 / std::sqrt(double(running_var[c]) + eps_));
                for (std::size_t s = 0; s < n; ++s) {
                    const Real* xc = x + (s * C_ + c) * S_;
                    Real* yc = y + (s * C_ + c) * S_;
                    for (std::size_t i = 0; i < S_; ++i)
                        yc[i] = gamma[c] * (xc[i] - running_mean[c]) * inv + beta[c];
                }
            }
        }
    }

    // Training-mode backward through the batch statistics.
    void backward(const Real* gy, Real* gx, std::size_t n) {
        const double m = double(n * S_);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t cp = 0; cp < std::ptrdiff_t(C_); ++cp) {
            const std::size_t c = std::size_t(cp);
            double sum_gy = 0.0, sum_gy_h = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                const Real* gyc = gy + (s * C_ + c) * S_;
                const Real* hc = xhat_.data() + (s * C_ + c) * S_;
                for (std::size_t i = 0; i < S_; ++i) {
                    sum_gy += double(gyc[i]);
                    sum_gy_h += double(gyc[i]) * double(hc[i]);
                }
            }
            ggamma[c] += Real(sum_gy_h);
            gbeta[c] += Real(sum_gy);
            const Real k = Real(double(gamma[c]) * double(invstd_[c]) / m);
            const Real a = Real(sum_gy);
            const Real bsum = Real(sum_gy_h);
            for (std::size_t s = 0; s < n; ++s) {
                const Real* gyc = gy + (s * C_ + c) * S_;
                const Real* hc = xhat_.data() + (s * C_ + c) * S_;
                Real* gxc = gx + (s * C_ + c) * S_;
                for (std::size_t i = 0; i < S_; ++i)
                    gxc[i] = k * (Real(m) * gyc[i] - a - hc[i] * bsum);
            }
        }
    }

    void collect(std::vector<ParamRef<Real>>& out, const std::string& prefix) {
        out.push_back({prefix + ".gamma", gamma.data(), ggamma.data(), gamma.size()});
        out.push_back({prefix + ".beta", beta.data(), gbeta.data(), beta.size()});
    }
    void collect_state(std::vector<StateRef<Real>>& out, const std::string& prefix) {
        out.push_back({prefix + ".running_mean", running_mean.data(), running_mean.size()});
        out.push_back({prefix + ".running_var", running_var.data(), running_var.size()});
    }

    std::vector<Real> gamma, beta, ggamma, gbeta, running_mean, running_var;

private:
    std::size_t C_ = 0, S_ = 0;
    double eps_ = 1e-5, momentum_ = 0.1;
    std::vector<Real> xhat_, invstd_;
};

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------
template <class Real>
class LeakyReLU {
public:
    LeakyReLU() = default;
    explicit LeakyReLU(double slope) : slope_(Real(slope)) {}

    void forward(const Real* x, Real* y, std::size_t count) {
        mask_.resize(count);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(count); ++i) {
            const bool pos = x[i] > Real(0);
            mask_[std::size_t(i)] = pos;
            y[i] = pos ? x[i] : slope_ * x[i];
        }
    }
    void backward(const Real* gy, Real* gx, std::size_t count) const {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(count); ++i)
            gx[i] = mask_[std::size_t(i)] ? gy[i] : slope_ * gy[i];
    }

private:
    Real slope_ = Real(0.01);
    std::vector<char> mask_;
};

template <class Real>
class Elu {
public:
    void forward(const Real* x, Real* y, std::size_t count) {
        out_.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            y[i] = x[i] > Real(0) ? x[i] : Real(std::expm1(double(x[i])));
            out_[i] = y[i];
        }
    }
    void backward(const Real* gy, Real* gx, std::size_t count) const {
        for (std::size_t i = 0; i < count; ++i)
            gx[i] = out_[i] > Real(0) ? gy[i] : gy[i] * (out_[i] + Real(1));
    }

private:
    std::vector<Real> out_;
};

template <class Real>
class ReLU {
public:
    void forward(const Real* x, Real* y, std::size_t count) {
        mask_.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            mask_[i] = x[i] > Real(0);
            y[i] = mask_[i] ? x[i] : Real(0);
        }
    }
    void backward(const Real* gy, Real* gx, std::size_t count) const {
        for (std::size_t i = 0; i < count; ++i) gx[i] = mask_[i] ? gy[i] : Real(0);
    }

private:
    std::vector<char> mask_;
};

// ---------------------------------------------------------------------------
// Non-overlapping average pooling along the innermost (width) axis.
// Requires W divisible-or-truncated: output width = W / k (floor), trailing
// remainder is an error at construction when it would be zero.
// ---------------------------------------------------------------------------
template <class Real>
class AvgPoolW {
public:
    AvgPoolW() = default;
    AvgPoolW(std::size_t rows, std::size_t W, std::size_t k) : rows_(rows), W_(W), k_(k) {
        Wo_ = W / k;
        if (Wo_ == 0) throw std::invalid_argument("avgpool: window larger than input width");
    }

    std::size_t out_w() const { return Wo_; }
    std::size_t in_numel() const { return rows_ * W_; }
    std::size_t out_numel() const { return rows_ * Wo_; }

    void forward(const Real* x, Real* y, std::size_t n) const {
        const Real inv = Real(1) / Real(k_);
        for (std::size_t r = 0; r < n * rows_; ++r) {
            const Real* xr = x + r * W_;
            Real* yr = y + r * Wo_;
            for (std::size_t o = 0; o < Wo_; ++o) {
                Real acc = Real(0);
                for (std::size_t j = 0; j < k_; ++j) acc += xr[o * k_ + j];
                yr[o] = acc * inv;
            }
        }
    }
    void backward(const Real* gy, Real* gx, std::size_t n) const {
        const Real inv = Real(1) / Real(k_);
        for (std::size_t r = 0; r < n * rows_; ++r) {
            const Real* gyr = gy + r * Wo_;
            Real* gxr = gx + r * W_;
            for (std::size_t i = 0; i < W_; ++i) gxr[i] = Real(0);
            for (std::size_t o = 0; o < Wo_; ++o)
                for (std::size_t j = 0; j < k_; ++j) gxr[o * k_ + j] = gyr[o] * inv;
        }
    }

private:
    std::size_t rows_ = 0, W_ = 0, k_ = 1, Wo_ = 0;
};

// ---------------------------------------------------------------------------
// Inverted dropout; identity at inference.
// ---------------------------------------------------------------------------
template <class Real>
class Dropout {
public:
    Dropout() = default;
    explicit Dropout(double rate) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
    }

    void forward(const Real* x, Real* y, std::size_t count, bool train, Rng& rng) {
        if (!train || rate_ == 0.0) {
            if (y != x)
                for (std::size_t i = 0; i < count; ++i) y[i] = x[i];
            active_ = false;
            return;
        }
        active_ = true;
        mask_.resize(count);
        const Real scale = Real(1.0 / (1.0 - rate_));
        for (std::size_t i = 0; i < count; ++i) {
            mask_[i] = rng.uniform() >= rate_;
            y[i] = mask_[i] ? x[i] * scale : Real(0);
        }
    }
    void backward(const Real* gy, Real* gx, std::size_t count) const {
        if (!active_) {
            if (gx != gy)
                for (std::size_t i = 0; i < count; ++i) gx[i] = gy[i];
            return;
        }
        const Real scale = Real(1.0 / (1.0 - rate_));
        for (std::size_t i = 0; i < count; ++i) gx[i] = mask_[i] ? gy[i] * scale : Real(0);
    }

private:
    double rate_ = 0.0;
    bool active_ = false;
    std::vector<char> mask_;
};

// ---------------------------------------------------------------------------
// Softmax + cross-entropy on logits [n][k]; returns mean loss and writes
// probabilities; gradient is (p - onehot) / n.
// ---------------------------------------------------------------------------
template <class Real>
inline double softmax_cross_entropy(const Real* logits, const int* labels, std::size_t n,
                                    std::size_t k, Real* probs, Real* glogits) {
    double loss = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const Real* ls = logits + s * k;
        Real* ps = probs + s * k;
        Real mx = ls[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, ls[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(double(ls[j] - mx));
        for (std::size_t j = 0; j < k; ++j) ps[j] = Real(std::exp(double(ls[j] - mx)) / z);
        loss -= std::log(std::max(double(ps[std::size_t(labels[s])]), 1e-300));
        if (glogits) {
            Real* gs = glogits + s * k;
            for (std::size_t j = 0; j < k; ++j)
                gs[j] = (ps[j] - Real(j == std::size_t(labels[s]) ? 1 : 0)) / Real(n);
        }
    }
    return loss / double(n);
}

}  // namespace revae::nn
