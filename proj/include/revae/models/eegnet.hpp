#pragma once

// Compact EEGNet-style classifier on raw epochs: temporal convolution,
// depthwise spatial convolution, separable convolution, average pooling,
// and a linear head. Used as the raw-input baseline.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "revae/nn/layers.hpp"

namespace revae::models {

struct EEGNetConfig {
    std::size_t f1 = 8;          // temporal filters
    std::size_t depth_mult = 2;  // spatial filters per temporal filter
    std::size_t f2 = 16;         // separable-stage filters
    double dropout = 0.25;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 60;
    std::size_t early_stop_patience = 8;
    std::uint64_t seed = 1;
    std::size_t n_channels = 19;
    std::size_t epoch_len = 1280;
    std::size_t temporal_kernel = 64;  // rate/2
    std::size_t separable_kernel = 16;
    std::size_t pool1 = 4;
    std::size_t pool2 = 8;

    void validate() const {
        if (f1 < 1 || depth_mult < 1 || f2 < 1)
            throw std::invalid_argument("eegnet: filter counts must be >= 1");
        if (dropout < 0.0 || dropout >= 1.0)
            throw std::invalid_argument("eegnet: dropout must be in [0,1)");
        if (epoch_len / pool1 / pool2 < 1)
            throw std::invalid_argument("eegnet: input too short for the pooling stack");
    }

    std::size_t flat_dim() const { return f2 * (epoch_len / pool1 / pool2); }

    // analytic parameter count (convs are bias-free, batch norm adds 2 per map)
    std::size_t parameter_count() const {
        const std::size_t fd = f1 * depth_mult;
        std::size_t total = 0;
        total += f1 * temporal_kernel;      // temporal conv
        total += 2 * f1;                    // bn1
        total += fd * n_channels;           // depthwise spatial
        total += 2 * fd;                    // bn2
        total += fd * separable_kernel;     // separable depthwise
        total += fd * f2;                   // separable pointwise
        total += 2 * f2;                    // bn3
        total += flat_dim() * 2 + 2;        // linear head
        return total;
    }
};

template <class Real>
class EEGNetNet {
public:
    EEGNetNet() = default;

    explicit EEGNetNet(const EEGNetConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        const std::size_t C = cfg.n_channels, T = cfg.epoch_len;
        const std::size_t fd = cfg.f1 * cfg.depth_mult;
        conv_t_ = nn::Conv2d<Real>::same_width(1, cfg.f1, C, T, cfg.temporal_kernel, false);
        bn1_ = nn::BatchNorm<Real>(cfg.f1, C * T);
        conv_dw_ = nn::Conv2d<Real>(cfg.f1, fd, C, T, C, 1, 0, 0, 0, 0, false, cfg.f1);
        bn2_ = nn::BatchNorm<Real>(fd, T);
        pool1_ = nn::AvgPoolW<Real>(fd, T, cfg.pool1);
        drop1_ = nn::Dropout<Real>(cfg.dropout);
        const std::size_t t1 = T / cfg.pool1;
        conv_sep_dw_ =
            nn::Conv2d<Real>::same_width(fd, fd, 1, t1, cfg.separable_kernel, false, fd);
        conv_sep_pw_ = nn::Conv2d<Real>(fd, cfg.f2, 1, t1, 1, 1, 0, 0, 0, 0, false);
        bn3_ = nn::BatchNorm<Real>(cfg.f2, t1);
        pool2_ = nn::AvgPoolW<Real>(cfg.f2, t1, cfg.pool2);
        drop2_ = nn::Dropout<Real>(cfg.dropout);
        head_ = nn::Dense<Real>(cfg.flat_dim(), 2);
    }

    void init_params(Rng& rng) {
        conv_t_.init(rng);
        conv_dw_.init(rng);
        conv_sep_dw_.init(rng);
        conv_sep_pw_.init(rng);
        head_.init(rng);
    }

    const EEGNetConfig& config() const { return cfg_; }
    std::size_t in_numel() const { return cfg_.n_channels * cfg_.epoch_len; }
    std::size_t out_numel() const { return 2; }
    std::size_t penultimate_dim() const { return cfg_.flat_dim(); }

    void forward(const Real* x, std::size_t n, bool train, Rng& rng) {
        const std::size_t fd = cfg_.f1 * cfg_.depth_mult;
        const std::size_t T = cfg_.epoch_len, t1 = T / cfg_.pool1, t2 = t1 / cfg_.pool2;
        a_t_.resize(n * conv_t_.out_numel());
        a_dw_.resize(n * conv_dw_.out_numel());
        a_p1_.resize(n * fd * t1);
        a_sep_.resize(n * fd * t1);
        a_pw_.resize(n * cfg_.f2 * t1);
        a_p2_.resize(n * cfg_.f2 * t2);
        logits_.resize(n * 2);

        conv_t_.forward(x, a_t_.data(), n);
        bn1_.forward(a_t_.data(), a_t_.data(), n, train);
        conv_dw_.forward(a_t_.data(), a_dw_.data(), n);
        bn2_.forward(a_dw_.data(), a_dw_.data(), n, train);
        act1_.forward(a_dw_.data(), a_dw_.data(), a_dw_.size());
        pool1_.forward(a_dw_.data(), a_p1_.data(), n);
        drop1_.forward(a_p1_.data(), a_p1_.data(), a_p1_.size(), train, rng);
        conv_sep_dw_.forward(a_p1_.data(), a_sep_.data(), n);
        conv_sep_pw_.forward(a_sep_.data(), a_pw_.data(), n);
        bn3_.forward(a_pw_.data(), a_pw_.data(), n, train);
        act2_.forward(a_pw_.data(), a_pw_.data(), a_pw_.size());
        pool2_.forward(a_pw_.data(), a_p2_.data(), n);
        drop2_.forward(a_p2_.data(), a_p2_.data(), a_p2_.size(), train, rng);
        head_.forward(a_p2_.data(), logits_.data(), n);
    }

    void backward(const Real* x, const Real* glogits, std::size_t n) {
        g_p2_.resize(a_p2_.size());
        g_pw_.resize(a_pw_.size());
        g_sep_.resize(a_sep_.size());
        g_p1_.resize(a_p1_.size());
        g_dw_.resize(a_dw_.size());
        g_t_.resize(a_t_.size());

        head_.backward(a_p2_.data(), glogits, g_p2_.data(), n);
        drop2_.backward(g_p2_.data(), g_p2_.data(), g_p2_.size());
        pool2_.backward(g_p2_.data(), g_pw_.data(), n);
        act2_.backward(g_pw_.data(), g_pw_.data(), g_pw_.size());
        bn3_.backward(g_pw_.data(), g_pw_.data(), n);
        conv_sep_pw_.backward(a_sep_.data(), g_pw_.data(), g_sep_.data(), n);
        conv_sep_dw_.backward(a_p1_.data(), g_sep_.data(), g_p1_.data(), n);
        drop1_.backward(g_p1_.data(), g_p1_.data(), g_p1_.size());
        pool1_.backward(g_p1_.data(), g_dw_.data(), n);
        act1_.backward(g_dw_.data(), g_dw_.data(), g_dw_.size());
        bn2_.backward(g_dw_.data(), g_dw_.data(), n);
        conv_dw_.backward(a_t_.data(), g_dw_.data(), g_t_.data(), n);
        bn1_.backward(g_t_.data(), g_t_.data(), n);
        conv_t_.backward(x, g_t_.data(), nullptr, n);
    }

    std::vector<nn::ParamRef<Real>> params() {
        std::vector<nn::ParamRef<Real>> out;
        conv_t_.collect(out, "conv_t");
        bn1_.collect(out, "bn1");
        conv_dw_.collect(out, "conv_dw");
        bn2_.collect(out, "bn2");
        conv_sep_dw_.collect(out, "conv_sep_dw");
        conv_sep_pw_.collect(out, "conv_sep_pw");
        bn3_.collect(out, "bn3");
        head_.collect(out, "head");
        return out;
    }
    std::vector<nn::StateRef<Real>> state() {
        std::vector<nn::StateRef<Real>> out;
        bn1_.collect_state(out, "bn1");
        bn2_.collect_state(out, "bn2");
        bn3_.collect_state(out, "bn3");
        return out;
    }

    const std::vector<Real>& logits() const { return logits_; }
    // flattened activations entering the linear head (eval-mode features)
    const std::vector<Real>& penultimate() const { return a_p2_; }

private:
    EEGNetConfig cfg_;
    nn::Conv2d<Real> conv_t_, conv_dw_, conv_sep_dw_, conv_sep_pw_;
    nn::BatchNorm<Real> bn1_, bn2_, bn3_;
    nn::Elu<Real> act1_, act2_;
    nn::AvgPoolW<Real> pool1_, pool2_;
    nn::Dropout<Real> drop1_, drop2_;
    nn::Dense<Real> head_;

    std::vector<Real> a_t_, a_dw_, a_p1_, a_sep_, a_pw_, a_p2_, logits_;
    std::vector<Real> g_p2_, g_pw_, g_sep_, g_p1_, g_dw_, g_t_;
};

}  // namespace revae::models
