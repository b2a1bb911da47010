#pragma once

// The final classifier: a 1-D CNN over latent feature rows treated as a
// single-channel sequence. Three same-padded convolutions with batch norm
// and leaky ReLU, two average-pooling/dropout stages, and a linear head.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "revae/nn/layers.hpp"

namespace revae::models {

struct CNN1DConfig {
    std::size_t conv1_filters = 8;
    std::size_t conv1_width = 64;
    std::size_t conv2_filters = 16;
    std::size_t conv2_width = 32;
    std::size_t pool1 = 4;
    double drop1 = 0.25;
    std::size_t conv3_filters = 32;
    std::size_t conv3_width = 16;
    std::size_t pool2 = 8;
    double drop2 = 0.25;
    double leaky_slope = 0.01;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 120;
    std::size_t early_stop_patience = 15;
    std::uint64_t seed = 1;
    std::size_t input_dim = 64;

    void validate() const {
        if (conv1_filters < 1 || conv2_filters < 1 || conv3_filters < 1)
            throw std::invalid_argument("cnn1d: filter counts must be >= 1");
        if (drop1 < 0.0 || drop1 >= 1.0 || drop2 < 0.0 || drop2 >= 1.0)
            throw std::invalid_argument("cnn1d: dropout must be in [0,1)");
        if (input_dim / pool1 < 1 || (input_dim / pool1) / pool2 < 1)
            throw std::invalid_argument(
                "cnn1d: input shorter than the minimum surviving the conv/pool stack (needs >= " +
                std::to_string(pool1 * pool2) + ")");
    }

    std::size_t flat_dim() const { return conv3_filters * ((input_dim / pool1) / pool2); }
};

template <class Real>
class Cnn1dNet {
public:
    Cnn1dNet() = default;

    explicit Cnn1dNet(const CNN1DConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        const std::size_t D = cfg.input_dim;
        conv1_ = nn::Conv2d<Real>::same_width(1, cfg.conv1_filters, 1, D, cfg.conv1_width, false);
        bn1_ = nn::BatchNorm<Real>(cfg.conv1_filters, D);
        act1_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        conv2_ = nn::Conv2d<Real>::same_width(cfg.conv1_filters, cfg.conv2_filters, 1, D,
                                              cfg.conv2_width, false);
        bn2_ = nn::BatchNorm<Real>(cfg.conv2_filters, D);
        act2_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        pool1_ = nn::AvgPoolW<Real>(cfg.conv2_filters, D, cfg.pool1);
        drop1_ = nn::Dropout<Real>(cfg.drop1);
        const std::size_t t1 = D / cfg.pool1;
        conv3_ = nn::Conv2d<Real>::same_width(cfg.conv2_filters, cfg.conv3_filters, 1, t1,
                                              std::min(cfg.conv3_width, t1), false);
        bn3_ = nn::BatchNorm<Real>(cfg.conv3_filters, t1);
        act3_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        pool2_ = nn::AvgPoolW<Real>(cfg.conv3_filters, t1, cfg.pool2);
        drop2_ = nn::Dropout<Real>(cfg.drop2);
        head_ = nn::Dense<Real>(cfg.flat_dim(), 2);
    }

    void init_params(Rng& rng) {
        conv1_.init(rng);
        conv2_.init(rng);
        conv3_.init(rng);
        head_.init(rng);
    }

    const CNN1DConfig& config() const { return cfg_; }
    std::size_t in_numel() const { return cfg_.input_dim; }
    std::size_t out_numel() const { return 2; }

    void forward(const Real* x, std::size_t n, bool train, Rng& rng) {
        const std::size_t D = cfg_.input_dim, t1 = D / cfg_.pool1, t2 = t1 / cfg_.pool2;
        a1_.resize(n * cfg_.conv1_filters * D);
        a2_.resize(n * cfg_.conv2_filters * D);
        p1_.resize(n * cfg_.conv2_filters * t1);
        a3_.resize(n * cfg_.conv3_filters * t1);
        p2_.resize(n * cfg_.conv3_filters * t2);
        logits_.resize(n * 2);

        conv1_.forward(x, a1_.data(), n);
        bn1_.forward(a1_.data(), a1_.data(), n, train);
        act1_.forward(a1_.data(), a1_.data(), a1_.size());
        conv2_.forward(a1_.data(), a2_.data(), n);
        bn2_.forward(a2_.data(), a2_.data(), n, train);
        act2_.forward(a2_.data(), a2_.data(), a2_.size());
        pool1_.forward(a2_.data(), p1_.data(), n);
        drop1_.forward(p1_.data(), p1_.data(), p1_.size(), train, rng);
        conv3_.forward(p1_.data(), a3_.data(), n);
        bn3_.forward(a3_.data(), a3_.data(), n, train);
        act3_.forward(a3_.data(), a3_.data(), a3_.size());
        pool2_.forward(a3_.data(), p2_.data(), n);
        drop2_.forward(p2_.data(), p2_.data(), p2_.size(), train, rng);
        head_.forward(p2_.data(), logits_.data(), n);
    }

    void backward(const Real* x, const Real* glogits, std::size_t n) {
        g_p2_.resize(p2_.size());
        g_a3_.resize(a3_.size());
        g_p1_.resize(p1_.size());
        g_a2_.resize(a2_.size());
        g_a1_.resize(a1_.size());

        head_.backward(p2_.data(), glogits, g_p2_.data(), n);
        drop2_.backward(g_p2_.data(), g_p2_.data(), g_p2_.size());
        pool2_.backward(g_p2_.data(), g_a3_.data(), n);
        act3_.backward(g_a3_.data(), g_a3_.data(), g_a3_.size());
        bn3_.backward(g_a3_.data(), g_a3_.data(), n);
        conv3_.backward(p1_.data(), g_a3_.data(), g_p1_.data(), n);
        drop1_.backward(g_p1_.data(), g_p1_.data(), g_p1_.size());
        pool1_.backward(g_p1_.data(), g_a2_.data(), n);
        act2_.backward(g_a2_.data(), g_a2_.data(), g_a2_.size());
        bn2_.backward(g_a2_.data(), g_a2_.data(), n);
        conv2_.backward(a1_.data(), g_a2_.data(), g_a1_.data(), n);
        act1_.backward(g_a1_.data(), g_a1_.data(), g_a1_.size());
        bn1_.backward(g_a1_.data(), g_a1_.data(), n);
        conv1_.backward(x, g_a1_.data(), nullptr, n);
    }

    std::vector<nn::ParamRef<Real>> params() {
        std::vector<nn::ParamRef<Real>> out;
        conv1_.collect(out, "conv1");
        bn1_.collect(out, "bn1");
        conv2_.collect(out, "conv2");
        bn2_.collect(out, "bn2");
        conv3_.collect(out, "conv3");
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

private:
    CNN1DConfig cfg_;
    nn::Conv2d<Real> conv1_, conv2_, conv3_;
    nn::BatchNorm<Real> bn1_, bn2_, bn3_;
    nn::LeakyReLU<Real> act1_, act2_, act3_;
    nn::AvgPoolW<Real> pool1_, pool2_;
    nn::Dropout<Real> drop1_, drop2_;
    nn::Dense<Real> head_;

    std::vector<Real> a1_, a2_, p1_, a3_, p2_, logits_;
    std::vector<Real> g_p2_, g_a3_, g_p1_, g_a2_, g_a1_;
};

}  // namespace revae::models
