#pragma once

// Multilayer perceptron baseline on feature rows.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "revae/nn/layers.hpp"

namespace revae::models {

struct MLPConfig {
    std::vector<std::size_t> hidden{128, 64};
    double dropout = 0.25;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 150;
    std::size_t early_stop_patience = 15;
    std::uint64_t seed = 1;
    std::size_t input_dim = 64;

    void validate() const {
        if (hidden.empty()) throw std::invalid_argument("mlp: needs at least one hidden layer");
        for (std::size_t h : hidden)
            if (h < 1) throw std::invalid_argument("mlp: hidden width must be >= 1");
        if (dropout < 0.0 || dropout >= 1.0)
            throw std::invalid_argument("mlp: dropout must be in [0,1)");
    }
};

template <class Real>
class MlpNet {
public:
    MlpNet() = default;

    explicit MlpNet(const MLPConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        std::size_t in = cfg.input_dim;
        for (std::size_t h : cfg.hidden) {
            layers_.emplace_back(in, h);
            acts_.emplace_back();
            drops_.emplace_back(cfg.dropout);
            in = h;
        }
        head_ = nn::Dense<Real>(in, 2);
        a_.resize(cfg.hidden.size());
        g_.resize(cfg.hidden.size());
    }

    void init_params(Rng& rng) {
        for (auto& l : layers_) l.init(rng);
        head_.init(rng);
    }

    const MLPConfig& config() const { return cfg_; }
    std::size_t in_numel() const { return cfg_.input_dim; }
    std::size_t out_numel() const { return 2; }

    void forward(const Real* x, std::size_t n, bool train, Rng& rng) {
        const Real* cur = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            a_[i].resize(n * layers_[i].out_numel());
            layers_[i].forward(cur, a_[i].data(), n);
            acts_[i].forward(a_[i].data(), a_[i].data(), a_[i].size());
            drops_[i].forward(a_[i].data(), a_[i].data(), a_[i].size(), train, rng);
            cur = a_[i].data();
        }
        logits_.resize(n * 2);
        head_.forward(cur, logits_.data(), n);
    }

    void backward(const Real* x, const Real* glogits, std::size_t n) {
        const std::size_t L = layers_.size();
        g_[L - 1].resize(a_[L - 1].size());
        head_.backward(a_[L - 1].data(), glogits, g_[L - 1].data(), n);
        for (std::size_t i = L; i-- > 0;) {
            drops_[i].backward(g_[i].data(), g_[i].data(), g_[i].size());
            acts_[i].backward(g_[i].data(), g_[i].data(), g_[i].size());
            const Real* input = i == 0 ? x : a_[i - 1].data();
            if (i == 0) {
                layers_[0].backward(input, g_[0].data(), nullptr, n);
            } else {
                g_[i - 1].resize(a_[i - 1].size());
                layers_[i].backward(input, g_[i].data(), g_[i - 1].data(), n);
            }
        }
    }

    std::vector<nn::ParamRef<Real>> params() {
        std::vector<nn::ParamRef<Real>> out;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i].collect(out, "fc" + std::to_string(i));
        head_.collect(out, "head");
        return out;
    }
    std::vector<nn::StateRef<Real>> state() { return {}; }

    const std::vector<Real>& logits() const { return logits_; }

private:
    MLPConfig cfg_;
    std::vector<nn::Dense<Real>> layers_;
    std::vector<nn::ReLU<Real>> acts_;
    std::vector<nn::Dropout<Real>> drops_;
    nn::Dense<Real> head_;
    std::vector<std::vector<Real>> a_, g_;
    std::vector<Real> logits_;
};

}  // namespace revae::models
