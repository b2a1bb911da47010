#pragma once

// Shared mini-batch trainer for the gradient-based classifiers:
// cross-entropy, Adam, seed-owned shuffling, early stopping on validation
// loss with best-weights restore, and divergence detection.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string_view>
#include <vector>

#include "revae/models/vae.hpp"  // DivergenceError
#include "revae/nn/adam.hpp"
#include "revae/nn/layers.hpp"

namespace revae::models {

struct TrainOpts {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 60;
    std::size_t early_stop_patience = 8;
    std::uint64_t seed = 1;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
};

template <class Net>
std::vector<EpochStats> train_supervised(Net& net, const float* X, const int* y,
                                         std::size_t n_train, const float* Xv, const int* yv,
                                         std::size_t n_val, const TrainOpts& opts) {
    if (n_train == 0) throw std::invalid_argument("train: no samples");
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n_train; ++i) (y[i] == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw std::invalid_argument("train: both classes must be present");

    Rng init_rng(opts.seed, "clf/init");
    net.init_params(init_rng);
    Rng shuffle_rng(opts.seed, "clf/shuffle");
    Rng drop_rng(opts.seed, "clf/dropout");

    nn::Adam<float> opt(opts.learning_rate);
    opt.attach(net.params());

    const std::size_t numel = net.in_numel();

    // Canonicalize the sample order by content before the seeded shuffle, so
    // training depends only on the multiset of rows, never on input order.
    const auto content_order = [numel](const float* M, const int* labels, std::size_t n) {
        std::vector<std::uint64_t> hash(n);
        for (std::size_t i = 0; i < n; ++i)
            hash[i] = fnv1a64(std::string_view(reinterpret_cast<const char*>(M + i * numel),
                                               numel * sizeof(float))) ^
                      std::uint64_t(labels[i]);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (hash[a] != hash[b]) return hash[a] < hash[b];
            if (labels[a] != labels[b]) return labels[a] < labels[b];
            return std::memcmp(M + a * numel, M + b * numel, numel * sizeof(float)) < 0;
        });
        return idx;
    };
    std::vector<std::size_t> order = content_order(X, y, n_train);
    const std::vector<std::size_t> val_order =
        n_val > 0 ? content_order(Xv, yv, n_val) : std::vector<std::size_t>{};

    std::vector<float> batch, probs, glogits;
    std::vector<int> labels;
    std::vector<EpochStats> history;

    std::vector<float> best_params, best_state;
    double best_val = 1e300;
    std::size_t wait = 0, step = 0;
    const auto snapshot = [&]() {
        best_params.clear();
        best_state.clear();
        for (const auto& p : net.params())
            best_params.insert(best_params.end(), p.value, p.value + p.n);
        for (const auto& s : net.state()) best_state.insert(best_state.end(), s.value, s.value + s.n);
    };
    const auto restore = [&]() {
        std::size_t off = 0;
        for (const auto& p : net.params()) {
            std::copy(best_params.begin() + off, best_params.begin() + off + p.n, p.value);
            off += p.n;
        }
        off = 0;
        for (const auto& s : net.state()) {
            std::copy(best_state.begin() + off, best_state.begin() + off + s.n, s.value);
            off += s.n;
        }
    };

    const auto evaluate = [&](const float* Xe, const int* ye, std::size_t n,
                              const std::vector<std::size_t>& eval_order, double& loss,
                              double& acc) {
        loss = 0.0;
        std::size_t correct = 0;
        const std::size_t chunk = 256;
        std::vector<float> eb;
        std::vector<int> el;
        for (std::size_t begin = 0; begin < n; begin += chunk) {
            const std::size_t count = std::min(chunk, n - begin);
            eb.resize(count * numel);
            el.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = eval_order[begin + i];
                std::copy(Xe + src * numel, Xe + (src + 1) * numel, eb.begin() + i * numel);
                el[i] = ye[src];
            }
            net.forward(eb.data(), count, false, drop_rng);
            probs.resize(count * 2);
            loss += nn::softmax_cross_entropy(net.logits().data(), el.data(), count, 2, probs.data(),
                                          static_cast<float*>(nullptr)) *
                    double(count);
            for (std::size_t i = 0; i < count; ++i)
                correct += (probs[2 * i + 1] > probs[2 * i]) == (el[i] == 1);
        }
        loss /= double(n);
        acc = double(correct) / double(n);
    };

    for (std::size_t epoch = 0; epoch < opts.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < n_train; begin += opts.batch_size) {
            const std::size_t count = std::min(opts.batch_size, n_train - begin);
            batch.resize(count * numel);
            labels.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[begin + i];
                std::copy(X + src * numel, X + (src + 1) * numel, batch.begin() + i * numel);
                labels[i] = y[src];
            }
            net.forward(batch.data(), count, true, drop_rng);
            probs.resize(count * 2);
            glogits.resize(count * 2);
            const double loss = nn::softmax_cross_entropy(net.logits().data(), labels.data(), count,
                                                      2, probs.data(), glogits.data());
            ++step;
            if (!std::isfinite(loss)) throw DivergenceError(step);
            loss_sum += loss * double(count);
            for (std::size_t i = 0; i < count; ++i)
                correct += (probs[2 * i + 1] > probs[2 * i]) == (labels[i] == 1);
            opt.zero_grad();
            net.backward(batch.data(), glogits.data(), count);
            opt.step();
        }

        EpochStats es;
        es.train_loss = loss_sum / double(n_train);
        es.train_accuracy = double(correct) / double(n_train);
        if (n_val > 0) {
            evaluate(Xv, yv, n_val, val_order, es.val_loss, es.val_accuracy);
        } else {
            es.val_loss = es.train_loss;
            es.val_accuracy = es.train_accuracy;
        }
        history.push_back(es);

        if (es.val_loss < best_val - 1e-12) {
            best_val = es.val_loss;
            snapshot();
            wait = 0;
        } else if (++wait >= opts.early_stop_patience && n_val > 0) {
            break;
        }
    }
    if (!best_params.empty() && n_val > 0) restore();
    return history;
}

}  // namespace revae::models
