#pragma once

// EEGNet-style variational autoencoder. The encoder stacks a temporal
// convolution (1 x rate/2 kernels, same padding) and a spatial convolution
// (19 x 1 kernels, valid) with batch norm and leaky ReLU after each, then
// dense heads produce the posterior mean and log-variance. The decoder is the
// mirror image built from stride-1 transposed convolutions. Trained encoder
// means are the feature representation consumed by the downstream classifiers.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "revae/data.hpp"
#include "revae/nn/layers.hpp"

namespace revae::models {

struct VAEConfig {
    std::size_t n_temporal_filters = 8;
    std::size_t n_spatial_filters = 16;
    std::size_t latent_dim = 64;
    double beta = 1.0;
    std::size_t beta_warmup_epochs = 0;  // ramp the KL weight 0 -> beta over the first epochs
    bool filterbank_init = false;  // start temporal kernels as a windowed sinusoid bank
    bool decoder_batchnorm = true;  // batch norm in the synthesis path
    double leaky_slope = 0.01;
    double learning_rate = 1e-3;
    double grad_clip_norm = 5.0;  // global gradient-norm ceiling; 0 disables
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t early_stop_patience = 5;
    std::uint64_t seed = 1;
    std::size_t n_channels = 19;
    std::size_t epoch_len = 1280;
    std::size_t temporal_kernel = 64;  // rate/2 at 128 Hz

    void validate() const {
        if (n_temporal_filters < 1 || n_spatial_filters < 1 || latent_dim < 1)
            throw std::invalid_argument("vae: filter counts and latent_dim must be >= 1");
        if (beta < 0.0) throw std::invalid_argument("vae: beta must be >= 0");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("vae: learning_rate must be > 0");
        if (batch_size < 1 || max_epochs < 1) throw std::invalid_argument("vae: bad train params");
        if (n_channels < 1 || epoch_len < 1 || temporal_kernel < 1 || temporal_kernel > epoch_len)
            throw std::invalid_argument("vae: bad input geometry");
    }
};

struct LossBreakdown {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// recon = mean squared error over all elements; kl = closed-form Gaussian
// divergence against the standard normal prior, averaged over the batch.
template <class Real>
LossBreakdown vae_loss(const Real* x, const Real* x_hat, const Real* mu, const Real* logvar,
                       std::size_t n, std::size_t x_numel, std::size_t latent, double beta) {
    LossBreakdown out;
    double se = 0.0;
    for (std::size_t i = 0; i < n * x_numel; ++i) {
        const double d = double(x[i]) - double(x_hat[i]);
        se += d * d;
    }
    out.reconstruction = se / double(n * x_numel);
    double kl = 0.0;
    for (std::size_t i = 0; i < n * latent; ++i) {
        const double m = double(mu[i]), lv = double(logvar[i]);
        kl -= 0.5 * (1.0 + lv - m * m - std::exp(lv));
    }
    out.kl = kl / double(n);
    out.total = out.reconstruction + beta * out.kl;
    return out;
}

// z = mu + exp(logvar / 2) * eps with eps ~ N(0, 1) drawn from the stream.
// logvar is capped at 15 inside the exponent so sigma cannot overflow;
// arbitrarily negative values still drive sigma to exactly zero.
inline double clamped_sigma(double logvar) {
    return std::exp(0.5 * std::min(logvar, 15.0));
}

template <class Real>
void reparameterize(const Real* mu, const Real* logvar, Real* eps, Real* z, std::size_t count,
                    Rng& noise) {
    for (std::size_t i = 0; i < count; ++i) {
        eps[i] = Real(noise.normal());
        z[i] = mu[i] + Real(clamped_sigma(double(logvar[i]))) * eps[i];
    }
}

template <class Real>
class VAENet {
public:
    VAENet() = default;

    explicit VAENet(const VAEConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        const std::size_t C = cfg.n_channels, W = cfg.epoch_len;
        const std::size_t Ft = cfg.n_temporal_filters, Fs = cfg.n_spatial_filters;
        const std::size_t L = cfg.latent_dim, K = cfg.temporal_kernel;

        enc_t_ = nn::Conv2d<Real>::same_width(1, Ft, C, W, K, false);
        enc_bn1_ = nn::BatchNorm<Real>(Ft, C * W);
        enc_act1_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        enc_s_ = nn::Conv2d<Real>(Ft, Fs, C, W, C, 1, 0, 0, 0, 0, false);
        enc_bn2_ = nn::BatchNorm<Real>(Fs, W);
        enc_act2_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        to_mu_ = nn::Dense<Real>(Fs * W, L);
        to_logvar_ = nn::Dense<Real>(Fs * W, L);

        from_z_ = nn::Dense<Real>(L, Fs * W);
        dec_bn1_ = nn::BatchNorm<Real>(Fs, W);
        dec_act1_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        dec_s_ = nn::conv_transpose2d<Real>(Fs, Ft, 1, W, C, 1, 0, 0, 0, 0, false);
        dec_bn2_ = nn::BatchNorm<Real>(Ft, C * W);
        dec_act2_ = nn::LeakyReLU<Real>(cfg.leaky_slope);
        const std::size_t pl = (K - 1) / 2, pr = (K - 1) - (K - 1) / 2;
        dec_t_ = nn::conv_transpose2d<Real>(Ft, 1, C, W, 1, K, 0, 0, pl, pr, true);
    }

    void init_params(Rng& rng) {
        enc_t_.init(rng);
        enc_s_.init(rng);
        to_mu_.init(rng);
        to_logvar_.init(rng);
        // start with a narrow posterior so early reconstructions see little
        // sampling noise
        for (auto& b : to_logvar_.b) b = Real(-2);
        from_z_.init(rng);
        dec_s_.init(rng);
        dec_t_.init(rng);
        if (cfg_.filterbank_init) {
            // temporal kernels start as Hann-windowed sinusoids with
            // log-spaced frequencies and random phase, in both the analysis
            // and synthesis directions
            bank_init(enc_t_.w, cfg_.n_temporal_filters, rng);
            bank_init(dec_t_.w, cfg_.n_temporal_filters, rng);
        }
    }

    const VAEConfig& config() const { return cfg_; }
    std::size_t input_numel() const { return cfg_.n_channels * cfg_.epoch_len; }
    std::size_t latent_dim() const { return cfg_.latent_dim; }

    // x: [n][C*W]; fills mu_/logvar_ (and the intermediate activations).
    void forward_encode(const Real* x, std::size_t n, bool train) {
        const std::size_t tn = n * enc_t_.out_numel();
        const std::size_t sn = n * enc_s_.out_numel();
        t_act_.resize(tn);
        s_act_.resize(sn);
        mu_.resize(n * cfg_.latent_dim);
        logvar_.resize(n * cfg_.latent_dim);
        enc_t_.forward(x, t_act_.data(), n);
        enc_bn1_.forward(t_act_.data(), t_act_.data(), n, train);
        enc_act1_.forward(t_act_.data(), t_act_.data(), tn);
        enc_s_.forward(t_act_.data(), s_act_.data(), n);
        enc_bn2_.forward(s_act_.data(), s_act_.data(), n, train);
        enc_act2_.forward(s_act_.data(), s_act_.data(), sn);
        to_mu_.forward(s_act_.data(), mu_.data(), n);
        to_logvar_.forward(s_act_.data(), logvar_.data(), n);
    }

    // z: [n][L]; fills xhat_.
    void forward_decode(const Real* z, std::size_t n, bool train) {
        const std::size_t fn = n * from_z_.out_numel();
        const std::size_t dn = n * dec_s_.out_numel();
        d_fc_.resize(fn);
        d_t_.resize(dn);
        xhat_.resize(n * input_numel());
        from_z_.forward(z, d_fc_.data(), n);
        if (cfg_.decoder_batchnorm) dec_bn1_.forward(d_fc_.data(), d_fc_.data(), n, train);
        dec_act1_.forward(d_fc_.data(), d_fc_.data(), fn);
        dec_s_.forward(d_fc_.data(), d_t_.data(), n);
        if (cfg_.decoder_batchnorm) dec_bn2_.forward(d_t_.data(), d_t_.data(), n, train);
        dec_act2_.forward(d_t_.data(), d_t_.data(), dn);
        dec_t_.forward(d_t_.data(), xhat_.data(), n);
    }

    // Full training-mode forward with reparameterized sampling.
    void forward_train(const Real* x, std::size_t n, Rng& noise) {
        forward_encode(x, n, true);
        const std::size_t zc = n * cfg_.latent_dim;
        eps_.resize(zc);
        z_.resize(zc);
        reparameterize(mu_.data(), logvar_.data(), eps_.data(), z_.data(), zc, noise);
        forward_decode(z_.data(), n, true);
    }

    // Backward for total = recon + beta * kl, after forward_train on (x, n).
    // Accumulates parameter gradients.
    void backward(const Real* x, std::size_t n, double beta) {
        const std::size_t xn = input_numel();
        const std::size_t L = cfg_.latent_dim;
        g_xhat_.resize(n * xn);
        const Real rscale = Real(2.0 / double(n * xn));
        for (std::size_t i = 0; i < n * xn; ++i)
            g_xhat_[i] = rscale * (xhat_[i] - x[i]);

        // decoder
        g_dt_.resize(d_t_.size());
        dec_t_.backward(d_t_.data(), g_xhat_.data(), g_dt_.data(), n);
        dec_act2_.backward(g_dt_.data(), g_dt_.data(), g_dt_.size());
        if (cfg_.decoder_batchnorm) dec_bn2_.backward(g_dt_.data(), g_dt_.data(), n);
        g_dfc_.resize(d_fc_.size());
        dec_s_.backward(d_fc_.data(), g_dt_.data(), g_dfc_.data(), n);
        dec_act1_.backward(g_dfc_.data(), g_dfc_.data(), g_dfc_.size());
        if (cfg_.decoder_batchnorm) dec_bn1_.backward(g_dfc_.data(), g_dfc_.data(), n);
        g_z_.resize(z_.size());
        from_z_.backward(z_.data(), g_dfc_.data(), g_z_.data(), n);

        // through the sampling step plus the KL terms
        g_mu_.resize(n * L);
        g_logvar_.resize(n * L);
        const Real kl_scale = Real(beta / double(n));
        for (std::size_t i = 0; i < n * L; ++i) {
            const double lv = double(logvar_[i]);
            const Real sigma = Real(clamped_sigma(lv));
            const Real in_range = Real(lv <= 15.0 ? 1 : 0);
            g_mu_[i] = g_z_[i] + kl_scale * mu_[i];
            g_logvar_[i] = g_z_[i] * eps_[i] * sigma * Real(0.5) * in_range +
                           kl_scale * Real(0.5) * (Real(std::exp(lv)) - Real(1));
        }

        // encoder
        g_sact_.resize(s_act_.size());
        g_sact2_.resize(s_act_.size());
        to_mu_.backward(s_act_.data(), g_mu_.data(), g_sact_.data(), n);
        to_logvar_.backward(s_act_.data(), g_logvar_.data(), g_sact2_.data(), n);
        for (std::size_t i = 0; i < g_sact_.size(); ++i) g_sact_[i] += g_sact2_[i];
        enc_act2_.backward(g_sact_.data(), g_sact_.data(), g_sact_.size());
        enc_bn2_.backward(g_sact_.data(), g_sact_.data(), n);
        g_tact_.resize(t_act_.size());
        enc_s_.backward(t_act_.data(), g_sact_.data(), g_tact_.data(), n);
        enc_act1_.backward(g_tact_.data(), g_tact_.data(), g_tact_.size());
        enc_bn1_.backward(g_tact_.data(), g_tact_.data(), n);
        enc_t_.backward(x, g_tact_.data(), nullptr, n);
    }

    std::vector<nn::ParamRef<Real>> params() {
        std::vector<nn::ParamRef<Real>> out;
        enc_t_.collect(out, "enc_t");
        enc_bn1_.collect(out, "enc_bn1");
        enc_s_.collect(out, "enc_s");
        enc_bn2_.collect(out, "enc_bn2");
        to_mu_.collect(out, "to_mu");
        to_logvar_.collect(out, "to_logvar");
        from_z_.collect(out, "from_z");
        dec_bn1_.collect(out, "dec_bn1");
        dec_s_.collect(out, "dec_s");
        dec_bn2_.collect(out, "dec_bn2");
        dec_t_.collect(out, "dec_t");
        return out;
    }
    std::vector<nn::StateRef<Real>> state() {
        std::vector<nn::StateRef<Real>> out;
        enc_bn1_.collect_state(out, "enc_bn1");
        enc_bn2_.collect_state(out, "enc_bn2");
        dec_bn1_.collect_state(out, "dec_bn1");
        dec_bn2_.collect_state(out, "dec_bn2");
        return out;
    }

    const std::vector<Real>& mu() const { return mu_; }
    const std::vector<Real>& logvar() const { return logvar_; }
    const std::vector<Real>& xhat() const { return xhat_; }
    const std::vector<Real>& spatial_activation() const { return s_act_raw_; }

    // Spatial-layer activations (raw convolution output) for one batch, in
    // eval mode: [n][Fs][W]. Used by the spatial-pattern extraction.
    void spatial_forward(const Real* x, std::size_t n) {
        const std::size_t tn = n * enc_t_.out_numel();
        t_act_.resize(tn);
        s_act_raw_.resize(n * enc_s_.out_numel());
        enc_t_.forward(x, t_act_.data(), n);
        enc_bn1_.forward(t_act_.data(), t_act_.data(), n, false);
        enc_act1_.forward(t_act_.data(), t_act_.data(), tn);
        enc_s_.forward(t_act_.data(), s_act_raw_.data(), n);
    }

    const std::vector<Real>& spatial_weights() const { return enc_s_.w; }

private:
    void bank_init(std::vector<Real>& w, std::size_t n_filters, Rng& rng) {
        const std::size_t K = cfg_.temporal_kernel;
        const double c_lo = 0.75, c_hi = double(K) / 8.0;  // cycles per kernel window
        for (std::size_t f = 0; f < n_filters; ++f) {
            const double frac = n_filters > 1 ? double(f) / double(n_filters - 1) : 0.5;
            const double cycles = c_lo * std::pow(c_hi / c_lo, frac);
            const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            double norm = 0.0;
            std::vector<double> taps(K);
            for (std::size_t k = 0; k < K; ++k) {
                const double window =
                    0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * double(k) / double(K - 1));
                taps[k] = window * std::sin(2.0 * 3.14159265358979323846 * cycles * double(k) /
                                                double(K) +
                                            phase);
                norm += taps[k] * taps[k];
            }
            const double scale = std::sqrt(2.0 / std::max(norm, 1e-12));
            for (std::size_t k = 0; k < K; ++k) w[f * K + k] = Real(taps[k] * scale);
        }
    }

    VAEConfig cfg_;

    nn::Conv2d<Real> enc_t_, enc_s_, dec_s_, dec_t_;
    nn::BatchNorm<Real> enc_bn1_, enc_bn2_, dec_bn1_, dec_bn2_;
    nn::LeakyReLU<Real> enc_act1_, enc_act2_, dec_act1_, dec_act2_;
    nn::Dense<Real> to_mu_, to_logvar_, from_z_;

    std::vector<Real> t_act_, s_act_, s_act_raw_, mu_, logvar_, eps_, z_, d_fc_, d_t_, xhat_;
    std::vector<Real> g_xhat_, g_dt_, g_dfc_, g_z_, g_mu_, g_logvar_, g_sact_, g_sact2_, g_tact_;
};

struct TrainingRecord {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;
    double val_reconstruction = 0.0;
};

struct TrainedVAE {
    VAEConfig config;
    VAENet<float> net;  // treated as immutable once training returns
    std::vector<TrainingRecord> history;
};

// Thrown when the training loss stops being finite.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(std::size_t step)
        : std::runtime_error("training diverged at step " + std::to_string(step)), step(step) {}
    std::size_t step;
};

// Unsupervised training on the given subjects' epochs; labels are never read.
// val_sets (possibly empty) drive early stopping on reconstruction loss.
TrainedVAE train_vae(const std::vector<EpochSet>& train_sets,
                     const std::vector<EpochSet>& val_sets, const VAEConfig& cfg);

// Posterior parameters for one normalized epoch [C x T].
void encode(TrainedVAE& model, const float* x, std::size_t n_channels, std::size_t epoch_len,
            std::vector<float>& mu, std::vector<float>& logvar);

// Deterministic reconstruction of one latent vector.
std::vector<float> decode(TrainedVAE& model, const std::vector<float>& z);

// One row of posterior means per epoch, with provenance.
FeatureMatrix extract_features(TrainedVAE& model, const std::vector<EpochSet>& sets);

struct SpatialPatterns {
    std::vector<double> lean;        // per-channel importance, unit max
    std::vector<double> obese;       // per-channel importance, unit max
    std::vector<double> difference;  // |obese - lean| per channel
};

// Channel importance from the spatial convolution: mean |activation| per
// spatial filter over each group, mapped back to input channels through the
// filter's |weights|, normalized to unit max per group.
SpatialPatterns spatial_patterns(TrainedVAE& model, const std::vector<EpochSet>& group_lean,
                                 const std::vector<EpochSet>& group_obese);

void save_vae(const TrainedVAE& model, const std::filesystem::path& path);
TrainedVAE load_vae(const std::filesystem::path& path);

}  // namespace revae::models
