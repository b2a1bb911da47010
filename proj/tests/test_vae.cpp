#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "revae/models/vae.hpp"

using namespace revae;
using models::TrainedVAE;
using models::VAEConfig;
using models::VAENet;

namespace {

// small geometry used by most cases here
VAEConfig small_config() {
    VAEConfig cfg;
    cfg.n_temporal_filters = 2;
    cfg.n_spatial_filters = 3;
    cfg.latent_dim = 4;
    cfg.n_channels = 19;
    cfg.epoch_len = 64;
    cfg.temporal_kernel = 64;
    cfg.batch_size = 8;
    cfg.max_epochs = 3;
    cfg.seed = 11;
    return cfg;
}

EpochSet random_epoch_set(const std::string& id, ClassLabel label, std::size_t n_epochs,
                          std::size_t C, std::size_t T, std::uint64_t seed) {
    EpochSet es;
    es.subject_id = id;
    es.label = label;
    es.rate_hz = 128.0;
    es.n_epochs = n_epochs;
    es.n_channels = C;
    es.epoch_len = T;
    es.epochs.resize(n_epochs * C * T);
    Rng rng(seed, "epochs/" + id);
    for (auto& v : es.epochs) v = float(rng.normal());
    es.normalized = true;
    return es;
}

}  // namespace

TEST_CASE("vae_loss identities") {
    std::vector<double> x{1.0, -2.0, 0.5}, mu{0.0}, lv{0.0};
    auto l = models::vae_loss(x.data(), x.data(), mu.data(), lv.data(), 1, 3, 1, 1.0);
    CHECK(l.reconstruction == 0.0);
    CHECK(l.kl == 0.0);
    CHECK(l.total == 0.0);

    std::vector<double> mu1{1.0}, lv1{0.0};
    l = models::vae_loss(x.data(), x.data(), mu1.data(), lv1.data(), 1, 3, 1, 1.0);
    CHECK(l.kl == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<double> xh{1.0, -2.0, 2.5};
    l = models::vae_loss(x.data(), xh.data(), mu.data(), lv.data(), 1, 3, 1, 2.0);
    CHECK(l.reconstruction == doctest::Approx(4.0 / 3.0));
    CHECK(l.total == doctest::Approx(l.reconstruction + 2.0 * l.kl));
}

TEST_CASE("kl is non-negative on random posteriors") {
    Rng rng(5);
    std::vector<double> x{0.0}, mu(16), lv(16);
    for (int it = 0; it < 10000; ++it) {
        for (auto& v : mu) v = 3.0 * rng.normal();
        for (auto& v : lv) v = 2.0 * rng.normal();
        const auto l = models::vae_loss(x.data(), x.data(), mu.data(), lv.data(), 1, 1, 16, 1.0);
        CHECK(l.kl >= 0.0);
    }
}

TEST_CASE("reparameterize: degenerate sigma, moments, determinism") {
    const std::size_t d = 8;
    std::vector<double> mu(d, 1.5), lv(d, -800.0), eps(d), z(d);
    Rng noise(3);
    models::reparameterize(mu.data(), lv.data(), eps.data(), z.data(), d, noise);
    for (std::size_t i = 0; i < d; ++i) CHECK(z[i] == doctest::Approx(1.5).epsilon(1e-12));

    // Monte-Carlo moments with mu=0, logvar=0
    const std::size_t n = 100000;
    std::vector<double> m0(n, 0.0), l0(n, 0.0), e(n), zz(n);
    Rng noise2(17);
    models::reparameterize(m0.data(), l0.data(), e.data(), zz.data(), n, noise2);
    double mean = 0.0, var = 0.0;
    for (double v : zz) mean += v;
    mean /= double(n);
    for (double v : zz) var += (v - mean) * (v - mean);
    var /= double(n);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);

    // fixed stream, identical z
    std::vector<double> z1(d), z2(d), lv0(d, 0.3), mu0(d, -0.2);
    Rng a(99), b(99);
    models::reparameterize(mu0.data(), lv0.data(), eps.data(), z1.data(), d, a);
    models::reparameterize(mu0.data(), lv0.data(), eps.data(), z2.data(), d, b);
    CHECK(z1 == z2);
}

TEST_CASE("encode/decode shape contracts") {
    auto cfg = small_config();
    TrainedVAE model;
    model.config = cfg;
    model.net = VAENet<float>(cfg);
    Rng rng(cfg.seed, "init");
    model.net.init_params(rng);

    std::vector<float> x(cfg.n_channels * cfg.epoch_len);
    Rng xr(1);
    for (auto& v : x) v = float(xr.normal());

    std::vector<float> mu, lv;
    models::encode(model, x.data(), cfg.n_channels, cfg.epoch_len, mu, lv);
    CHECK(mu.size() == cfg.latent_dim);
    CHECK(lv.size() == cfg.latent_dim);
    for (float v : mu) CHECK(std::isfinite(v));

    std::vector<float> mu2, lv2;
    models::encode(model, x.data(), cfg.n_channels, cfg.epoch_len, mu2, lv2);
    CHECK(mu == mu2);
    CHECK(lv == lv2);

    CHECK_THROWS(models::encode(model, x.data(), 18, cfg.epoch_len, mu, lv));

    const auto xh = models::decode(model, mu);
    CHECK(xh.size() == cfg.n_channels * cfg.epoch_len);
    for (float v : xh) CHECK(std::isfinite(v));

    std::vector<float> zbad(cfg.latent_dim + 1, 0.0f);
    CHECK_THROWS(models::decode(model, zbad));

    // different latents decode to different outputs
    std::vector<float> za(cfg.latent_dim, 0.5f), zb(cfg.latent_dim, -0.5f);
    const auto ya = models::decode(model, za);
    const auto yb = models::decode(model, zb);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < ya.size(); ++i)
        max_diff = std::max(max_diff, std::abs(double(ya[i]) - double(yb[i])));
    CHECK(max_diff > 0.0);
}

TEST_CASE("decoder output shape mirrors encoder input for odd configs") {
    for (auto [ft, fs, ld, W, K] :
         {std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>{3, 5, 7, 100, 9},
          {1, 1, 1, 40, 5},
          {4, 2, 12, 64, 64}}) {
        VAEConfig cfg;
        cfg.n_temporal_filters = ft;
        cfg.n_spatial_filters = fs;
        cfg.latent_dim = ld;
        cfg.n_channels = 19;
        cfg.epoch_len = W;
        cfg.temporal_kernel = K;
        VAENet<double> net(cfg);
        Rng rng(1);
        net.init_params(rng);
        std::vector<double> x(19 * W);
        for (auto& v : x) v = rng.normal();
        Rng noise(2);
        net.forward_train(x.data(), 1, noise);
        CHECK(net.xhat().size() == 19 * W);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    VAEConfig cfg = small_config();
    cfg.beta = 0.7;
    VAENet<double> net(cfg);
    Rng init(123);
    net.init_params(init);

    const std::size_t n = 3;
    const std::size_t numel = cfg.n_channels * cfg.epoch_len;
    std::vector<double> x(n * numel);
    Rng xr(7);
    for (auto& v : x) v = xr.normal();

    const auto loss_at = [&]() {
        Rng noise(55);  // identical noise draw for every evaluation
        net.forward_train(x.data(), n, noise);
        return models::vae_loss(x.data(), net.xhat().data(), net.mu().data(),
                                net.logvar().data(), n, numel, cfg.latent_dim, cfg.beta)
            .total;
    };

    auto params = net.params();
    for (auto& p : params)
        for (std::size_t i = 0; i < p.n; ++i) p.grad[i] = 0.0;
    {
        Rng noise(55);
        net.forward_train(x.data(), n, noise);
        net.backward(x.data(), n, cfg.beta);
    }

    Rng pick(2024);
    std::size_t checked = 0, failures = 0;
    for (int probe = 0; probe < 60; ++probe) {
        auto& p = params[pick.below(params.size())];
        const std::size_t i = pick.below(p.n);
        const double orig = p.value[i];
        const double h = 1e-5 * std::max(1.0, std::abs(orig));
        p.value[i] = orig + h;
        const double lp = loss_at();
        p.value[i] = orig - h;
        const double lm = loss_at();
        p.value[i] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = p.grad[i];
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
        ++checked;
        if (rel > 1e-3) ++failures;
    }
    CHECK(checked >= 50);
    CHECK(failures == 0);
}

TEST_CASE("training reduces the loss and is reproducible") {
    VAEConfig cfg = small_config();
    cfg.max_epochs = 20;
    cfg.batch_size = 16;
    std::vector<EpochSet> sets;
    for (int s = 0; s < 4; ++s)
        sets.push_back(random_epoch_set("s" + std::to_string(s), ClassLabel::lean, 25, 19, 64,
                                        900 + std::uint64_t(s)));

    auto m1 = models::train_vae(sets, {}, cfg);
    REQUIRE(m1.history.size() == 20);
    CHECK(m1.history.back().total < m1.history.front().total);

    auto m2 = models::train_vae(sets, {}, cfg);
    REQUIRE(m2.history.size() == m1.history.size());
    for (std::size_t i = 0; i < m1.history.size(); ++i) {
        CHECK(m1.history[i].total == m2.history[i].total);
        CHECK(m1.history[i].kl == m2.history[i].kl);
    }
    auto p1 = m1.net.params(), p2 = m2.net.params();
    for (std::size_t k = 0; k < p1.size(); ++k)
        for (std::size_t i = 0; i < p1[k].n; ++i) CHECK(p1[k].value[i] == p2[k].value[i]);
}

TEST_CASE("beta=0 trains the plain autoencoder objective") {
    VAEConfig cfg = small_config();
    cfg.beta = 0.0;
    cfg.max_epochs = 10;
    std::vector<EpochSet> sets{random_epoch_set("a", ClassLabel::lean, 30, 19, 64, 42)};
    const auto m = models::train_vae(sets, {}, cfg);
    CHECK(m.history.back().reconstruction < m.history.front().reconstruction);
    // total excludes the kl term entirely
    for (const auto& rec : m.history)
        CHECK(rec.total == doctest::Approx(rec.reconstruction).epsilon(1e-12));

    // and the loss function itself drops the term exactly
    std::vector<double> x{1.0, 2.0}, xh{0.5, 2.5}, mu{3.0}, lv{1.5};
    const auto l0 = models::vae_loss(x.data(), xh.data(), mu.data(), lv.data(), 1, 2, 1, 0.0);
    CHECK(l0.total == l0.reconstruction);
    CHECK(l0.kl > 0.0);
}

TEST_CASE("labels are invisible to training") {
    VAEConfig cfg = small_config();
    cfg.max_epochs = 4;
    std::vector<EpochSet> sets;
    for (int s = 0; s < 3; ++s)
        sets.push_back(random_epoch_set("s" + std::to_string(s),
                                        s % 2 ? ClassLabel::obese : ClassLabel::lean, 10, 19, 64,
                                        100 + std::uint64_t(s)));
    auto m1 = models::train_vae(sets, {}, cfg);
    for (auto& es : sets)
        es.label = es.label == ClassLabel::lean ? ClassLabel::obese : ClassLabel::lean;
    auto m2 = models::train_vae(sets, {}, cfg);
    auto p1 = m1.net.params(), p2 = m2.net.params();
    for (std::size_t k = 0; k < p1.size(); ++k)
        for (std::size_t i = 0; i < p1[k].n; ++i) CHECK(p1[k].value[i] == p2[k].value[i]);
}

TEST_CASE("feature extraction rows and determinism") {
    VAEConfig cfg = small_config();
    cfg.max_epochs = 2;
    std::vector<EpochSet> sets{random_epoch_set("s0", ClassLabel::lean, 26, 19, 64, 1),
                               random_epoch_set("s1", ClassLabel::obese, 26, 19, 64, 2)};
    auto model = models::train_vae(sets, {}, cfg);
    const auto fm = models::extract_features(model, sets);
    CHECK(fm.n_rows == 52);
    CHECK(fm.dim == cfg.latent_dim);
    CHECK(fm.source == "vae-mu");
    CHECK(fm.rows[0].subject_id == "s0");
    CHECK(fm.rows[26].label == ClassLabel::obese);
    for (float v : fm.values) CHECK(std::isfinite(v));

    // duplicate epochs produce identical rows
    auto dup = sets[0];
    std::copy(dup.epochs.begin(), dup.epochs.begin() + dup.epoch_numel(),
              dup.epochs.begin() + dup.epoch_numel());  // epoch1 := epoch0
    dup.subject_id = "dup";
    std::vector<EpochSet> dsets{dup};
    const auto fm2 = models::extract_features(model, dsets);
    for (std::size_t j = 0; j < fm2.dim; ++j) CHECK(fm2.row(0)[j] == fm2.row(1)[j]);
}

TEST_CASE("spatial patterns: symmetry and shape") {
    VAEConfig cfg = small_config();
    cfg.max_epochs = 2;
    std::vector<EpochSet> g1{random_epoch_set("a", ClassLabel::lean, 8, 19, 64, 5)};
    auto model = models::train_vae(g1, {}, cfg);

    const auto same = models::spatial_patterns(model, g1, g1);
    REQUIRE(same.difference.size() == 19);
    REQUIRE(same.lean.size() == 19);
    for (double v : same.difference) CHECK(v == 0.0);

    std::vector<EpochSet> g2{random_epoch_set("b", ClassLabel::obese, 8, 19, 64, 6)};
    const auto diff = models::spatial_patterns(model, g1, g2);
    CHECK(*std::max_element(diff.lean.begin(), diff.lean.end()) == doctest::Approx(1.0));
    CHECK(*std::max_element(diff.obese.begin(), diff.obese.end()) == doctest::Approx(1.0));

    CHECK_THROWS(models::spatial_patterns(model, {}, g2));
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    VAEConfig cfg = small_config();
    cfg.max_epochs = 2;
    std::vector<EpochSet> sets{random_epoch_set("s0", ClassLabel::lean, 12, 19, 64, 8)};
    auto model = models::train_vae(sets, {}, cfg);

    const auto path = fs::temp_directory_path() / "revae_vae_test" / "vae.ckpt";
    models::save_vae(model, path);
    auto back = models::load_vae(path);
    CHECK(back.config.latent_dim == cfg.latent_dim);
    CHECK(back.history.size() == model.history.size());

    std::vector<float> x(19 * 64);
    Rng xr(3);
    for (auto& v : x) v = float(xr.normal());
    std::vector<float> mu1, lv1, mu2, lv2;
    models::encode(model, x.data(), 19, 64, mu1, lv1);
    models::encode(back, x.data(), 19, 64, mu2, lv2);
    CHECK(mu1 == mu2);
    CHECK(lv1 == lv2);
    fs::remove_all(path.parent_path());
}
