#include "revae/viz/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "revae/core/binio.hpp"
#include "revae/core/rng.hpp"

namespace revae::viz {

namespace {

constexpr double kMinProb = 1e-12;

// Rows are processed in an order derived from their content, and every
// per-row reduction runs over all j (the self term contributes an exact
// zero). Together this makes the embedding bitwise equivariant to input row
// permutations and keeps exact duplicate rows coincident: identical rows see
// identical arithmetic at every step.

// conditional Gaussian affinities with per-point precision beta found by
// binary search so each row of P has the requested perplexity
void gaussian_affinities(const std::vector<double>& d2, std::size_t n, double perplexity,
                         std::vector<double>& p) {
    const double log_perp = std::log(perplexity);
    p.assign(n * n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ip = 0; ip < std::ptrdiff_t(n); ++ip) {
        const std::size_t i = std::size_t(ip);
        double beta = 1.0, beta_min = -1e300, beta_max = 1e300;
        double* row = p.data() + i * n;
        for (int tries = 0; tries < 64; ++tries) {
            // sum over all j including self (exp(0) = 1), subtracted exactly;
            // the entropy dot picks up an exact zero from the self term
            double sum = 0.0, dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = std::exp(-beta * d2[i * n + j]);
                row[j] = v;
                sum += v;
                dot += v * d2[i * n + j];
            }
            sum -= 1.0;
            if (sum <= 0.0) sum = 1e-300;
            const double entropy = std::log(sum) + beta * dot / sum;
            const double diff = entropy - log_perp;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                beta_min = beta;
                beta = beta_max >= 1e300 ? beta * 2.0 : (beta + beta_max) / 2.0;
            } else {
                beta_max = beta;
                beta = beta_min <= -1e300 ? beta / 2.0 : (beta + beta_min) / 2.0;
            }
        }
        row[i] = 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += row[j];
        if (sum <= 0.0) sum = 1e-300;
        for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
        row[i] = 0.0;
    }
}

double kl_objective(const std::vector<double>& p, const std::vector<double>& y, std::size_t n,
                    double exaggeration) {
    double zsum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = y[2 * i] - y[2 * j];
            const double dy = y[2 * i + 1] - y[2 * j + 1];
            zsum += 2.0 / (1.0 + dx * dx + dy * dy);
        }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = std::max(p[i * n + j] / exaggeration, kMinProb);
            const double dx = y[2 * i] - y[2 * j];
            const double dy = y[2 * i + 1] - y[2 * j + 1];
            const double qij = std::max(1.0 / (1.0 + dx * dx + dy * dy) / zsum, kMinProb);
            kl += pij * std::log(pij / qij);
        }
    return kl;
}

}  // namespace

Embedding2D tsne_project(const FeatureMatrix& features, const TsneParams& params) {
    const std::size_t n = features.n_rows;
    const std::size_t d = features.dim;
    if (double(n) <= 3.0 * params.perplexity)
        throw std::invalid_argument("tsne: perplexity too large for " + std::to_string(n) +
                                    " rows (needs N > 3*perplexity)");
    if (params.n_iter < 1) throw std::invalid_argument("tsne: n_iter must be >= 1");

    // canonical processing order: content hash, then lexicographic bytes
    std::vector<std::uint64_t> key(n);
    for (std::size_t i = 0; i < n; ++i)
        key[i] = fnv1a64(std::string_view(reinterpret_cast<const char*>(features.row(i)),
                                          d * sizeof(float)));
    std::vector<std::size_t> canon(n);
    std::iota(canon.begin(), canon.end(), 0);
    std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) return key[a] < key[b];
        return std::memcmp(features.row(a), features.row(b), d * sizeof(float)) < 0;
    });

    std::vector<float> x(n * d);
    for (std::size_t k = 0; k < n; ++k)
        std::copy(features.row(canon[k]), features.row(canon[k]) + d, x.begin() + k * d);

    // pairwise squared distances in the canonical order
    std::vector<double> d2(n * n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ip = 0; ip < std::ptrdiff_t(n); ++ip) {
        const std::size_t i = std::size_t(ip);
        for (std::size_t j = i + 1; j < n; ++j) {
            const float* a = x.data() + i * d;
            const float* b = x.data() + j * d;
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = double(a[k]) - double(b[k]);
                s += diff * diff;
            }
            d2[i * n + j] = s;
            d2[j * n + i] = s;
        }
    }

    std::vector<double> p;
    gaussian_affinities(d2, n, params.perplexity, p);
    // symmetrize and normalize to a joint distribution
    double psum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = p[i * n + j] + p[j * n + i];
            p[i * n + j] = v;
            p[j * n + i] = v;
            psum += 2.0 * v;
        }
    for (auto& v : p) v = std::max(v / psum, kMinProb);
    for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 0.0;

    // early exaggeration
    for (auto& v : p) v *= params.early_exaggeration;

    // content-derived init: identical rows start at identical coordinates
    std::vector<double> y(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng(params.seed ^ key[canon[k]]);
        y[2 * k] = 1e-4 * rng.normal();
        y[2 * k + 1] = 1e-4 * rng.normal();
    }

    std::vector<double> grad(2 * n), gains(2 * n, 1.0), inc(2 * n, 0.0), num(n * n);

    Embedding2D emb;
    emb.params = params;
    emb.rows = features.rows;

    double exaggeration = params.early_exaggeration;
    for (std::size_t iter = 0; iter < params.n_iter; ++iter) {
        if (iter == params.exaggeration_iters) {
            for (auto& v : p) v /= params.early_exaggeration;
            exaggeration = 1.0;
            emb.kl_after_exaggeration = kl_objective(p, y, n, 1.0);
            emb.kl_history.emplace_back(iter, emb.kl_after_exaggeration);
        }

        // student-t numerators; the diagonal holds 1 and is excluded from zsum
        double zsum = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : zsum)
        for (std::ptrdiff_t ip = 0; ip < std::ptrdiff_t(n); ++ip) {
            const std::size_t i = std::size_t(ip);
            for (std::size_t j = 0; j < n; ++j) {
                const double dx = y[2 * i] - y[2 * j];
                const double dy = y[2 * i + 1] - y[2 * j + 1];
                const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                zsum += i < j ? 2.0 * v : 0.0;
            }
        }

        // the self term multiplies an exact zero displacement, so looping
        // over all j keeps identical rows bitwise identical
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ip = 0; ip < std::ptrdiff_t(n); ++ip) {
            const std::size_t i = std::size_t(ip);
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double q = num[i * n + j] / zsum;
                const double mult = (p[i * n + j] - q) * num[i * n + j];
                gx += mult * (y[2 * i] - y[2 * j]);
                gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }

        const double momentum = iter < params.exaggeration_iters ? 0.5 : 0.8;
        for (std::size_t k = 0; k < 2 * n; ++k) {
            gains[k] = (grad[k] > 0.0) != (inc[k] > 0.0) ? gains[k] + 0.2
                                                         : std::max(gains[k] * 0.8, 0.01);
            inc[k] = momentum * inc[k] - params.learning_rate * gains[k] * grad[k];
            y[k] += inc[k];
        }
        // re-center
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += y[2 * i];
            my += y[2 * i + 1];
        }
        mx /= double(n);
        my /= double(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }

        if (iter % 50 == 0 || iter + 1 == params.n_iter)
            emb.kl_history.emplace_back(iter, kl_objective(p, y, n, exaggeration));
    }

    emb.kl_final = kl_objective(p, y, n, 1.0);
    for (double v : y)
        if (!std::isfinite(v)) throw std::runtime_error("tsne: embedding diverged");

    emb.coords.assign(2 * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        emb.coords[2 * canon[k]] = y[2 * k];
        emb.coords[2 * canon[k] + 1] = y[2 * k + 1];
    }
    return emb;
}

void save_embedding_csv(const Embedding2D& emb, const std::filesystem::path& path) {
    std::ostringstream ss;
    ss.precision(10);
    ss << "x,y,subject,epoch,label\n";
    for (std::size_t i = 0; i < emb.rows.size(); ++i)
        ss << emb.coords[2 * i] << ',' << emb.coords[2 * i + 1] << ',' << emb.rows[i].subject_id
           << ',' << emb.rows[i].epoch_index << ',' << int(emb.rows[i].label) << '\n';
    atomic_write_file(path, ss.str());
}

}  // namespace revae::viz
