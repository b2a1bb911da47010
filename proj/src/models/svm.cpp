#include "revae/models/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace revae::models {

namespace {

// squared euclidean distances, [n][n] upper-triangle-symmetric
std::vector<double> pairwise_sqdist(const float* X, std::size_t n, std::size_t dim) {
    std::vector<double> d2(n * n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ip = 0; ip < std::ptrdiff_t(n); ++ip) {
        const std::size_t i = std::size_t(ip);
        for (std::size_t j = i + 1; j < n; ++j) {
            const float* a = X + i * dim;
            const float* b = X + j * dim;
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = double(a[k]) - double(b[k]);
                s += d * d;
            }
            d2[i * n + j] = s;
            d2[j * n + i] = s;
        }
    }
    return d2;
}

struct SmoResult {
    std::vector<double> alpha;
    double rho = 0.0;
    bool converged = false;
};

// Two-variable SMO with first-order working-set selection on the dual of the
// soft-margin problem: min 1/2 a^T Q a - e^T a, 0 <= a_i <= C, y^T a = 0.
SmoResult smo_solve(const std::vector<double>& K, const std::vector<int>& ypm, double C,
                    double tol, std::size_t max_iter) {
    const std::size_t n = ypm.size();
    SmoResult res;
    res.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);  // G_i = (Q a)_i - 1

    const auto q = [&](std::size_t i, std::size_t j) {
        return double(ypm[i]) * double(ypm[j]) * K[i * n + j];
    };

    std::size_t iter = 0;
    double m_up = 0.0, m_low = 0.0;
    for (; iter < max_iter; ++iter) {
        // working set: most violating pair
        std::ptrdiff_t i = -1, j = -1;
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const bool in_up = (ypm[t] > 0 && res.alpha[t] < C) || (ypm[t] < 0 && res.alpha[t] > 0);
            const bool in_low = (ypm[t] < 0 && res.alpha[t] < C) || (ypm[t] > 0 && res.alpha[t] > 0);
            const double v = -double(ypm[t]) * grad[t];
            if (in_up && v > m_up) {
                m_up = v;
                i = std::ptrdiff_t(t);
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = std::ptrdiff_t(t);
            }
        }
        if (i < 0 || j < 0 || m_up - m_low <= tol) {
            res.converged = true;
            break;
        }
        const std::size_t ii = std::size_t(i), jj = std::size_t(j);

        const double old_ai = res.alpha[ii], old_aj = res.alpha[jj];
        double quad = q(ii, ii) + q(jj, jj) - 2.0 * double(ypm[ii]) * double(ypm[jj]) * K[ii * n + jj];
        if (quad <= 0.0) quad = 1e-12;

        if (ypm[ii] != ypm[jj]) {
            const double delta = (-grad[ii] - grad[jj]) / quad;
            const double diff = old_ai - old_aj;
            double ai = old_ai + delta, aj = old_aj + delta;
            if (diff > 0) {
                if (aj < 0) { aj = 0; ai = diff; }
            } else {
                if (ai < 0) { ai = 0; aj = -diff; }
            }
            if (diff > 0) {
                if (ai > C) { ai = C; aj = C - diff; }
            } else {
                if (aj > C) { aj = C; ai = C + diff; }
            }
            res.alpha[ii] = ai;
            res.alpha[jj] = aj;
        } else {
            const double delta = (grad[ii] - grad[jj]) / quad;
            const double sum = old_ai + old_aj;
            double ai = old_ai - delta, aj = old_aj + delta;
            if (sum > C) {
                if (ai > C) { ai = C; aj = sum - C; }
            } else {
                if (aj < 0) { aj = 0; ai = sum; }
            }
            if (sum > C) {
                if (aj > C) { aj = C; ai = sum - C; }
            } else {
                if (ai < 0) { ai = 0; aj = sum; }
            }
            res.alpha[ii] = ai;
            res.alpha[jj] = aj;
        }

        const double dai = res.alpha[ii] - old_ai, daj = res.alpha[jj] - old_aj;
        if (dai == 0.0 && daj == 0.0) {
            res.converged = true;  // numerically stuck at the optimum
            break;
        }
        for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, ii) * dai + q(t, jj) * daj;
    }
    res.rho = (m_up + m_low) / 2.0;
    return res;
}

// Platt's sigmoid fit (Lin-Weng formulation) of P(y=1|f) = 1/(1+exp(a f + b)).
void fit_platt(const std::vector<double>& decisions, const std::vector<int>& labels, double& a,
               double& b) {
    const std::size_t n = decisions.size();
    double prior1 = 0.0;
    for (int l : labels) prior1 += l == 1;
    const double prior0 = double(n) - prior1;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);

    a = 0.0;
    b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    const double sigma = 1e-12;
    for (int it = 0; it < 100; ++it) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = decisions[i];
            const double t = labels[i] == 1 ? hi : lo;
            const double fab = f * a + b;
            double p, q;
            if (fab >= 0) {
                p = std::exp(-fab) / (1.0 + std::exp(-fab));
                q = 1.0 / (1.0 + std::exp(-fab));
            } else {
                p = 1.0 / (1.0 + std::exp(fab));
                q = std::exp(fab) / (1.0 + std::exp(fab));
            }
            const double d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            const double d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        a += da;
        b += db;
        if (std::abs(da) < 1e-10 && std::abs(db) < 1e-10) break;
    }
}

double validation_accuracy(const SvmModel& model, const float* Xv, const int* yv,
                           std::size_t n_val) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_val; ++i)
        correct += (model.decision(Xv + i * model.dim) > 0.0) == (yv[i] == 1);
    return double(correct) / double(n_val);
}

}  // namespace

double SvmModel::decision(const float* x) const {
    if (degenerate) return majority_label == 1 ? 1.0 : -1.0;
    const std::size_t n_sv = coef.size();
    double acc = -rho;
    for (std::size_t i = 0; i < n_sv; ++i) {
        const float* sv = support_vectors.data() + i * dim;
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = double(sv[k]) - double(x[k]);
            d2 += d * d;
        }
        acc += coef[i] * std::exp(-gamma * d2);
    }
    return acc;
}

double SvmModel::probability(const float* x) const {
    const double f = decision(x);
    const double fab = f * platt_a + platt_b;
    if (fab >= 0) return std::exp(-fab) / (1.0 + std::exp(-fab));
    return 1.0 / (1.0 + std::exp(fab));
}

SvmModel train_svm_rbf(const float* X, const int* y, std::size_t n, std::size_t dim,
                       const float* Xv, const int* yv, std::size_t n_val, const SvmConfig& cfg) {
    if (n == 0) throw std::invalid_argument("svm: no training rows");
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) (y[i] == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw std::invalid_argument("svm: both classes must be present");

    SvmModel model;
    model.dim = dim;

    // feature variance for the gamma scale heuristic; a constant feature
    // matrix cannot be separated, fall back to the majority vote
    double mean_all = 0.0, var_all = 0.0;
    for (std::size_t i = 0; i < n * dim; ++i) mean_all += X[i];
    mean_all /= double(n * dim);
    for (std::size_t i = 0; i < n * dim; ++i) {
        const double d = double(X[i]) - mean_all;
        var_all += d * d;
    }
    var_all /= double(n * dim);
    if (var_all <= 1e-18) {
        model.degenerate = true;
        std::size_t ones = 0;
        for (std::size_t i = 0; i < n; ++i) ones += y[i] == 1;
        model.majority_label = ones * 2 >= n ? 1 : 0;
        model.platt_a = -1.0;
        model.platt_b = 0.0;
        return model;
    }
    const double gamma_scale = 1.0 / (double(dim) * var_all);

    std::vector<int> ypm(n);
    for (std::size_t i = 0; i < n; ++i) ypm[i] = y[i] == 1 ? 1 : -1;

    const std::vector<double> d2 = pairwise_sqdist(X, n, dim);
    std::vector<double> K(n * n);

    double best_acc = -1.0;
    SvmModel best;
    for (const double gf : cfg.gamma_factors) {
        const double gamma = gamma_scale * gf;
        for (std::size_t i = 0; i < n * n; ++i) K[i] = std::exp(-gamma * d2[i]);
        for (const double c : cfg.c_grid) {
            const SmoResult sol = smo_solve(K, ypm, c, cfg.tolerance, cfg.max_iterations);
            SvmModel cand;
            cand.dim = dim;
            cand.gamma = gamma;
            cand.c = c;
            cand.rho = sol.rho;
            for (std::size_t i = 0; i < n; ++i) {
                if (sol.alpha[i] > 1e-12) {
                    cand.coef.push_back(sol.alpha[i] * double(ypm[i]));
                    cand.support_vectors.insert(cand.support_vectors.end(), X + i * dim,
                                                X + (i + 1) * dim);
                }
            }
            const double acc = n_val > 0 ? validation_accuracy(cand, Xv, yv, n_val)
                                         : validation_accuracy(cand, X, y, n);
            // ties resolve to the smaller C, then the smaller gamma (grid order)
            if (acc > best_acc + 1e-12) {
                best_acc = acc;
                best = std::move(cand);
            }
        }
    }
    model = std::move(best);

    // Platt calibration on the validation decisions (training if none)
    std::vector<double> dec;
    std::vector<int> lab;
    const float* Xp = n_val > 0 ? Xv : X;
    const int* yp = n_val > 0 ? yv : y;
    const std::size_t np = n_val > 0 ? n_val : n;
    for (std::size_t i = 0; i < np; ++i) {
        dec.push_back(model.decision(Xp + i * dim));
        lab.push_back(yp[i]);
    }
    fit_platt(dec, lab, model.platt_a, model.platt_b);
    // calibration must preserve the decision ordering
    if (model.platt_a > 0.0) {
        model.platt_a = -1.0;
        model.platt_b = 0.0;
    }
    return model;
}

}  // namespace revae::models
