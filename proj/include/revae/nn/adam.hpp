#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "revae/nn/layers.hpp"

namespace revae::nn {

// Adaptive moment estimation with the usual decay constants.
template <class Real>
class Adam {
public:
    Adam() = default;
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void attach(const std::vector<ParamRef<Real>>& params) {
        params_ = params;
        std::size_t total = 0;
        for (const auto& p : params) total += p.n;
        m_.assign(total, 0.0);
        v_.assign(total, 0.0);
        t_ = 0;
    }

    void step() {
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, double(t_));
        const double c2 = 1.0 - std::pow(b2_, double(t_));
        std::size_t off = 0;
        for (const auto& p : params_) {
            for (std::size_t i = 0; i < p.n; ++i) {
                const double g = double(p.grad[i]);
                m_[off + i] = b1_ * m_[off + i] + (1.0 - b1_) * g;
                v_[off + i] = b2_ * v_[off + i] + (1.0 - b2_) * g * g;
                const double mhat = m_[off + i] / c1;
                const double vhat = v_[off + i] / c2;
                p.value[i] = Real(double(p.value[i]) - lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
            off += p.n;
        }
    }

    void zero_grad() {
        for (const auto& p : params_)
            for (std::size_t i = 0; i < p.n; ++i) p.grad[i] = Real(0);
    }

private:
    double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<ParamRef<Real>> params_;
    std::vector<double> m_, v_;
};

}  // namespace revae::nn
