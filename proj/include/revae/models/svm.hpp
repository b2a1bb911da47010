#pragma once

// RBF-kernel support vector machine trained by sequential minimal
// optimization, with hyperparameters picked on validation data and a
// Platt sigmoid for probability outputs.

#include <cstdint>
#include <vector>

#include "revae/data.hpp"

namespace revae::models {

struct SvmConfig {
    std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_factors{0.1, 1.0, 10.0};  // times the scale heuristic
    double tolerance = 1e-3;
    std::size_t max_iterations = 200000;
    std::uint64_t seed = 1;
};

struct SvmModel {
    std::size_t dim = 0;
    double gamma = 0.0;
    double c = 0.0;
    double rho = 0.0;  // decision(x) = sum_i coef_i K(sv_i, x) - rho
    std::vector<float> support_vectors;  // [n_sv][dim]
    std::vector<double> coef;            // alpha_i * y_i
    double platt_a = -1.0, platt_b = 0.0;
    bool degenerate = false;  // constant-feature or single-class fallback
    int majority_label = 0;

    double decision(const float* x) const;
    // P(class 1 | x) through the fitted sigmoid
    double probability(const float* x) const;
};

// labels are 0/1; validation rows drive the (C, gamma) grid selection and the
// Platt fit. Throws std::invalid_argument when only one class is present.
SvmModel train_svm_rbf(const float* X, const int* y, std::size_t n, std::size_t dim,
                       const float* Xv, const int* yv, std::size_t n_val, const SvmConfig& cfg);

}  // namespace revae::models
