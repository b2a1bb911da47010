#pragma once

// Exact (all-pairs) t-SNE to 2-D: Gaussian input affinities with per-point
// bandwidth found by binary search on the perplexity, Student-t output
// affinities, gradient descent with momentum, adaptive gains and an early
// exaggeration phase.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "revae/data.hpp"

namespace revae::viz {

struct TsneParams {
    double perplexity = 30.0;
    std::size_t n_iter = 1000;
    std::uint64_t seed = 1;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    double learning_rate = 200.0;
};

struct Embedding2D {
    std::vector<double> coords;  // [N][2]
    std::vector<FeatureRow> rows;
    TsneParams params;
    std::vector<std::pair<std::size_t, double>> kl_history;  // (iteration, objective)
    double kl_after_exaggeration = 0.0;
    double kl_final = 0.0;
};

// Throws std::invalid_argument when N <= 3 * perplexity. The initial layout
// is derived from each row's content (plus the seed), so permuting input rows
// permutes the embedding.
Embedding2D tsne_project(const FeatureMatrix& features, const TsneParams& params = {});

void save_embedding_csv(const Embedding2D& emb, const std::filesystem::path& path);

}  // namespace revae::viz
