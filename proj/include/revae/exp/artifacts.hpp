#pragma once

// On-disk artifact helpers shared by the CLI stages: feature matrices
// (float32 blob + JSON provenance) and the content-addressed stage cache.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "revae/data.hpp"

namespace revae::exp {

// <prefix>.bin (row-major float32 LE) + <prefix>.json (rows, tag, source digest)
void save_features(const FeatureMatrix& fm, const std::filesystem::path& prefix,
                   const std::string& model_digest = "");
FeatureMatrix load_features(const std::filesystem::path& prefix);

// Delimited text matrix (comma or whitespace); the last column is the 0/1
// label. Returns a FeatureMatrix with synthetic row ids.
FeatureMatrix load_features_delimited(const std::filesystem::path& file);

// Per-stage sidecar: a stage is fresh when its key matches and every recorded
// output file still hashes to the recorded digest.
class StageCache {
public:
    explicit StageCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    bool fresh(const std::string& stage, const std::string& key) const;
    void commit(const std::string& stage, const std::string& key,
                const std::vector<std::filesystem::path>& outputs) const;
    // digest of all outputs recorded for a stage (empty if missing)
    std::string outputs_digest(const std::string& stage) const;

private:
    std::filesystem::path sidecar(const std::string& stage) const;
    std::filesystem::path dir_;
};

std::string file_digest(const std::filesystem::path& p);

}  // namespace revae::exp
