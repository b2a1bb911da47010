#pragma once

// Uniform wrapper over the four classifier kinds. A model carries its input
// contract (raw epochs vs feature rows); predict() enforces it and always
// returns per-row class probabilities that sum to 1.

#include <filesystem>
#include <memory>
#include <vector>

#include "revae/data.hpp"
#include "revae/models/cnn1d.hpp"
#include "revae/models/eegnet.hpp"
#include "revae/models/mlp.hpp"
#include "revae/models/svm.hpp"
#include "revae/models/trainer.hpp"

namespace revae::models {

enum class ClassifierKind { eegnet, svm_rbf, mlp, cnn1d };

const char* to_string(ClassifierKind k);
ClassifierKind classifier_kind_from_string(const std::string& s);

struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::cnn1d;
    bool raw_input = false;           // true: rows are [channels x len] epochs
    std::size_t input_channels = 0;   // raw contract
    std::size_t input_len = 0;
    std::size_t feature_dim = 0;      // feature contract
    std::shared_ptr<EEGNetNet<float>> eegnet;
    std::shared_ptr<Cnn1dNet<float>> cnn1d;
    std::shared_ptr<MlpNet<float>> mlp;
    std::shared_ptr<SvmModel> svm;
    std::vector<EpochStats> history;
};

// Rows are consumed in order; row_numel must match the model's contract.
std::vector<float> predict(ClassifierModel& model, const float* X, std::size_t n_rows,
                           std::size_t row_numel);

// Supervised training on raw labeled epochs.
ClassifierModel train_eegnet(const std::vector<EpochSet>& train_sets,
                             const std::vector<EpochSet>& val_sets, EEGNetConfig cfg);

// Flattened activations entering the EEGNet head, one row per epoch.
FeatureMatrix eegnet_penultimate_features(ClassifierModel& model,
                                          const std::vector<EpochSet>& sets);

// Feature-space classifiers; labels come from the matrix provenance.
ClassifierModel train_cnn1d(const FeatureMatrix& train, const FeatureMatrix& val, CNN1DConfig cfg);
ClassifierModel train_mlp(const FeatureMatrix& train, const FeatureMatrix& val, MLPConfig cfg);
ClassifierModel train_svm_rbf(const FeatureMatrix& train, const FeatureMatrix& val, SvmConfig cfg);

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_classifier(const std::filesystem::path& path);

}  // namespace revae::models
