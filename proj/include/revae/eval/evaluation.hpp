#pragma once

// Subject-based cross-validation splits, epoch- and subject-level scoring
// with majority voting, and the Mann-Whitney U test.

#include <cstdint>
#include <string>
#include <vector>

#include "revae/data.hpp"

namespace revae::eval {

struct SubjectInfo {
    std::string id;
    ClassLabel label;
};

struct FoldSplit {
    std::size_t fold_id = 0;
    std::vector<std::string> test_subjects;        // 3 lean + 3 obese
    std::vector<std::string> validation_subjects;  // 3 + 3 from the remainder
    std::vector<std::string> train_subjects;       // everyone else
};

// Equal class counts divisible by 3, at least 12 subjects. Every subject is
// tested exactly once across the returned folds; splits are deterministic in
// the seed.
std::vector<FoldSplit> make_subject_folds(const std::vector<SubjectInfo>& subjects,
                                          std::uint64_t seed);

struct VoteResult {
    ClassLabel label = ClassLabel::lean;
    double tally_lean = 0.0;
    double tally_obese = 0.0;
    bool tie = false;  // tally tie resolved by mean probability (or the lean default)
};

// probs: per-epoch [n][2] class probabilities for one subject. Epochs vote by
// argmax (an exact tie contributes half a vote to each side); a tied tally
// falls back to the mean obese probability, then to lean.
VoteResult majority_vote(const std::vector<float>& probs, std::size_t n_epochs);

struct SubjectScore {
    std::string subject_id;
    ClassLabel truth;
    VoteResult vote;
    std::size_t n_epochs = 0;
    std::size_t correct_epochs = 0;
};

struct FoldScore {
    std::size_t fold_id = 0;
    double epoch_accuracy = 0.0;
    double subject_accuracy = 0.0;
    std::vector<SubjectScore> subjects;
};

// Counts epoch- and subject-level accuracy for one fold's predictions.
FoldScore score_fold(std::size_t fold_id, const std::vector<SubjectScore>& subjects);

struct ScoreTable {
    std::vector<FoldScore> folds;
    double epoch_mean = 0.0;
    double epoch_std_over_folds = 0.0;
    double epoch_std_over_samples = 0.0;
    double subject_mean = 0.0;
    double subject_std_over_folds = 0.0;
    double subject_std_over_subjects = 0.0;
    std::vector<double> fold_epoch_accuracies() const;
    std::vector<double> fold_subject_accuracies() const;
};

ScoreTable summarize_folds(const std::vector<FoldScore>& folds);

struct MannWhitneyResult {
    double u_a = 0.0;  // statistic of the first sample
    double u_b = 0.0;
    double p_two_sided = 1.0;
    bool exact = false;  // enumeration (tie-free, n*m <= 400) vs normal approximation
};

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace revae::eval
