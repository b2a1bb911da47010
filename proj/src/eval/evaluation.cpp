#include "revae/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "revae/core/rng.hpp"

namespace revae::eval {

std::vector<FoldSplit> make_subject_folds(const std::vector<SubjectInfo>& subjects,
                                          std::uint64_t seed) {
    std::vector<std::string> lean, obese;
    for (const auto& s : subjects)
        (s.label == ClassLabel::lean ? lean : obese).push_back(s.id);
    if (lean.size() != obese.size())
        throw std::invalid_argument("folds: class counts must be equal");
    if (lean.size() % 3 != 0)
        throw std::invalid_argument("folds: per-class count must be divisible by 3");
    if (subjects.size() < 12)
        throw std::invalid_argument("folds: need at least 12 subjects to hold out validation");
    std::set<std::string> uniq;
    for (const auto& s : subjects)
        if (!uniq.insert(s.id).second)
            throw std::invalid_argument("folds: duplicate subject id " + s.id);

    std::sort(lean.begin(), lean.end());
    std::sort(obese.begin(), obese.end());
    Rng lean_rng(seed, "folds/lean");
    Rng obese_rng(seed, "folds/obese");
    lean_rng.shuffle(lean);
    obese_rng.shuffle(obese);

    const std::size_t n_folds = lean.size() / 3;
    std::vector<FoldSplit> folds;
    for (std::size_t f = 0; f < n_folds; ++f) {
        FoldSplit fold;
        fold.fold_id = f;
        for (std::size_t k = 0; k < 3; ++k) {
            fold.test_subjects.push_back(lean[f * 3 + k]);
            fold.test_subjects.push_back(obese[f * 3 + k]);
        }
        // remaining subjects per class, in the shuffled order
        std::vector<std::string> rest_lean, rest_obese;
        for (std::size_t i = 0; i < lean.size(); ++i) {
            if (i / 3 == f) continue;
            rest_lean.push_back(lean[i]);
            rest_obese.push_back(obese[i]);
        }
        Rng val_rng(seed, "folds/val/" + std::to_string(f));
        val_rng.shuffle(rest_lean);
        val_rng.shuffle(rest_obese);
        for (std::size_t k = 0; k < 3; ++k) {
            fold.validation_subjects.push_back(rest_lean[k]);
            fold.validation_subjects.push_back(rest_obese[k]);
        }
        for (std::size_t k = 3; k < rest_lean.size(); ++k) {
            fold.train_subjects.push_back(rest_lean[k]);
            fold.train_subjects.push_back(rest_obese[k]);
        }
        std::sort(fold.test_subjects.begin(), fold.test_subjects.end());
        std::sort(fold.validation_subjects.begin(), fold.validation_subjects.end());
        std::sort(fold.train_subjects.begin(), fold.train_subjects.end());
        folds.push_back(std::move(fold));
    }
    return folds;
}

VoteResult majority_vote(const std::vector<float>& probs, std::size_t n_epochs) {
    if (n_epochs == 0) throw std::invalid_argument("majority_vote: no epochs");
    if (probs.size() != 2 * n_epochs)
        throw std::invalid_argument("majority_vote: probability shape mismatch");
    VoteResult v;
    double sum_obese_p = 0.0;
    for (std::size_t e = 0; e < n_epochs; ++e) {
        const float pl = probs[2 * e], po = probs[2 * e + 1];
        sum_obese_p += po;
        if (po > pl)
            v.tally_obese += 1.0;
        else if (pl > po)
            v.tally_lean += 1.0;
        else {
            v.tally_obese += 0.5;
            v.tally_lean += 0.5;
        }
    }
    if (v.tally_obese > v.tally_lean) {
        v.label = ClassLabel::obese;
    } else if (v.tally_lean > v.tally_obese) {
        v.label = ClassLabel::lean;
    } else {
        v.tie = true;
        const double mean_obese = sum_obese_p / double(n_epochs);
        v.label = mean_obese > 0.5 ? ClassLabel::obese : ClassLabel::lean;
    }
    return v;
}

FoldScore score_fold(std::size_t fold_id, const std::vector<SubjectScore>& subjects) {
    if (subjects.empty()) throw std::invalid_argument("score_fold: no subjects");
    FoldScore fs;
    fs.fold_id = fold_id;
    fs.subjects = subjects;
    std::size_t epochs = 0, correct_epochs = 0, correct_subjects = 0;
    for (const auto& s : subjects) {
        if (s.n_epochs == 0) throw std::invalid_argument("score_fold: subject with no epochs");
        epochs += s.n_epochs;
        correct_epochs += s.correct_epochs;
        correct_subjects += s.vote.label == s.truth;
    }
    fs.epoch_accuracy = double(correct_epochs) / double(epochs);
    fs.subject_accuracy = double(correct_subjects) / double(subjects.size());
    return fs;
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size()));
}

}  // namespace

std::vector<double> ScoreTable::fold_epoch_accuracies() const {
    std::vector<double> v;
    for (const auto& f : folds) v.push_back(f.epoch_accuracy);
    return v;
}

std::vector<double> ScoreTable::fold_subject_accuracies() const {
    std::vector<double> v;
    for (const auto& f : folds) v.push_back(f.subject_accuracy);
    return v;
}

ScoreTable summarize_folds(const std::vector<FoldScore>& folds) {
    if (folds.empty()) throw std::invalid_argument("summarize: no folds");
    ScoreTable t;
    t.folds = folds;
    std::vector<double> epoch_acc, subj_acc, per_subject, per_epoch;
    for (const auto& f : folds) {
        epoch_acc.push_back(f.epoch_accuracy);
        subj_acc.push_back(f.subject_accuracy);
        for (const auto& s : f.subjects) {
            per_subject.push_back(s.vote.label == s.truth ? 1.0 : 0.0);
            for (std::size_t e = 0; e < s.n_epochs; ++e)
                per_epoch.push_back(e < s.correct_epochs ? 1.0 : 0.0);
        }
    }
    t.epoch_mean = mean_of(epoch_acc);
    t.epoch_std_over_folds = std_of(epoch_acc);
    t.epoch_std_over_samples = std_of(per_epoch);
    t.subject_mean = mean_of(subj_acc);
    t.subject_std_over_folds = std_of(subj_acc);
    t.subject_std_over_subjects = std_of(per_subject);
    return t;
}

namespace {

// midranks of the pooled sample; returns true if any ties were present
bool midranks(const std::vector<double>& pooled, std::vector<double>& ranks) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    ranks.assign(n, 0.0);
    bool ties = false;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
        const double r = (double(i + 1) + double(j + 1)) / 2.0;
        if (j > i) ties = true;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ties;
}

// null distribution counts: ways(i, j, u) of interleaving i a's and j b's
// with statistic u; counts fit exactly in doubles for n*m <= 400
double exact_cdf(std::size_t n, std::size_t m, double u_obs) {
    const std::size_t umax = n * m;
    std::vector<std::vector<std::vector<double>>> c(
        n + 1, std::vector<std::vector<double>>(m + 1, std::vector<double>(umax + 1, 0.0)));
    for (std::size_t j = 0; j <= m; ++j) c[0][j][0] = 1.0;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 0; j <= m; ++j)
            for (std::size_t u = 0; u <= umax; ++u) {
                double v = u >= j ? c[i - 1][j][u - j] : 0.0;
                if (j >= 1) v += c[i][j - 1][u];
                c[i][j][u] = v;
            }
    double total = 0.0, below = 0.0;
    for (std::size_t u = 0; u <= umax; ++u) {
        total += c[n][m][u];
        if (double(u) <= u_obs + 1e-9) below += c[n][m][u];
    }
    return below / total;
}

}  // namespace

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    for (double v : pooled)
        if (!std::isfinite(v)) throw std::invalid_argument("mann_whitney_u: non-finite value");

    std::vector<double> ranks;
    const bool ties = midranks(pooled, ranks);
    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) rank_sum_a += ranks[i];

    MannWhitneyResult res;
    res.u_a = rank_sum_a - double(n) * double(n + 1) / 2.0;
    res.u_b = double(n) * double(m) - res.u_a;
    const double u_min = std::min(res.u_a, res.u_b);

    if (!ties && n * m <= 400) {
        res.exact = true;
        res.p_two_sided = std::min(1.0, 2.0 * exact_cdf(n, m, u_min));
        return res;
    }

    // normal approximation, tie-corrected variance, continuity correction
    const double nm = double(n) * double(m);
    const double total = double(n + m);
    double tie_sum = 0.0;
    {
        std::vector<double> sorted(pooled);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = double(j - i + 1);
            tie_sum += t * t * t - t;
            i = j + 1;
        }
    }
    const double var =
        nm / 12.0 * ((total + 1.0) - tie_sum / (total * (total - 1.0)));
    if (var <= 0.0) {
        res.p_two_sided = 1.0;
        return res;
    }
    const double z = std::max(0.0, std::abs(res.u_a - nm / 2.0) - 0.5) / std::sqrt(var);
    res.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

}  // namespace revae::eval
