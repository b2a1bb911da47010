#include "revae/impurity/di.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace revae::impurity {

using nlohmann::json;

double gini(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("gini: p must be in [0,1]");
    return p * (1.0 - p);
}

AttrImpurity dichotomy_impurity_attr(const std::vector<double>& values,
                                     const std::vector<int>& labels) {
    const std::size_t n = values.size();
    if (n != labels.size()) throw std::invalid_argument("dichotomy: length mismatch");
    if (n < 2) throw std::invalid_argument("dichotomy: need at least 2 values");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("dichotomy: non-finite value");

    AttrImpurity out;
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += l != 0;
    if (n_pos == 0 || n_pos == n) {
        out.degenerate = true;
        out.di = 0.0;
        out.tau = *std::min_element(values.begin(), values.end());
        out.left_count = 0;
        out.right_count = n;
        return out;
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });

    // weighted Gini of a split with k values (pos_k positives) on the left;
    // the integer form pos*(k-pos)/(k*n) is exactly invariant to label flips
    const auto weighted = [&](std::size_t k, std::size_t pos_k) {
        double w = 0.0;
        if (k > 0) w += double(pos_k * (k - pos_k)) / double(k) / double(n);
        if (k < n) {
            const std::size_t r = n - k, rp = n_pos - pos_k;
            w += double(rp * (r - rp)) / double(r) / double(n);
        }
        return w;
    };

    // empty-left cut at the minimum value: no split, global Gini
    double best = weighted(0, 0);
    double best_tau = values[idx[0]];
    std::size_t best_k = 0;

    std::size_t pos_so_far = 0;
    for (std::size_t i = 0; i + 1 < n;) {
        // advance over the tied block
        std::size_t j = i;
        while (j < n && values[idx[j]] == values[idx[i]]) {
            pos_so_far += labels[idx[j]] != 0;
            ++j;
        }
        if (j >= n) break;
        const double tau = (values[idx[j - 1]] + values[idx[j]]) / 2.0;
        const double w = weighted(j, pos_so_far);
        if (w < best || (w == best && tau < best_tau)) {
            best = w;
            best_tau = tau;
            best_k = j;
        }
        i = j;
    }

    out.di = best;
    out.tau = best_tau;
    out.left_count = best_k;
    out.right_count = n - best_k;
    return out;
}

DIReport dichotomy_impurity(const std::vector<double>& values, std::size_t n, std::size_t dim,
                            const std::vector<int>& labels, const std::string& tag) {
    if (dim < 1) throw std::invalid_argument("dichotomy: need at least one attribute");
    if (values.size() != n * dim) throw std::invalid_argument("dichotomy: shape mismatch");
    DIReport report;
    report.feature_tag = tag;
    report.attributes.resize(dim);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t dp = 0; dp < std::ptrdiff_t(dim); ++dp) {
        const std::size_t d = std::size_t(dp);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = values[i * dim + d];
        AttrImpurity a = dichotomy_impurity_attr(col, labels);
        a.attribute = d;
        report.attributes[d] = a;
    }
    double sum = 0.0;
    for (const auto& a : report.attributes) sum += a.di;
    report.mean_di = sum / double(dim);

    std::vector<std::size_t> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (report.attributes[a].di != report.attributes[b].di)
            return report.attributes[a].di < report.attributes[b].di;
        return a < b;
    });
    const std::size_t q = (dim + 3) / 4;  // ceil(D/4)
    report.first_quantile_indices.assign(order.begin(), order.begin() + q);
    return report;
}

DIReport dichotomy_impurity(const FeatureMatrix& features) {
    std::vector<double> values(features.values.begin(), features.values.end());
    std::vector<int> labels;
    for (const auto& r : features.rows) labels.push_back(int(r.label));
    return dichotomy_impurity(values, features.n_rows, features.dim, labels, features.source);
}

QuantileComparison quantile_comparison(const DIReport& a, const DIReport& b) {
    if (a.attributes.empty() || b.attributes.empty())
        throw std::invalid_argument("quantile_comparison: empty report");
    QuantileComparison out;
    for (std::size_t i : a.first_quantile_indices) out.a_sorted.push_back(a.attributes[i].di);
    for (std::size_t i : b.first_quantile_indices) out.b_sorted.push_back(b.attributes[i].di);
    std::sort(out.a_sorted.begin(), out.a_sorted.end());
    std::sort(out.b_sorted.begin(), out.b_sorted.end());
    const auto med = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
    };
    out.a_min = out.a_sorted.front();
    out.a_max = out.a_sorted.back();
    out.a_median = med(out.a_sorted);
    out.b_min = out.b_sorted.front();
    out.b_max = out.b_sorted.back();
    out.b_median = med(out.b_sorted);
    return out;
}

std::string di_report_to_json(const DIReport& report) {
    json attrs = json::array();
    for (const auto& a : report.attributes)
        attrs.push_back(json{{"attribute", a.attribute},
                             {"di", a.di},
                             {"tau", a.tau},
                             {"left_count", a.left_count},
                             {"right_count", a.right_count},
                             {"degenerate", a.degenerate}});
    const json j{{"attributes", attrs},
                 {"mean_di", report.mean_di},
                 {"first_quantile_indices", report.first_quantile_indices},
                 {"feature_tag", report.feature_tag}};
    return j.dump(2) + "\n";
}

DIReport di_report_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    DIReport report;
    for (const auto& a : j.at("attributes")) {
        AttrImpurity ai;
        ai.attribute = a.at("attribute").get<std::size_t>();
        ai.di = a.at("di").get<double>();
        ai.tau = a.at("tau").get<double>();
        ai.left_count = a.at("left_count").get<std::size_t>();
        ai.right_count = a.at("right_count").get<std::size_t>();
        ai.degenerate = a.at("degenerate").get<bool>();
        report.attributes.push_back(ai);
    }
    report.mean_di = j.at("mean_di").get<double>();
    report.first_quantile_indices =
        j.at("first_quantile_indices").get<std::vector<std::size_t>>();
    report.feature_tag = j.at("feature_tag").get<std::string>();
    return report;
}

}  // namespace revae::impurity
