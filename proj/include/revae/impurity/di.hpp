#pragma once

// Per-attribute separability by optimal threshold split: the dichotomy
// impurity is the minimum label-weighted Gini over all cuts of one attribute,
// and the report averages it across attributes.

#include <cstddef>
#include <string>
#include <vector>

#include "revae/data.hpp"

namespace revae::impurity {

// p(1 - p); throws on p outside [0, 1]
double gini(double p);

struct AttrImpurity {
    std::size_t attribute = 0;
    double di = 0.0;
    double tau = 0.0;  // smallest threshold achieving the minimum
    std::size_t left_count = 0;
    std::size_t right_count = 0;
    bool degenerate = false;  // single-class labels: di defined as 0
};

// Candidate cuts are the midpoints between consecutive distinct sorted values
// plus the empty-left cut at the minimum value (weight-0 side), which bounds
// the result by the global Gini and keeps constant columns well defined.
AttrImpurity dichotomy_impurity_attr(const std::vector<double>& values,
                                     const std::vector<int>& labels);

struct DIReport {
    std::vector<AttrImpurity> attributes;
    double mean_di = 0.0;
    std::vector<std::size_t> first_quantile_indices;  // lowest ceil(D/4) by (di, index)
    std::string feature_tag;
};

DIReport dichotomy_impurity(const FeatureMatrix& features);
DIReport dichotomy_impurity(const std::vector<double>& values, std::size_t n, std::size_t dim,
                            const std::vector<int>& labels, const std::string& tag);

struct QuantileComparison {
    std::vector<double> a_sorted;  // first-quantile DI values, ascending
    std::vector<double> b_sorted;
    double a_min = 0.0, a_median = 0.0, a_max = 0.0;
    double b_min = 0.0, b_median = 0.0, b_max = 0.0;
};

QuantileComparison quantile_comparison(const DIReport& a, const DIReport& b);

std::string di_report_to_json(const DIReport& report);
DIReport di_report_from_json(const std::string& json_text);

}  // namespace revae::impurity
