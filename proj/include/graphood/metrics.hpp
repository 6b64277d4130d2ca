#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "graphood/common.hpp"

namespace graphood::metrics {

/// Paired judge scores and ground-truth labels, 1 = ID (positive class),
/// 0 = OOD.
struct DetectionResult {
    std::vector<double> scores;
    std::vector<int> labels;
    std::string method;
};

struct MetricValues {
    double auroc = 0.0;
    double aupr = 0.0;
    double fpr95 = 0.0;
};

namespace detail {

struct SortedScores {
    std::vector<std::size_t> order;  // ascending by score
    std::int64_t num_pos = 0;
    std::int64_t num_neg = 0;
};

inline SortedScores sort_and_count(const DetectionResult& r) {
    if (r.scores.size() != r.labels.size())
        throw std::invalid_argument("compute_metrics: score/label length mismatch");
    if (r.scores.empty()) throw std::invalid_argument("compute_metrics: empty input");
    SortedScores s;
    s.order.resize(r.scores.size());
    std::iota(s.order.begin(), s.order.end(), 0);
    std::sort(s.order.begin(), s.order.end(),
              [&](std::size_t a, std::size_t b) { return r.scores[a] < r.scores[b]; });
    for (const int label : r.labels) {
        if (label == 1)
            ++s.num_pos;
        else if (label == 0)
            ++s.num_neg;
        else
            throw std::invalid_argument("compute_metrics: labels must be 0 or 1");
    }
    if (s.num_pos == 0 || s.num_neg == 0)
        throw std::invalid_argument("compute_metrics: both classes must be present");
    return s;
}

}  // namespace detail

/// AUROC as the probability that a random ID score exceeds a random OOD
/// score, ties counted one half. Computed with integer win/tie counts so the
/// result is bit-identical to exhaustive pair counting.
inline double auroc(const DetectionResult& r) {
    const auto s = detail::sort_and_count(r);
    std::int64_t wins = 0, ties = 0, neg_below = 0;
    std::size_t i = 0;
    while (i < s.order.size()) {
        std::size_t j = i;
        std::int64_t group_pos = 0, group_neg = 0;
        const double score = r.scores[s.order[i]];
        while (j < s.order.size() && r.scores[s.order[j]] == score) {
            (r.labels[s.order[j]] == 1 ? group_pos : group_neg)++;
            ++j;
        }
        wins += group_pos * neg_below;
        ties += group_pos * group_neg;
        neg_below += group_neg;
        i = j;
    }
    return static_cast<double>(2 * wins + ties) /
           static_cast<double>(2 * s.num_pos * s.num_neg);
}

/// Area under precision-recall (ID positive) by step integration over the
/// distinct-score thresholds, descending.
inline double aupr(const DetectionResult& r) {
    const auto s = detail::sort_and_count(r);
    double area = 0.0;
    double prev_recall = 0.0;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = s.order.size();
    while (i > 0) {
        const double score = r.scores[s.order[i - 1]];
        while (i > 0 && r.scores[s.order[i - 1]] == score) {
            (r.labels[s.order[i - 1]] == 1 ? tp : fp)++;
            --i;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(s.num_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

/// False-positive rate at the most conservative threshold reaching 95% true
/// positives. Candidate thresholds are the observed scores with the
/// prediction rule score >= threshold.
inline double fpr95(const DetectionResult& r, double tpr_target = 0.95) {
    const auto s = detail::sort_and_count(r);
    std::int64_t tp = 0, fp = 0;
    std::size_t i = s.order.size();
    while (i > 0) {
        const double score = r.scores[s.order[i - 1]];
        while (i > 0 && r.scores[s.order[i - 1]] == score) {
            (r.labels[s.order[i - 1]] == 1 ? tp : fp)++;
            --i;
        }
        const double tpr = static_cast<double>(tp) / static_cast<double>(s.num_pos);
        if (tpr >= tpr_target)
            return static_cast<double>(fp) / static_cast<double>(s.num_neg);
    }
    return 1.0;  // unreachable: the lowest threshold always gives TPR = 1
}

inline MetricValues compute_metrics(const DetectionResult& r) {
    return {auroc(r), aupr(r), fpr95(r)};
}

/// Empirical judge-score gap: mean ID score minus mean OOD score.
inline double score_gap(const std::vector<double>& id_scores,
                        const std::vector<double>& ood_scores) {
    if (id_scores.empty() || ood_scores.empty())
        throw std::invalid_argument("score_gap: both score lists must be nonempty");
    const double id_mean =
        std::accumulate(id_scores.begin(), id_scores.end(), 0.0) / id_scores.size();
    const double ood_mean =
        std::accumulate(ood_scores.begin(), ood_scores.end(), 0.0) / ood_scores.size();
    return id_mean - ood_mean;
}

}  // namespace graphood::metrics
