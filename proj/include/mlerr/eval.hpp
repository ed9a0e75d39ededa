#pragma once
// Ranking metrics for label-quality scores against known annotation errors.
// Low scores are treated as "most likely mislabeled", so rankings are ascending.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlerr/core_data.hpp"
#include "mlerr/matrix.hpp"

namespace mlerr {

struct ErrorTruth {
    std::vector<bool> error_flags;         // any per-class annotation wrong
    std::vector<std::size_t> error_counts;  // number of wrong per-class annotations

    std::size_t n_mislabeled() const noexcept {
        return static_cast<std::size_t>(std::count(error_flags.begin(), error_flags.end(), true));
    }
};

inline ErrorTruth error_truth(const LabelMatrix& given, const LabelMatrix& truth) {
    if (!given.same_shape(truth)) throw DataError("error_truth: given and true label shapes differ");
    ErrorTruth t{std::vector<bool>(given.rows()), std::vector<std::size_t>(given.rows())};
    for (std::size_t i = 0; i < given.rows(); ++i) {
        std::size_t c = 0;
        for (std::size_t k = 0; k < given.cols(); ++k) c += given(i, k) != truth(i, k);
        t.error_counts[i] = c;
        t.error_flags[i] = c > 0;
    }
    return t;
}

struct MetricResult {
    std::string name;
    std::optional<double> value;  // empty when the metric is undefined for this input
    std::size_t T = 0;
    std::size_t k = 0;
    std::size_t n_positives = 0;
};

/// Indices sorted by ascending score; ties keep their original order.
inline std::vector<std::size_t> rank_ascending(std::span<const double> scores) {
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (std::isnan(scores[i])) throw DataError("rank_ascending: NaN score at index " + std::to_string(i));
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return order;
}

/// Average precision over the bottom-T examples, counting as positive any example
/// with at least `min_errors` wrong annotations. Denominator: positives among those T.
inline MetricResult ap_at_t(std::span<const double> scores, const ErrorTruth& truth, std::size_t T,
                            std::size_t min_errors = 1) {
    const std::size_t n = scores.size();
    if (truth.error_counts.size() != n) throw DataError("ap_at_t: scores and truth differ in length");
    if (T < 1 || T > n) throw ParameterError("ap_at_t: T must satisfy 1 <= T <= N");
    if (min_errors < 1) throw ParameterError("ap_at_t: k must be >= 1");
    const auto order = rank_ascending(scores);
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        if (truth.error_counts[order[t]] >= min_errors) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(t + 1);
        }
    }
    std::size_t pos = 0;
    for (auto c : truth.error_counts) pos += c >= min_errors;
    const std::string name = min_errors == 1 ? "ap_at_t" : "ap" + std::to_string(min_errors) + "_at_t";
    return {name, sum / static_cast<double>(std::max<std::size_t>(1, hits)), T, min_errors, pos};
}

/// Full-depth average precision: identical to ap_at_t with T = N, k = 1.
inline MetricResult auprc(std::span<const double> scores, const ErrorTruth& truth) {
    if (truth.n_mislabeled() == 0) throw DataError("auprc: no positive (mislabeled) examples");
    auto r = ap_at_t(scores, truth, scores.size(), 1);
    r.name = "auprc";
    return r;
}

/// Ranks 1..N with tied values sharing the mean of their rank range.
template <typename T>
std::vector<double> average_ranks(std::span<const T> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start + 1;
        while (end < order.size() && !(v[order[start]] < v[order[end]])) ++end;
        const double r = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t j = start; j < end; ++j) ranks[order[j]] = r;
        start = end;
    }
    return ranks;
}

/// Raw Spearman correlation (Pearson on average ranks). Undefined (empty) for a constant input.
inline MetricResult spearman(std::span<const double> scores, std::span<const std::size_t> error_counts) {
    if (scores.size() != error_counts.size()) throw DataError("spearman: length mismatch");
    if (scores.size() < 2) throw DataError("spearman: need at least 2 examples");
    for (double s : scores)
        if (std::isnan(s)) throw DataError("spearman: NaN score");
    const auto ra = average_ranks(scores);
    const auto rb = average_ranks(error_counts);
    const double n = static_cast<double>(ra.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    MetricResult r{"spearman", std::nullopt, 0, 0, 0};
    for (auto c : error_counts) r.n_positives += c > 0;
    if (saa == 0.0 || sbb == 0.0) return r;
    r.value = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    return r;
}

struct FlagAccuracy {
    double precision = 0.0;
    double recall = 0.0;
    std::size_t n_flagged = 0;
    std::size_t n_true = 0;
};

/// Precision/recall of a flag set against the mislabeled set. Empty sets count as 1.0.
inline FlagAccuracy flag_accuracy(const std::vector<bool>& flags, const ErrorTruth& truth) {
    if (flags.size() != truth.error_flags.size()) throw DataError("flag_accuracy: length mismatch");
    FlagAccuracy a;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        a.n_flagged += flags[i];
        a.n_true += truth.error_flags[i];
        tp += flags[i] && truth.error_flags[i];
    }
    a.precision = a.n_flagged ? static_cast<double>(tp) / static_cast<double>(a.n_flagged) : 1.0;
    a.recall = a.n_true ? static_cast<double>(tp) / static_cast<double>(a.n_true) : 1.0;
    return a;
}

/// Mean over classes of thresholded (p >= 0.5) accuracy.
inline double per_class_accuracy(const ProbMatrix& probs, const LabelMatrix& labels) {
    if (!probs.same_shape(labels)) throw DataError("per_class_accuracy: shape mismatch");
    if (probs.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i)
        for (std::size_t k = 0; k < probs.cols(); ++k) correct += (probs(i, k) >= 0.5) == (labels(i, k) == 1);
    return static_cast<double>(correct) / static_cast<double>(probs.size());
}

}  // namespace mlerr
