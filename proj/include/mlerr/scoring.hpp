#pragma once
// Per-class self-confidence and the pooling methods that turn K per-class
// scores into one label-quality score per example (lower = more suspect).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlerr/core_data.hpp"
#include "mlerr/matrix.hpp"

namespace mlerr {

enum class Pooling { Min, Max, Mean, Median, Ema, Softmin, Log, CumAvgBottom, WeightedCumAvg, MeanSma };

inline constexpr std::array<Pooling, 10> all_poolings = {
    Pooling::Min,     Pooling::Max, Pooling::Mean,         Pooling::Median,         Pooling::Ema,
    Pooling::Softmin, Pooling::Log, Pooling::CumAvgBottom, Pooling::WeightedCumAvg, Pooling::MeanSma,
};

/// A pooling kind together with the parameters it reads. Unused fields are ignored.
struct PoolingMethod {
    Pooling kind = Pooling::Ema;
    double alpha = 0.8;     // EMA forgetting factor
    double tau = 0.1;       // softmin temperature
    double epsilon = 1e-8;  // log-transform floor
    std::size_t bottom_j = 2;
    std::size_t period = 2;

    static PoolingMethod of(Pooling k) { return PoolingMethod{k}; }
    static PoolingMethod ema(double a = 0.8) { PoolingMethod m{Pooling::Ema}; m.alpha = a; return m; }
    static PoolingMethod softmin(double t = 0.1) { PoolingMethod m{Pooling::Softmin}; m.tau = t; return m; }
    static PoolingMethod log(double e = 1e-8) { PoolingMethod m{Pooling::Log}; m.epsilon = e; return m; }
    static PoolingMethod cumavg(std::size_t j = 2) { PoolingMethod m{Pooling::CumAvgBottom}; m.bottom_j = j; return m; }
    static PoolingMethod sma(std::size_t p = 2) { PoolingMethod m{Pooling::MeanSma}; m.period = p; return m; }

    /// Poolers whose output stays between the row min and row max.
    bool is_convex() const noexcept { return kind != Pooling::Log && kind != Pooling::WeightedCumAvg; }
};

inline std::string_view pooling_name(Pooling k) {
    switch (k) {
        case Pooling::Min: return "min";
        case Pooling::Max: return "max";
        case Pooling::Mean: return "mean";
        case Pooling::Median: return "median";
        case Pooling::Ema: return "ema";
        case Pooling::Softmin: return "softmin";
        case Pooling::Log: return "log";
        case Pooling::CumAvgBottom: return "cumavg";
        case Pooling::WeightedCumAvg: return "weighted_cumavg";
        case Pooling::MeanSma: return "sma";
    }
    return "?";
}

inline Pooling parse_pooling(std::string_view name) {
    for (auto k : all_poolings)
        if (pooling_name(k) == name) return k;
    throw ParameterError("unknown pooling method '" + std::string(name) +
                         "' (expected min|max|mean|median|ema|softmin|log|cumavg|weighted_cumavg|sma)");
}

/// "key=value" description of the parameters a method actually uses; empty if none.
inline std::string pooling_params(const PoolingMethod& m) {
    switch (m.kind) {
        case Pooling::Ema: return "alpha=" + detail::format_double(m.alpha);
        case Pooling::Softmin: return "tau=" + detail::format_double(m.tau);
        case Pooling::Log: return "epsilon=" + detail::format_double(m.epsilon);
        case Pooling::CumAvgBottom: return "J=" + std::to_string(m.bottom_j);
        case Pooling::MeanSma: return "P=" + std::to_string(m.period);
        default: return {};
    }
}

struct QualityScoreVector {
    std::vector<double> values;
    PoolingMethod method;
};

/// s = p where the given label is 1, 1 - p where it is 0.
inline PerClassScoreMatrix self_confidence(const LabelMatrix& labels, const ProbMatrix& probs) {
    if (!labels.same_shape(probs))
        throw DataError("self_confidence: shape mismatch between labels and probs");
    PerClassScoreMatrix s(labels.rows(), labels.cols());
    for (std::size_t i = 0; i < labels.rows(); ++i)
        for (std::size_t k = 0; k < labels.cols(); ++k)
            s(i, k) = labels(i, k) ? probs(i, k) : 1.0 - probs(i, k);
    return s;
}

enum class SortOrder { Ascending, Descending };

/// Copy of one example's scores sorted in the requested direction (stable).
inline void sorted_scores(std::span<const double> row, SortOrder order, std::vector<double>& out) {
    out.assign(row.begin(), row.end());
    if (order == SortOrder::Ascending)
        std::stable_sort(out.begin(), out.end());
    else
        std::stable_sort(out.begin(), out.end(), std::greater<>{});
}

inline void check_pooling(const PoolingMethod& m, std::size_t n_classes) {
    if (n_classes == 0) throw ParameterError("pooling: empty class axis (K = 0)");
    switch (m.kind) {
        case Pooling::Ema:
            if (!(m.alpha > 0.0 && m.alpha <= 1.0)) throw ParameterError("ema: alpha must lie in (0, 1]");
            break;
        case Pooling::Softmin:
            if (!(m.tau > 0.0) || !std::isfinite(m.tau)) throw ParameterError("softmin: tau must be > 0");
            break;
        case Pooling::Log:
            if (!(m.epsilon > 0.0) || !std::isfinite(m.epsilon)) throw ParameterError("log: epsilon must be > 0");
            break;
        case Pooling::CumAvgBottom:
            if (m.bottom_j < 1 || m.bottom_j > n_classes)
                throw ParameterError("cumavg: J must satisfy 1 <= J <= K (K = " + std::to_string(n_classes) + ")");
            break;
        case Pooling::MeanSma:
            if (m.period < 1 || m.period > n_classes)
                throw ParameterError("sma: P must satisfy 1 <= P <= K (K = " + std::to_string(n_classes) + ")");
            break;
        default: break;
    }
}

/// Pools one example's per-class scores. `scratch` avoids a per-row allocation.
inline double pool_row(std::span<const double> s, const PoolingMethod& m, std::vector<double>& scratch) {
    const std::size_t K = s.size();
    switch (m.kind) {
        case Pooling::Min: return *std::min_element(s.begin(), s.end());
        case Pooling::Max: return *std::max_element(s.begin(), s.end());
        case Pooling::Mean: return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(K);
        case Pooling::Median: {
            sorted_scores(s, SortOrder::Ascending, scratch);
            return K % 2 ? scratch[K / 2] : 0.5 * (scratch[K / 2 - 1] + scratch[K / 2]);
        }
        case Pooling::Ema: {
            sorted_scores(s, SortOrder::Descending, scratch);
            double acc = scratch[0];
            for (std::size_t t = 1; t < K; ++t) acc = m.alpha * scratch[t] + (1.0 - m.alpha) * acc;
            return acc;
        }
        case Pooling::Softmin: {
            // softmax over (1 - s) / tau, shifted by the largest exponent
            double top = -std::numeric_limits<double>::infinity();
            for (double v : s) top = std::max(top, (1.0 - v) / m.tau);
            double num = 0.0, den = 0.0;
            for (double v : s) {
                const double w = std::exp((1.0 - v) / m.tau - top);
                num += v * w;
                den += w;
            }
            return num / den;
        }
        case Pooling::Log: {
            double acc = 0.0;
            for (double v : s) acc += std::log(v + m.epsilon);
            return acc / static_cast<double>(K);
        }
        case Pooling::CumAvgBottom: {
            sorted_scores(s, SortOrder::Ascending, scratch);
            return std::accumulate(scratch.begin(), scratch.begin() + m.bottom_j, 0.0) /
                   static_cast<double>(m.bottom_j);
        }
        case Pooling::WeightedCumAvg: {
            sorted_scores(s, SortOrder::Ascending, scratch);
            double prefix = 0.0, acc = 0.0;
            for (std::size_t j = 1; j <= K; ++j) {
                prefix += scratch[j - 1];
                acc += std::exp(1.0 - static_cast<double>(j)) * prefix / static_cast<double>(j);
            }
            return acc;
        }
        case Pooling::MeanSma: {
            sorted_scores(s, SortOrder::Ascending, scratch);
            const std::size_t P = m.period;
            double acc = 0.0;
            for (std::size_t end = P; end <= K; ++end)
                for (std::size_t k = end - P; k < end; ++k) acc += scratch[k];
            return acc / static_cast<double>(P * (K - P + 1));
        }
    }
    return 0.0;
}

/// Pools every row of S with the given method.
inline QualityScoreVector pool(const PerClassScoreMatrix& S, const PoolingMethod& m) {
    check_pooling(m, S.cols());
    QualityScoreVector out{std::vector<double>(S.rows()), m};
    std::vector<double> scratch;
    scratch.reserve(S.cols());
    for (std::size_t i = 0; i < S.rows(); ++i) out.values[i] = pool_row(S.row(i), m, scratch);
    return out;
}

inline QualityScoreVector pool_min(const PerClassScoreMatrix& S) { return pool(S, PoolingMethod::of(Pooling::Min)); }
inline QualityScoreVector pool_max(const PerClassScoreMatrix& S) { return pool(S, PoolingMethod::of(Pooling::Max)); }
inline QualityScoreVector pool_mean(const PerClassScoreMatrix& S) { return pool(S, PoolingMethod::of(Pooling::Mean)); }
inline QualityScoreVector pool_median(const PerClassScoreMatrix& S) {
    return pool(S, PoolingMethod::of(Pooling::Median));
}
inline QualityScoreVector pool_ema(const PerClassScoreMatrix& S, double alpha = 0.8) {
    return pool(S, PoolingMethod::ema(alpha));
}
inline QualityScoreVector pool_softmin(const PerClassScoreMatrix& S, double tau = 0.1) {
    return pool(S, PoolingMethod::softmin(tau));
}
inline QualityScoreVector pool_log(const PerClassScoreMatrix& S, double epsilon = 1e-8) {
    return pool(S, PoolingMethod::log(epsilon));
}
inline QualityScoreVector pool_cumavg_bottom(const PerClassScoreMatrix& S, std::size_t j = 2) {
    return pool(S, PoolingMethod::cumavg(j));
}
inline QualityScoreVector pool_weighted_cumavg(const PerClassScoreMatrix& S) {
    return pool(S, PoolingMethod::of(Pooling::WeightedCumAvg));
}
inline QualityScoreVector pool_sma(const PerClassScoreMatrix& S, std::size_t p = 2) {
    return pool(S, PoolingMethod::sma(p));
}

/// Weight that the k-th smallest (1-based) per-class score carries in the EMA result.
inline double ema_weight_of_kth_smallest(double alpha, std::size_t k, std::size_t n_classes) {
    if (k == n_classes) return std::pow(1.0 - alpha, static_cast<double>(n_classes - 1));
    return alpha * std::pow(1.0 - alpha, static_cast<double>(k - 1));
}

/// Self-confidence followed by the selected pooler.
inline QualityScoreVector score_examples(const LabelMatrix& labels, const ProbMatrix& probs,
                                         const PoolingMethod& method) {
    require_valid(validate(probs));
    return pool(self_confidence(labels, probs), method);
}

/// Min-max rescaling to [0,1] for display; constant input maps to 0.5.
inline std::vector<double> rescale_minmax(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    if (out.empty()) return out;
    auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    const double a = *lo, b = *hi;
    for (double& x : out) x = b > a ? (x - a) / (b - a) : 0.5;
    return out;
}

}  // namespace mlerr
