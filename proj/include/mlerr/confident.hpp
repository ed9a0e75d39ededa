#pragma once
// Confident Learning applied one class at a time to the binary present/absent
// labels, with the union of per-class flags as the multi-label error set.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlerr/core_data.hpp"
#include "mlerr/matrix.hpp"

namespace mlerr {

/// Per-class thresholds: mean p over given positives, mean (1 - p) over given negatives.
struct ClassThresholds {
    double t_pos = 0.0;
    double t_neg = 0.0;
};

/// counts[g][t]: examples with given binary label g confidently estimated as true label t.
struct BinaryConfidentJoint {
    std::size_t class_index = 0;
    std::array<std::array<std::size_t, 2>, 2> counts{};
    ClassThresholds thresholds;

    std::size_t total() const noexcept { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
    std::size_t off_diagonal() const noexcept { return counts[0][1] + counts[1][0]; }
};

using NoiseMatrix2 = std::array<std::array<double, 2>, 2>;

enum class SkipReason { NoPositives, NoNegatives };

struct ClassSkip {
    std::size_t class_index;
    SkipReason reason;
};

struct FlagReport {
    Matrix<std::uint8_t> per_class_flags;  // N×K, 1 = annotation of class k estimated wrong
    std::vector<bool> example_flags;       // union over classes
    std::vector<std::size_t> per_class_error_counts;
    std::vector<NoiseMatrix2> estimated_noise_rates;  // rows: given label, cols: estimated true label
    std::vector<BinaryConfidentJoint> joints;         // only for classes that were not skipped
    std::vector<ClassSkip> skipped;

    std::size_t n_flagged() const noexcept {
        std::size_t n = 0;
        for (bool f : example_flags) n += f;
        return n;
    }
};

/// Thresholds for class k, or nullopt when one side has no examples.
inline std::optional<ClassThresholds> class_thresholds(const LabelMatrix& labels, const ProbMatrix& probs,
                                                       std::size_t k, SkipReason* why = nullptr) {
    if (!labels.same_shape(probs)) throw DataError("class_thresholds: shape mismatch");
    if (k >= labels.cols()) throw ParameterError("class_thresholds: class index out of range");
    double sum_pos = 0.0, sum_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        if (labels(i, k)) {
            sum_pos += probs(i, k);
            ++n_pos;
        } else {
            sum_neg += 1.0 - probs(i, k);
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0) {
        if (why) *why = n_pos == 0 ? SkipReason::NoPositives : SkipReason::NoNegatives;
        return std::nullopt;
    }
    return ClassThresholds{sum_pos / static_cast<double>(n_pos), sum_neg / static_cast<double>(n_neg)};
}

/// Confident true label for one binary annotation, or -1 when neither side clears its threshold.
inline int confident_label(std::uint8_t given, double p, const ClassThresholds& t) noexcept {
    const bool pos = p >= t.t_pos;
    const bool neg = 1.0 - p >= t.t_neg;
    if (pos && neg) {
        if (p > 1.0 - p) return 1;
        if (p < 1.0 - p) return 0;
        return given;
    }
    if (pos) return 1;
    if (neg) return 0;
    return -1;
}

inline BinaryConfidentJoint binary_confident_joint(const LabelMatrix& labels, const ProbMatrix& probs, std::size_t k,
                                                   const ClassThresholds& thresholds) {
    if (!labels.same_shape(probs)) throw DataError("binary_confident_joint: shape mismatch");
    BinaryConfidentJoint joint{k, {}, thresholds};
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const int t = confident_label(labels(i, k), probs(i, k), thresholds);
        if (t >= 0) ++joint.counts[labels(i, k)][static_cast<std::size_t>(t)];
    }
    return joint;
}

/// Examples whose class-k annotation lands in an off-diagonal confident-joint cell.
/// A skipped class yields an all-false vector and fills `skip`.
inline std::vector<bool> flag_class(const LabelMatrix& labels, const ProbMatrix& probs, std::size_t k,
                                    std::optional<ClassSkip>* skip = nullptr) {
    std::vector<bool> flags(labels.rows(), false);
    SkipReason why{};
    const auto t = class_thresholds(labels, probs, k, &why);
    if (!t) {
        if (skip) *skip = ClassSkip{k, why};
        return flags;
    }
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const int c = confident_label(labels(i, k), probs(i, k), *t);
        flags[i] = c >= 0 && c != labels(i, k);
    }
    return flags;
}

/// Calibrates the joint so row g sums to the number of given-g examples, then row-normalizes.
/// A row with no confident counts is reported as the identity row.
inline NoiseMatrix2 estimate_noise_matrix(const BinaryConfidentJoint& joint, std::array<std::size_t, 2> given_counts) {
    NoiseMatrix2 m{};
    for (std::size_t g = 0; g < 2; ++g) {
        const double row = static_cast<double>(joint.counts[g][0] + joint.counts[g][1]);
        if (row == 0.0) {
            m[g][g] = 1.0;
            continue;
        }
        const double scale = static_cast<double>(given_counts[g]) / row;
        const double c0 = joint.counts[g][0] * scale, c1 = joint.counts[g][1] * scale;
        m[g][0] = c0 / (c0 + c1);
        m[g][1] = c1 / (c0 + c1);
    }
    return m;
}

inline FlagReport flag_multilabel(const LabelMatrix& labels, const ProbMatrix& probs) {
    if (!labels.same_shape(probs)) throw DataError("flag_multilabel: shape mismatch between labels and probs");
    require_valid(validate(probs));
    const std::size_t n = labels.rows(), K = labels.cols();
    FlagReport report;
    report.per_class_flags = Matrix<std::uint8_t>(n, K, 0);
    report.example_flags.assign(n, false);
    report.per_class_error_counts.assign(K, 0);
    report.estimated_noise_rates.assign(K, NoiseMatrix2{{{1.0, 0.0}, {0.0, 1.0}}});

    for (std::size_t k = 0; k < K; ++k) {
        SkipReason why{};
        const auto t = class_thresholds(labels, probs, k, &why);
        if (!t) {
            report.skipped.push_back({k, why});
            continue;
        }
        auto joint = binary_confident_joint(labels, probs, k, *t);
        std::array<std::size_t, 2> given{};
        for (std::size_t i = 0; i < n; ++i) {
            ++given[labels(i, k)];
            const int c = confident_label(labels(i, k), probs(i, k), *t);
            if (c >= 0 && c != labels(i, k)) {
                report.per_class_flags(i, k) = 1;
                report.example_flags[i] = true;
            }
        }
        report.per_class_error_counts[k] = joint.off_diagonal();
        report.estimated_noise_rates[k] = estimate_noise_matrix(joint, given);
        report.joints.push_back(joint);
    }
    return report;
}

/// `id,flagged,classes_flagged` with classes as a ';'-separated index list.
inline void save_flags_csv(const std::string& path, std::span<const std::string> ids, const FlagReport& report) {
    if (ids.size() != report.example_flags.size()) throw DataError("save_flags_csv: id count mismatch");
    auto out = detail::open_out(path);
    out << "id,flagged,classes_flagged\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        detail::check_id(ids[i]);
        out << ids[i] << ',' << (report.example_flags[i] ? 1 : 0) << ',';
        bool first = true;
        for (std::size_t k = 0; k < report.per_class_flags.cols(); ++k)
            if (report.per_class_flags(i, k)) {
                if (!first) out << ';';
                out << k;
                first = false;
            }
        out << '\n';
    }
}

inline nlohmann::json flag_summary_json(const FlagReport& report) {
    nlohmann::json j;
    j["n_examples"] = report.example_flags.size();
    j["n_flagged"] = report.n_flagged();
    j["per_class_error_counts"] = report.per_class_error_counts;
    auto& noise = j["estimated_noise_rates"] = nlohmann::json::array();
    for (const auto& m : report.estimated_noise_rates)
        noise.push_back({{m[0][0], m[0][1]}, {m[1][0], m[1][1]}});
    auto& sk = j["skipped_classes"] = nlohmann::json::array();
    for (const auto& s : report.skipped)
        sk.push_back({{"class", s.class_index},
                      {"reason", s.reason == SkipReason::NoPositives ? "no_positives" : "no_negatives"}});
    return j;
}

}  // namespace mlerr
