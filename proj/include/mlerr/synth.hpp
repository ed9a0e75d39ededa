#pragma once
// Synthetic multi-label bag-of-words datasets and class-conditional label noise.
//
// Generator: per-class word distributions ~ Dirichlet(1,...,1) over D words;
// per example a Poisson label count (redrawn while > K), that many distinct
// classes chosen uniformly, a Poisson document length, and words drawn from
// the uniform mixture of the chosen classes (uniform over D if unlabeled).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlerr/core_data.hpp"
#include "mlerr/matrix.hpp"

namespace mlerr {

struct GenConfig {
    std::size_t n_samples = 5000;
    std::size_t n_test = 1000;
    std::size_t n_features = 3;
    std::size_t n_classes = 4;
    double expected_labels = 2.0;
    double expected_doc_length = 500.0;
    std::uint64_t seed = 0;

    static GenConfig small(std::uint64_t seed = 0) { return {5000, 1000, 3, 4, 2.0, 500.0, seed}; }
    static GenConfig large(std::uint64_t seed = 0) { return {30000, 7500, 20, 50, 5.0, 500.0, seed}; }

    void check() const {
        if (n_samples == 0 || n_features == 0 || n_classes == 0)
            throw ParameterError("GenConfig: n_samples, n_features and n_classes must be positive");
        if (!(expected_labels > 0.0) || expected_labels > static_cast<double>(n_classes))
            throw ParameterError("GenConfig: expected_labels must lie in (0, K]");
        if (!(expected_doc_length > 0.0)) throw ParameterError("GenConfig: expected_doc_length must be positive");
    }
};

struct GeneratedSplit {
    MultiLabelDataset train;
    MultiLabelDataset test;
};

namespace detail {

inline std::vector<MultiLabelDataset> generate_parts(const GenConfig& cfg, std::initializer_list<std::size_t> sizes) {
    cfg.check();
    std::mt19937_64 rng(cfg.seed);
    const std::size_t K = cfg.n_classes, D = cfg.n_features;

    std::gamma_distribution<double> unit_gamma(1.0, 1.0);
    std::vector<std::discrete_distribution<std::size_t>> word_dist;
    word_dist.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> w(D);
        for (auto& x : w) x = unit_gamma(rng);
        word_dist.emplace_back(w.begin(), w.end());
    }

    std::poisson_distribution<std::size_t> label_count(cfg.expected_labels);
    std::poisson_distribution<std::size_t> doc_length(cfg.expected_doc_length);
    std::uniform_int_distribution<std::size_t> any_word(0, D - 1);
    std::vector<std::size_t> classes(K);

    std::vector<MultiLabelDataset> parts;
    std::size_t next_id = 0;
    for (std::size_t n : sizes) {
        MultiLabelDataset ds;
        ds.given_labels = LabelMatrix(n, K, 0);
        FeatureMatrix feats(n, D, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t m;
            do m = label_count(rng);
            while (m > K);
            std::iota(classes.begin(), classes.end(), std::size_t{0});
            for (std::size_t j = 0; j < m; ++j) {
                std::uniform_int_distribution<std::size_t> pick(j, K - 1);
                std::swap(classes[j], classes[pick(rng)]);
                ds.given_labels(i, classes[j]) = 1;
            }
            const std::size_t len = doc_length(rng);
            if (m == 0) {
                for (std::size_t w = 0; w < len; ++w) feats(i, any_word(rng)) += 1.0;
            } else {
                std::uniform_int_distribution<std::size_t> which(0, m - 1);
                for (std::size_t w = 0; w < len; ++w) feats(i, word_dist[classes[which(rng)]](rng)) += 1.0;
            }
        }
        ds.true_labels = ds.given_labels;
        ds.features = std::move(feats);
        for (std::size_t i = 0; i < n; ++i) ds.example_ids.push_back(std::to_string(next_id++));
        parts.push_back(std::move(ds));
    }
    return parts;
}

}  // namespace detail

/// Clean dataset (given == true labels) with bag-of-words features. Deterministic in cfg.seed.
inline MultiLabelDataset gen_multilabel(const GenConfig& cfg) {
    return std::move(detail::generate_parts(cfg, {cfg.n_samples}).front());
}

/// Training set identical to gen_multilabel(cfg) plus n_test further examples from the same distribution.
inline GeneratedSplit gen_multilabel_split(const GenConfig& cfg) {
    auto parts = detail::generate_parts(cfg, {cfg.n_samples, cfg.n_test});
    return {std::move(parts[0]), std::move(parts[1])};
}

// ---------------------------------------------------------------------------
// Noise

/// Trace of the 2×2 noise matrix for a class whose gamma draw is `x` and whose
/// 1-based ascending rank among the K draws is `rank`.
inline double noise_trace(double x, std::size_t rank, std::size_t n_classes) {
    const double K = static_cast<double>(n_classes);
    const double r = static_cast<double>(rank) - 1.0;
    const double xc = std::clamp(x, 0.0, 1.0);
    const double y = (1.0 - xc) * (1.0 - std::exp(-r * r / K) / (2.0 * K));
    return std::max(2.0 * y, 2.0 - 2.0 * y);
}

inline std::vector<double> sample_noise_traces(std::size_t n_classes, double shape, double scale, std::mt19937_64& rng) {
    if (n_classes == 0) throw ParameterError("sample_noise_traces: K must be >= 1");
    if (!(shape > 0.0) || !(scale > 0.0)) throw ParameterError("sample_noise_traces: gamma shape and scale must be > 0");
    std::gamma_distribution<double> gamma(shape, scale);
    std::vector<double> x(n_classes);
    for (auto& v : x) v = gamma(rng);
    std::vector<std::size_t> order(n_classes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> traces(n_classes);
    for (std::size_t pos = 0; pos < n_classes; ++pos) traces[order[pos]] = noise_trace(x[order[pos]], pos + 1, n_classes);
    return traces;
}

inline std::vector<double> sample_noise_traces(std::size_t n_classes, double shape, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_noise_traces(n_classes, shape, scale, rng);
}

using NoiseMatrix = std::array<std::array<double, 2>, 2>;

/// Symmetric split: both diagonal entries T/2.
inline NoiseMatrix build_noise_matrix(double trace) {
    if (!(trace > 0.0 && trace <= 2.0)) throw ParameterError("build_noise_matrix: trace must lie in (0, 2]");
    const double d = trace / 2.0;
    return {{{d, 1.0 - d}, {1.0 - d, d}}};
}

/// Random split of the trace between the two diagonal entries, both kept within [0,1].
inline NoiseMatrix build_noise_matrix_asymmetric(double trace, std::mt19937_64& rng) {
    if (!(trace > 0.0 && trace <= 2.0)) throw ParameterError("build_noise_matrix: trace must lie in (0, 2]");
    std::uniform_real_distribution<double> u(std::max(0.0, trace - 1.0), std::min(1.0, trace));
    const double d0 = u(rng);
    const double d1 = trace - d0;
    return {{{d0, 1.0 - d0}, {1.0 - d1, d1}}};
}

struct NoiseSpec {
    double gamma_shape = 2.0;
    double gamma_scale = 0.01;
    std::size_t max_errors_per_example = 3;
    std::uint64_t seed = 0;
    bool asymmetric = false;
    std::vector<double> traces;
    std::vector<NoiseMatrix> matrices;
};

/// Samples traces and builds the per-class matrices for K classes.
inline NoiseSpec make_noise_spec(std::size_t n_classes, std::uint64_t seed, double shape = 2.0, double scale = 0.01,
                                 std::size_t max_errors = 3, bool asymmetric = false) {
    NoiseSpec spec{shape, scale, max_errors, seed, asymmetric, {}, {}};
    std::mt19937_64 rng(seed);
    spec.traces = sample_noise_traces(n_classes, shape, scale, rng);
    for (double t : spec.traces)
        spec.matrices.push_back(asymmetric ? build_noise_matrix_asymmetric(t, rng) : build_noise_matrix(t));
    return spec;
}

/// Flips b_ik with probability matrices[k][b_ik][1 - b_ik]; if more than `max_errors`
/// classes of one example flip, a uniform subset of exactly `max_errors` is kept.
inline LabelMatrix inject_noise(const LabelMatrix& truth, std::span<const NoiseMatrix> matrices,
                                std::size_t max_errors, std::uint64_t seed) {
    if (matrices.size() != truth.cols())
        throw DataError("inject_noise: " + std::to_string(matrices.size()) + " matrices for " +
                        std::to_string(truth.cols()) + " classes");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabelMatrix noisy = truth;
    std::vector<std::size_t> flips;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        flips.clear();
        for (std::size_t k = 0; k < truth.cols(); ++k) {
            const std::uint8_t b = truth(i, k);
            if (u(rng) < matrices[k][b][1 - b]) flips.push_back(k);
        }
        if (flips.size() > max_errors) {
            for (std::size_t j = 0; j < max_errors; ++j) {
                std::uniform_int_distribution<std::size_t> pick(j, flips.size() - 1);
                std::swap(flips[j], flips[pick(rng)]);
            }
            flips.resize(max_errors);
        }
        for (std::size_t k : flips) noisy(i, k) ^= 1;
    }
    return noisy;
}

inline LabelMatrix inject_noise(const LabelMatrix& truth, const NoiseSpec& spec, std::uint64_t seed) {
    return inject_noise(truth, spec.matrices, spec.max_errors_per_example, seed);
}

inline nlohmann::json noise_spec_json(const NoiseSpec& spec) {
    nlohmann::json j;
    j["gamma_shape"] = spec.gamma_shape;
    j["gamma_scale"] = spec.gamma_scale;
    j["max_errors_per_example"] = spec.max_errors_per_example;
    j["seed"] = spec.seed;
    j["asymmetric"] = spec.asymmetric;
    j["traces"] = spec.traces;
    auto& mats = j["matrices"] = nlohmann::json::array();
    for (const auto& m : spec.matrices) mats.push_back({{m[0][0], m[0][1]}, {m[1][0], m[1][1]}});
    return j;
}

/// Seeds for the independent random streams of one benchmark replicate.
struct ReplicateSeeds {
    std::uint64_t data, noise, flips, folds;

    static ReplicateSeeds derive(std::uint64_t base) {
        std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32)};
        std::array<std::uint32_t, 8> w{};
        seq.generate(w.begin(), w.end());
        auto join = [&](int a) { return (std::uint64_t{w[a]} << 32) | w[a + 1]; };
        return {join(0), join(2), join(4), join(6)};
    }
};

/// A generated dataset with noise injected into the given labels.
struct NoisyDataset {
    MultiLabelDataset dataset;  // given = noisy, true_labels = clean
    NoiseSpec noise;
};

inline NoisyDataset make_noisy_dataset(const GenConfig& cfg, const ReplicateSeeds& seeds, std::size_t max_errors = 3) {
    GenConfig c = cfg;
    c.seed = seeds.data;
    NoisyDataset out{gen_multilabel(c), make_noise_spec(cfg.n_classes, seeds.noise, 2.0, 0.01, max_errors)};
    out.dataset.given_labels = inject_noise(*out.dataset.true_labels, out.noise, seeds.flips);
    return out;
}

}  // namespace mlerr
