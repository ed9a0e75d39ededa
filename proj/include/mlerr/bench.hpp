#pragma once
// Synthetic label-error benchmark: generate -> corrupt -> cross-validated
// logistic regression -> score / flag -> metrics against ground truth.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mlerr/confident.hpp"
#include "mlerr/core_data.hpp"
#include "mlerr/eval.hpp"
#include "mlerr/model.hpp"
#include "mlerr/scoring.hpp"
#include "mlerr/synth.hpp"

namespace mlerr {

enum class MetricKind { Auprc, ApAtT, Spearman, NegSpearman };

struct MetricSpec {
    MetricKind kind = MetricKind::ApAtT;
    std::size_t k = 1;  // minimum wrong annotations for a positive (AP@T only)

    std::string name() const {
        switch (kind) {
            case MetricKind::Auprc: return "auprc";
            case MetricKind::ApAtT: return k == 1 ? "ap_at_t" : "ap" + std::to_string(k) + "_at_t";
            case MetricKind::Spearman: return "spearman";
            case MetricKind::NegSpearman: return "neg_spearman";
        }
        return "?";
    }
};

inline std::vector<MetricSpec> default_metrics() {
    return {{MetricKind::Auprc, 1},    {MetricKind::ApAtT, 1},    {MetricKind::ApAtT, 2},
            {MetricKind::ApAtT, 3},    {MetricKind::Spearman, 0}, {MetricKind::NegSpearman, 0}};
}

inline std::vector<PoolingMethod> default_methods() {
    std::vector<PoolingMethod> m;
    for (auto k : all_poolings) m.push_back(PoolingMethod::of(k));
    return m;
}

/// Method column value: the pooler name, with parameters appended when they differ from defaults.
inline std::string method_label(const PoolingMethod& m) {
    const auto params = pooling_params(m);
    if (params.empty() || params == pooling_params(PoolingMethod::of(m.kind))) return std::string(pooling_name(m.kind));
    return std::string(pooling_name(m.kind)) + "[" + params + "]";
}

struct BenchmarkPlan {
    std::string dataset_name = "small";
    GenConfig gen = GenConfig::small();
    std::size_t replicates = 10;
    std::uint64_t base_seed = 0;  // replicate r uses seed base_seed + r
    std::size_t max_errors = 3;
    LogRegParams logreg;
    std::size_t folds = 5;
    std::vector<PoolingMethod> methods = default_methods();
    std::vector<MetricSpec> metrics = default_metrics();
    std::size_t jobs = 1;

    void check() const {
        if (replicates < 1) throw ParameterError("benchmark: replicates must be >= 1");
        if (methods.empty()) throw ParameterError("benchmark: no pooling methods");
        if (metrics.empty()) throw ParameterError("benchmark: no metrics");
        gen.check();
        logreg.check();
        for (const auto& m : methods) check_pooling(m, gen.n_classes);
        for (const auto& s : metrics)
            if (s.kind == MetricKind::ApAtT && s.k < 1) throw ParameterError("benchmark: AP@T needs k >= 1");
    }
};

struct MetricRow {
    std::string dataset;
    std::uint64_t seed = 0;
    std::string classifier;
    std::string method;
    std::string metric;
    std::size_t param_T = 0;
    std::size_t param_k = 0;
    std::optional<double> value;
};

struct FlagRow {
    std::uint64_t seed = 0;
    FlagAccuracy accuracy;
};

struct ReplicateFailure {
    std::uint64_t seed = 0;
    std::string message;
};

struct Aggregate {
    std::string method;
    std::string metric;
    std::size_t param_k = 0;
    std::size_t n = 0;  // replicates with a defined value
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n - 1)
};

struct BenchmarkReport {
    std::vector<MetricRow> rows;
    std::vector<FlagRow> flags;
    std::vector<ReplicateFailure> failures;
    std::vector<Aggregate> aggregates;
    double wall_seconds = 0.0;
};

/// Everything one replicate produces before metrics: noisy data and out-of-fold probabilities.
struct ReplicateData {
    std::uint64_t seed = 0;
    NoisyDataset data;
    ProbMatrix probs;
};

inline ReplicateData prepare_replicate(const BenchmarkPlan& plan, std::uint64_t seed) {
    const auto seeds = ReplicateSeeds::derive(seed);
    ReplicateData r{seed, make_noisy_dataset(plan.gen, seeds, plan.max_errors), {}};
    r.probs = cross_val_pred_probs(r.data.dataset, CVConfig{plan.folds, seeds.folds, true}, plan.logreg);
    return r;
}

inline MetricRow evaluate_metric(const MetricSpec& spec, std::span<const double> scores, const ErrorTruth& truth) {
    MetricRow row;
    row.metric = spec.name();
    const std::size_t T = truth.n_mislabeled();
    switch (spec.kind) {
        case MetricKind::Auprc:
            row.param_T = scores.size();
            row.param_k = 1;
            if (T > 0) row.value = auprc(scores, truth).value;
            break;
        case MetricKind::ApAtT:
            row.param_T = T;
            row.param_k = spec.k;
            if (T > 0) row.value = ap_at_t(scores, truth, T, spec.k).value;
            break;
        case MetricKind::Spearman:
        case MetricKind::NegSpearman: {
            const auto r = spearman(scores, truth.error_counts);
            if (r.value) row.value = spec.kind == MetricKind::Spearman ? *r.value : -*r.value;
            break;
        }
    }
    return row;
}

struct ReplicateResult {
    std::vector<MetricRow> rows;
    std::optional<FlagRow> flags;
    std::optional<ReplicateFailure> failure;
};

inline ReplicateResult run_replicate(const BenchmarkPlan& plan, std::uint64_t seed) {
    ReplicateResult out;
    try {
        const auto rep = prepare_replicate(plan, seed);
        const auto& ds = rep.data.dataset;
        const auto truth = error_truth(ds.given_labels, *ds.true_labels);
        const auto S = self_confidence(ds.given_labels, rep.probs);
        for (const auto& m : plan.methods) {
            const auto q = pool(S, m);
            for (const auto& spec : plan.metrics) {
                auto row = evaluate_metric(spec, q.values, truth);
                row.dataset = plan.dataset_name;
                row.seed = seed;
                row.classifier = "logreg";
                row.method = method_label(m);
                out.rows.push_back(std::move(row));
            }
        }
        const auto report = flag_multilabel(ds.given_labels, rep.probs);
        out.flags = FlagRow{seed, flag_accuracy(report.example_flags, truth)};
    } catch (const std::exception& e) {
        out.rows.clear();
        out.failure = ReplicateFailure{seed, e.what()};
    }
    return out;
}

/// Mean and sample standard deviation per (method, metric, k), in first-seen order.
inline std::vector<Aggregate> aggregate(std::span<const MetricRow> rows) {
    std::vector<Aggregate> out;
    std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> index;
    std::vector<std::vector<double>> values;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.method, r.metric, r.param_k);
        auto [it, inserted] = index.try_emplace(key, out.size());
        if (inserted) {
            out.push_back({r.method, r.metric, r.param_k});
            values.emplace_back();
        }
        if (r.value) values[it->second].push_back(*r.value);
    }
    for (std::size_t a = 0; a < out.size(); ++a) {
        const auto& v = values[a];
        out[a].n = v.size();
        if (v.empty()) {
            out[a].mean = std::nan("");
            out[a].stddev = std::nan("");
            continue;
        }
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        out[a].mean = mean;
        out[a].stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    return out;
}

/// Runs every replicate (in parallel up to plan.jobs) and assembles rows in replicate order.
inline BenchmarkReport run_benchmark(const BenchmarkPlan& plan) {
    plan.check();
    const auto start = std::chrono::steady_clock::now();
    std::vector<ReplicateResult> results(plan.replicates);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < plan.replicates;) results[r] = run_replicate(plan, plan.base_seed + r);
    };
    const std::size_t n_threads = std::clamp<std::size_t>(plan.jobs, 1, plan.replicates);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    BenchmarkReport report;
    for (auto& r : results) {
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        if (r.flags) report.flags.push_back(*r.flags);
        if (r.failure) report.failures.push_back(*r.failure);
    }
    report.aggregates = aggregate(report.rows);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_value(const std::optional<double>& v) { return v ? detail::format_double(*v) : "NA"; }

inline constexpr std::string_view metric_csv_header = "dataset,seed,classifier,method,metric,param_T,param_k,value";

inline void write_metric_csv(const std::string& path, std::span<const MetricRow> rows) {
    auto out = detail::open_out(path);
    out << metric_csv_header << '\n';
    for (const auto& r : rows)
        out << r.dataset << ',' << r.seed << ',' << r.classifier << ',' << r.method << ',' << r.metric << ','
            << r.param_T << ',' << r.param_k << ',' << format_value(r.value) << '\n';
}

inline std::vector<MetricRow> load_metric_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != metric_csv_header) throw DataError(path + ": expected header '" + std::string(metric_csv_header) + "'");
    std::vector<MetricRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c = detail::split_commas(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (c.size() != 8) throw DataError(where + ": expected 8 fields, found " + std::to_string(c.size()));
        MetricRow r;
        r.dataset = c[0];
        r.seed = static_cast<std::uint64_t>(detail::parse_double(c[1], where + " column 'seed'"));
        r.classifier = c[2];
        r.method = c[3];
        r.metric = c[4];
        r.param_T = static_cast<std::size_t>(detail::parse_double(c[5], where + " column 'param_T'"));
        r.param_k = static_cast<std::size_t>(detail::parse_double(c[6], where + " column 'param_k'"));
        if (c[7] != "NA") r.value = detail::parse_double(c[7], where + " column 'value'");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void write_aggregate_csv(const std::string& path, std::span<const Aggregate> aggs) {
    auto out = detail::open_out(path);
    out << "method,metric,param_k,n,mean,std\n";
    for (const auto& a : aggs)
        out << a.method << ',' << a.metric << ',' << a.param_k << ',' << a.n << ',' << detail::format_double(a.mean)
            << ',' << detail::format_double(a.stddev) << '\n';
}

inline void write_flag_csv(const std::string& path, std::span<const FlagRow> rows) {
    auto out = detail::open_out(path);
    out << "seed,method,precision,recall,n_flagged,n_mislabeled\n";
    for (const auto& r : rows)
        out << r.seed << ",confident_learning," << detail::format_double(r.accuracy.precision) << ','
            << detail::format_double(r.accuracy.recall) << ',' << r.accuracy.n_flagged << ',' << r.accuracy.n_true
            << '\n';
}

/// Methods as rows, metrics as columns, "mean ± sd" cells.
inline std::string render_aggregate_text(std::span<const Aggregate> aggs) {
    std::vector<std::string> methods, metrics;
    std::map<std::pair<std::string, std::string>, const Aggregate*> cell;
    for (const auto& a : aggs) {
        if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) methods.push_back(a.method);
        if (std::find(metrics.begin(), metrics.end(), a.metric) == metrics.end()) metrics.push_back(a.metric);
        cell[{a.method, a.metric}] = &a;
    }
    auto fmt = [](const Aggregate* a) -> std::string {
        if (!a || a->n == 0) return "NA";
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << a->mean << " ± " << std::setprecision(4) << a->stddev;
        return s.str();
    };
    std::size_t w0 = std::string_view("method").size();
    for (const auto& m : methods) w0 = std::max(w0, m.size());
    std::vector<std::size_t> widths;
    for (const auto& metric : metrics) {
        std::size_t w = metric.size();
        for (const auto& m : methods) w = std::max(w, fmt(cell[{m, metric}]).size() - 1);  // '±' is 2 bytes
        widths.push_back(w);
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(w0)) << "method";
    for (std::size_t c = 0; c < metrics.size(); ++c) out << "  " << std::setw(static_cast<int>(widths[c])) << metrics[c];
    out << '\n';
    for (const auto& m : methods) {
        out << std::left << std::setw(static_cast<int>(w0)) << m;
        for (std::size_t c = 0; c < metrics.size(); ++c) {
            const auto s = fmt(cell[{m, metrics[c]}]);
            const bool wide = s.find("±") != std::string::npos;
            out << "  " << std::setw(static_cast<int>(widths[c] + (wide ? 1 : 0))) << s;
        }
        out << '\n';
    }
    return out.str();
}

/// metrics.csv, aggregate.csv, aggregate.txt, flag_metrics.csv and metadata.json under `dir`.
/// Only metadata.json carries run-dependent content (timestamp, wall time).
inline void write_benchmark_outputs(const std::string& dir, const BenchmarkPlan& plan, const BenchmarkReport& report) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_metric_csv((base / "metrics.csv").string(), report.rows);
    write_aggregate_csv((base / "aggregate.csv").string(), report.aggregates);
    write_flag_csv((base / "flag_metrics.csv").string(), report.flags);
    detail::open_out((base / "aggregate.txt").string()) << render_aggregate_text(report.aggregates);

    nlohmann::json meta;
    meta["dataset"] = plan.dataset_name;
    meta["n_samples"] = plan.gen.n_samples;
    meta["n_features"] = plan.gen.n_features;
    meta["n_classes"] = plan.gen.n_classes;
    meta["expected_labels"] = plan.gen.expected_labels;
    meta["replicates"] = plan.replicates;
    std::vector<std::uint64_t> seeds;
    for (std::size_t r = 0; r < plan.replicates; ++r) seeds.push_back(plan.base_seed + r);
    meta["seeds"] = seeds;
    meta["classifier"] = {{"name", "logreg"},
                          {"learning_rate", plan.logreg.learning_rate},
                          {"l2", plan.logreg.l2},
                          {"epochs", plan.logreg.epochs},
                          {"folds", plan.folds}};
    auto& fails = meta["failures"] = nlohmann::json::array();
    for (const auto& f : report.failures) fails.push_back({{"seed", f.seed}, {"error", f.message}});
    meta["wall_seconds"] = report.wall_seconds;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta["timestamp"] = stamp;
    detail::open_out((base / "metadata.json").string()) << meta.dump(2) << '\n';
}

}  // namespace mlerr
