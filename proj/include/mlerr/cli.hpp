#pragma once
// Command-line front end. Each subcommand wraps one library operation.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant violation.
// MLERR_OUT_DIR sets the default output directory for `gen` and `bench`.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlerr/bench.hpp"
#include "mlerr/confident.hpp"
#include "mlerr/core_data.hpp"
#include "mlerr/model.hpp"
#include "mlerr/scoring.hpp"
#include "mlerr/synth.hpp"

namespace mlerr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

inline std::string default_out_dir() {
    if (const char* env = std::getenv("MLERR_OUT_DIR"); env && *env) return env;
    return ".";
}

struct InputFiles {
    std::string labels;
    std::string probs;
    std::string format = "csv";
};

/// Loads labels + probabilities, checks id alignment and validity.
inline std::pair<MultiLabelDataset, ProbMatrix> load_inputs(const InputFiles& in) {
    const Format fmt = in.format == "jsonl" ? Format::JsonLines : Format::Csv;
    MultiLabelDataset ds;
    ProbTable probs;
    if (fmt == Format::JsonLines) {
        auto data = load_jsonl(in.labels);
        ds = std::move(data.dataset);
        if (!in.probs.empty())
            probs = load_probs(in.probs);
        else if (data.probs)
            probs = std::move(*data.probs);
        else
            throw DataError(in.labels + ": no 'probs' field and no --probs file given");
    } else {
        if (in.probs.empty()) throw ParameterError("--probs is required for CSV input");
        ds = load_dataset(in.labels);
        probs = load_probs(in.probs);
    }
    require_aligned(ds.example_ids, probs.ids, "labels vs probs");
    require_valid(validate(ds, probs.values));
    return {std::move(ds), std::move(probs.values)};
}

inline GenConfig preset_config(const std::string& preset, bool allow_large, std::uint64_t seed) {
    if (preset == "small") return GenConfig::small(seed);
    if (preset == "large") {
        if (!allow_large) throw ParameterError("the large preset is slow; pass --allow-large to run it");
        return GenConfig::large(seed);
    }
    if (preset == "custom") return GenConfig{1000, 0, 3, 4, 2.0, 500.0, seed};
    throw ParameterError("unknown preset '" + preset + "' (expected small|large|custom)");
}

/// Runs the CLI in-process; returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Detect mislabeled examples in multi-label classification data"};
    app.require_subcommand(1);

    // score
    InputFiles score_in;
    std::string score_out, method_name = "ema";
    PoolingMethod method;
    bool rescale = false;
    auto* score = app.add_subcommand("score", "Pooled label-quality score per example (lower = more suspect)");
    score->add_option("--labels", score_in.labels, "Labels CSV (or JSON lines)")->required();
    score->add_option("--probs", score_in.probs, "Predicted probabilities CSV");
    score->add_option("--format", score_in.format, "Input format")->check(CLI::IsMember({"csv", "jsonl"}));
    score->add_option("--method", method_name, "min|max|mean|median|ema|softmin|log|cumavg|weighted_cumavg|sma");
    score->add_option("--alpha", method.alpha, "EMA forgetting factor");
    score->add_option("--tau", method.tau, "Softmin temperature");
    score->add_option("--epsilon", method.epsilon, "Log-transform floor");
    score->add_option("--J", method.bottom_j, "Bottom-J for cumavg");
    score->add_option("--P", method.period, "SMA period");
    score->add_flag("--rescale", rescale, "Min-max rescale scores to [0,1] in the output");
    score->add_option("--out", score_out, "Output scores CSV")->required();

    // flag
    InputFiles flag_in;
    std::string flag_out, flag_summary;
    auto* flag = app.add_subcommand("flag", "Flag examples with an estimated annotation error");
    flag->add_option("--labels", flag_in.labels, "Labels CSV (or JSON lines)")->required();
    flag->add_option("--probs", flag_in.probs, "Predicted probabilities CSV");
    flag->add_option("--format", flag_in.format, "Input format")->check(CLI::IsMember({"csv", "jsonl"}));
    flag->add_option("--out", flag_out, "Output flags CSV (id,flagged,classes_flagged)")->required();
    flag->add_option("--summary", flag_summary, "Optional JSON summary (counts, noise matrices, skips)");

    // gen
    std::string gen_preset = "small", gen_dir = default_out_dir();
    std::uint64_t gen_seed = 0;
    bool gen_allow_large = false, gen_asym = false;
    std::size_t gen_max_errors = 3;
    GenConfig custom{1000, 0, 3, 4, 2.0, 500.0, 0};
    auto* gen = app.add_subcommand("gen", "Generate a noisy synthetic dataset");
    gen->add_option("--preset", gen_preset, "small|large|custom");
    gen->add_option("--seed", gen_seed, "Seed for data, noise and flips");
    gen->add_option("--out-dir", gen_dir, "Output directory");
    gen->add_flag("--allow-large", gen_allow_large, "Permit the large preset");
    gen->add_option("--max-errors", gen_max_errors, "Maximum wrong annotations per example");
    gen->add_flag("--asymmetric", gen_asym, "Random asymmetric split of each noise-matrix trace");
    gen->add_option("--n-samples", custom.n_samples, "custom preset: examples");
    gen->add_option("--n-features", custom.n_features, "custom preset: vocabulary size");
    gen->add_option("--n-classes", custom.n_classes, "custom preset: classes");
    gen->add_option("--expected-labels", custom.expected_labels, "custom preset: mean labels per example");
    gen->add_option("--doc-length", custom.expected_doc_length, "custom preset: mean words per document");

    // train-predict
    std::string tp_labels, tp_features, tp_out;
    LogRegParams tp_params;
    CVConfig tp_cv;
    auto* tp = app.add_subcommand("train-predict", "Cross-validated logistic regression probabilities");
    tp->add_option("--labels", tp_labels, "Labels CSV")->required();
    tp->add_option("--features", tp_features, "Features CSV")->required();
    tp->add_option("--out", tp_out, "Output probabilities CSV")->required();
    tp->add_option("--folds", tp_cv.n_folds, "Number of folds");
    tp->add_option("--lr", tp_params.learning_rate, "Learning rate");
    tp->add_option("--l2", tp_params.l2, "L2 strength");
    tp->add_option("--epochs", tp_params.epochs, "Epochs");
    tp->add_option("--seed", tp_cv.seed, "Fold shuffle seed");

    // report
    std::string report_metrics, report_out;
    auto* report = app.add_subcommand("report", "Aggregate a long-format metric CSV");
    report->add_option("--metrics", report_metrics, "metrics.csv from `bench`")->required();
    report->add_option("--out", report_out, "Optional aggregate CSV");

    // bench
    BenchmarkPlan plan;
    std::string bench_preset = "small", bench_dir = default_out_dir();
    std::vector<std::string> bench_methods;
    bool bench_allow_large = false;
    auto* bench = app.add_subcommand("bench", "Run the synthetic benchmark");
    bench->add_option("--preset", bench_preset, "small|large");
    bench->add_flag("--allow-large", bench_allow_large, "Permit the large preset");
    bench->add_option("--replicates", plan.replicates, "Number of datasets");
    bench->add_option("--seed", plan.base_seed, "Seed of the first replicate");
    bench->add_option("--jobs", plan.jobs, "Replicates run in parallel");
    bench->add_option("--methods", bench_methods, "Subset of pooling methods");
    bench->add_option("--epochs", plan.logreg.epochs, "Logistic regression epochs");
    bench->add_option("--lr", plan.logreg.learning_rate, "Learning rate");
    bench->add_option("--l2", plan.logreg.l2, "L2 strength");
    bench->add_option("--folds", plan.folds, "Cross-validation folds");
    bench->add_option("--out-dir", bench_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (score->parsed()) {
            auto [ds, probs] = load_inputs(score_in);
            method.kind = parse_pooling(method_name);
            const auto q = score_examples(ds.given_labels, probs, method);
            save_scores(score_out, ds.example_ids, rescale ? rescale_minmax(q.values) : q.values);
            out << "wrote " << q.values.size() << " scores (" << method_label(method) << ") to " << score_out << '\n';
        } else if (flag->parsed()) {
            auto [ds, probs] = load_inputs(flag_in);
            const auto rep = flag_multilabel(ds.given_labels, probs);
            save_flags_csv(flag_out, ds.example_ids, rep);
            if (!flag_summary.empty()) detail::open_out(flag_summary) << flag_summary_json(rep).dump(2) << '\n';
            out << "flagged " << rep.n_flagged() << " of " << ds.n_examples() << " examples";
            if (!rep.skipped.empty()) out << " (" << rep.skipped.size() << " classes skipped)";
            out << '\n';
        } else if (gen->parsed()) {
            GenConfig cfg = gen_preset == "custom" ? custom : preset_config(gen_preset, gen_allow_large, gen_seed);
            const auto seeds = ReplicateSeeds::derive(gen_seed);
            cfg.seed = seeds.data;
            auto ds = gen_multilabel(cfg);
            const auto spec = make_noise_spec(cfg.n_classes, seeds.noise, 2.0, 0.01, gen_max_errors, gen_asym);
            ds.given_labels = inject_noise(*ds.true_labels, spec, seeds.flips);
            std::filesystem::create_directories(gen_dir);
            const std::filesystem::path dir(gen_dir);
            save_dataset((dir / "labels.csv").string(), ds);
            write_labels_csv((dir / "truth.csv").string(), ds.example_ids, *ds.true_labels);
            save_features((dir / "features.csv").string(), ds.example_ids, *ds.features);
            auto j = noise_spec_json(spec);
            j["generator_seed"] = gen_seed;
            j["preset"] = gen_preset;
            detail::open_out((dir / "noise_spec.json").string()) << j.dump(2) << '\n';
            out << "wrote labels.csv, truth.csv, features.csv, noise_spec.json to " << gen_dir << '\n';
        } else if (tp->parsed()) {
            auto ds = load_dataset(tp_labels);
            std::vector<std::string> fids;
            ds.features = load_features(tp_features, &fids);
            require_aligned(ds.example_ids, fids, "labels vs features");
            require_valid(validate(ds));
            const auto probs = cross_val_pred_probs(ds, tp_cv, tp_params);
            require_valid(validate(ds, probs));
            save_probs(tp_out, ds.example_ids, probs);
            out << "wrote " << probs.rows() << "x" << probs.cols() << " probabilities to " << tp_out << '\n';
        } else if (report->parsed()) {
            const auto rows = load_metric_csv(report_metrics);
            const auto aggs = aggregate(rows);
            out << render_aggregate_text(aggs);
            if (!report_out.empty()) write_aggregate_csv(report_out, aggs);
        } else if (bench->parsed()) {
            plan.gen = preset_config(bench_preset, bench_allow_large, 0);
            plan.dataset_name = bench_preset;
            if (!bench_methods.empty()) {
                plan.methods.clear();
                for (const auto& m : bench_methods) plan.methods.push_back(PoolingMethod::of(parse_pooling(m)));
            }
            const auto rep = run_benchmark(plan);
            write_benchmark_outputs(bench_dir, plan, rep);
            out << render_aggregate_text(rep.aggregates);
            out << "wrote metrics.csv, aggregate.csv, aggregate.txt, flag_metrics.csv, metadata.json to " << bench_dir
                << " (" << rep.failures.size() << " failed replicates)\n";
            if (!rep.failures.empty()) return kData;
        }
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const TrainingError& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}

}  // namespace mlerr::cli
