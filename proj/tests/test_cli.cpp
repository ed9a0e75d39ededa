#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "mlerr/cli.hpp"
#include "test_util.hpp"

using namespace mlerr;
using testutil::TempDir;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mlerr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(MLERR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_pair(const TempDir& dir) {
    testutil::write_text(dir.file("labels.csv"), "id,label_0,label_1\na,1,0\nb,0,1\nc,1,1\nd,0,0\n");
    testutil::write_text(dir.file("probs.csv"),
                         "id,prob_0,prob_1\na,0.9,0.2\nb,0.1,0.8\nc,0.7,0.05\nd,0.3,0.1\n");
}

}  // namespace

TEST(Cli, ScoreWritesOneRowPerExample) {
    TempDir dir("cli");
    write_pair(dir);
    auto r = run_cli({"score", "--labels", dir.file("labels.csv"), "--probs", dir.file("probs.csv"), "--method", "min",
                      "--out", dir.file("s.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> ids;
    auto s = load_scores(dir.file("s.csv"), &ids);
    EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c", "d"}));
    EXPECT_NEAR(s[0], 0.8, 1e-15);
    EXPECT_NEAR(s[2], 0.05, 1e-15);
}

TEST(Cli, ScoreParametersReachThePooler) {
    TempDir dir("cli");
    write_pair(dir);
    auto r = run_cli({"score", "--labels", dir.file("labels.csv"), "--probs", dir.file("probs.csv"), "--method", "ema",
                      "--alpha", "0.5", "--out", dir.file("s.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto s = load_scores(dir.file("s.csv"));
    // example c: self-confidences 0.7 and 0.05
    EXPECT_NEAR(s[2], 0.5 * 0.05 + 0.5 * 0.7, 1e-15);
}

TEST(Cli, FlagWritesCsvAndSummary) {
    TempDir dir("cli");
    write_pair(dir);
    auto r = run_cli({"flag", "--labels", dir.file("labels.csv"), "--probs", dir.file("probs.csv"), "--out",
                      dir.file("f.csv"), "--summary", dir.file("f.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = testutil::read_text(dir.file("f.csv"));
    EXPECT_EQ(text.substr(0, text.find('\n')), "id,flagged,classes_flagged");
    // c claims class 1 with p = 0.05
    EXPECT_NE(text.find("c,1,1"), std::string::npos) << text;
    auto j = nlohmann::json::parse(testutil::read_text(dir.file("f.json")));
    EXPECT_TRUE(j.contains("estimated_noise_rates"));
}

TEST(Cli, JsonLinesInput) {
    TempDir dir("cli");
    testutil::write_text(dir.file("d.jsonl"),
                         "{\"id\":\"a\",\"labels\":[1,0],\"probs\":[0.9,0.2]}\n"
                         "{\"id\":\"b\",\"labels\":[0,1],\"probs\":[0.1,0.8]}\n");
    auto r = run_cli({"score", "--format", "jsonl", "--labels", dir.file("d.jsonl"), "--method", "mean", "--out",
                      dir.file("s.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(load_scores(dir.file("s.csv"))[0], 0.85, 1e-15);
}

TEST(Cli, ExitCodes) {
    TempDir dir("cli");
    write_pair(dir);
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"score", "--labels", dir.file("labels.csv")}).code, 1);
    EXPECT_EQ(run_cli({"score", "--labels", dir.file("labels.csv"), "--probs", dir.file("probs.csv"), "--method",
                       "nope", "--out", dir.file("s.csv")})
                  .code,
              1);
    EXPECT_EQ(run_cli({"score", "--labels", dir.file("labels.csv"), "--probs", dir.file("probs.csv"), "--method", "ema",
                       "--alpha", "0", "--out", dir.file("s.csv")})
                  .code,
              1);
    testutil::write_text(dir.file("bad.csv"), "id,prob_0,prob_1\na,0.9,0.2\nb,0.1,1.8\nc,0.7,0.05\nd,0.3,0.1\n");
    auto r = run_cli({"score", "--labels", dir.file("labels.csv"), "--probs", dir.file("bad.csv"), "--out",
                      dir.file("s.csv")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("(1,1)"), std::string::npos) << r.err;
    EXPECT_EQ(run_cli({"score", "--labels", dir.file("missing.csv"), "--probs", dir.file("probs.csv"), "--out",
                       dir.file("s.csv")})
                  .code,
              2);
    EXPECT_EQ(run_cli({"gen", "--preset", "large", "--out-dir", dir.file("g")}).code, 1);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, BinaryExitCodes) {
    TempDir dir("cli");
    write_pair(dir);
    EXPECT_EQ(run_binary("--help"), 0);
    EXPECT_EQ(run_binary("score --bogus"), 1);
    EXPECT_EQ(run_binary("score --labels " + dir.file("labels.csv") + " --probs " + dir.file("nope.csv") + " --out " +
                         dir.file("s.csv")),
              2);
    EXPECT_EQ(run_binary("score --labels " + dir.file("labels.csv") + " --probs " + dir.file("probs.csv") + " --out " +
                         dir.file("s.csv")),
              0);
}

TEST(Cli, GenTrainScoreMatchesInProcessPipeline) {
    TempDir dir("cli");
    const std::string d = dir.path().string();
    ASSERT_EQ(run_cli({"gen", "--preset", "custom", "--n-samples", "120", "--n-classes", "3", "--doc-length", "60",
                       "--seed", "9", "--out-dir", d})
                  .code,
              0);
    ASSERT_EQ(run_cli({"train-predict", "--labels", dir.file("labels.csv"), "--features", dir.file("features.csv"),
                       "--epochs", "40", "--seed", "4", "--out", dir.file("probs.csv")})
                  .code,
              0);
    ASSERT_EQ(run_cli({"score", "--labels", dir.file("labels.csv"), "--probs", dir.file("probs.csv"), "--out",
                       dir.file("scores.csv")})
                  .code,
              0);

    GenConfig cfg{120, 0, 3, 3, 2.0, 60.0, 0};
    auto noisy = make_noisy_dataset(cfg, ReplicateSeeds::derive(9), 3);
    LogRegParams p;
    p.epochs = 40;
    auto probs = cross_val_pred_probs(noisy.dataset, {5, 4, true}, p);
    auto expect = score_examples(noisy.dataset.given_labels, probs, PoolingMethod::ema());

    EXPECT_EQ(load_dataset(dir.file("labels.csv")).given_labels, noisy.dataset.given_labels);
    EXPECT_EQ(load_dataset(dir.file("truth.csv")).given_labels, *noisy.dataset.true_labels);
    EXPECT_EQ(load_probs(dir.file("probs.csv")).values, probs);
    EXPECT_EQ(load_scores(dir.file("scores.csv")), expect.values);
    auto spec = nlohmann::json::parse(testutil::read_text(dir.file("noise_spec.json")));
    EXPECT_EQ(spec["generator_seed"], 9);
}

TEST(Cli, BenchAndReport) {
    TempDir dir("cli");
    const std::string d = dir.path().string();
    auto r = run_cli({"bench", "--replicates", "1", "--epochs", "5", "--methods", "min", "--methods", "ema", "--out-dir",
                      d});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("ema"), std::string::npos);
    auto rows = load_metric_csv(dir.file("metrics.csv"));
    EXPECT_EQ(rows.size(), 12u);
    auto rep = run_cli({"report", "--metrics", dir.file("metrics.csv"), "--out", dir.file("agg.csv")});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_EQ(testutil::read_text(dir.file("agg.csv")), testutil::read_text(dir.file("aggregate.csv")));
}

TEST(Cli, OutDirFromEnvironment) {
    TempDir dir("cli");
    ::setenv("MLERR_OUT_DIR", dir.path().c_str(), 1);
    EXPECT_EQ(cli::default_out_dir(), dir.path().string());
    ::unsetenv("MLERR_OUT_DIR");
    EXPECT_EQ(cli::default_out_dir(), ".");
}
