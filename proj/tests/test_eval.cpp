#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mlerr/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mlerr;

namespace {

ErrorTruth from_counts(std::vector<std::size_t> counts) {
    ErrorTruth t;
    for (auto c : counts) t.error_flags.push_back(c > 0);
    t.error_counts = std::move(counts);
    return t;
}

}  // namespace

TEST(ErrorTruth, CountsPerExample) {
    LabelMatrix given{{1, 0, 1}, {0, 0, 0}, {1, 1, 1}};
    LabelMatrix truth{{1, 1, 0}, {0, 0, 0}, {1, 1, 0}};
    auto t = error_truth(given, truth);
    EXPECT_EQ(t.error_counts, (std::vector<std::size_t>{2, 0, 1}));
    EXPECT_EQ(t.error_flags, (std::vector<bool>{true, false, true}));
    EXPECT_EQ(t.n_mislabeled(), 2u);
    EXPECT_THROW(error_truth(given, LabelMatrix(2, 3)), DataError);
}

TEST(Rank, AscendingWithStableTies) {
    std::vector<double> s{0.3, 0.1, 0.2};
    EXPECT_EQ(rank_ascending(s), (std::vector<std::size_t>{1, 2, 0}));
    std::vector<double> tied{0.5, 0.2, 0.5, 0.2};
    EXPECT_EQ(rank_ascending(tied), (std::vector<std::size_t>{1, 3, 0, 2}));
    std::vector<double> bad{0.1, std::nan("")};
    EXPECT_THROW(rank_ascending(bad), DataError);
}

TEST(ApAtT, HandExample) {
    std::vector<double> s{0.1, 0.2, 0.9, 0.8};
    auto t = from_counts({1, 1, 0, 0});
    EXPECT_DOUBLE_EQ(*ap_at_t(s, t, 2).value, 1.0);
    // bottom-3 contains both positives first, then a negative
    EXPECT_DOUBLE_EQ(*ap_at_t(s, t, 3).value, 1.0);
    std::vector<double> s2{0.1, 0.9, 0.2, 0.8};
    EXPECT_DOUBLE_EQ(*ap_at_t(s2, t, 2).value, 1.0);
    EXPECT_DOUBLE_EQ(*ap_at_t(s2, t, 4).value, (1.0 + 2.0 / 4.0) / 2.0);
}

TEST(ApAtT, PerfectAndEmpty) {
    std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5};
    EXPECT_DOUBLE_EQ(*ap_at_t(s, from_counts({2, 1, 0, 0, 0}), 2).value, 1.0);
    EXPECT_DOUBLE_EQ(*auprc(s, from_counts({2, 1, 0, 0, 0})).value, 1.0);
    EXPECT_DOUBLE_EQ(*ap_at_t(s, from_counts({0, 0, 0, 1, 1}), 3).value, 0.0);
    EXPECT_DOUBLE_EQ(*ap_at_t(s, from_counts({0, 0, 0, 0, 0}), 5).value, 0.0);
}

TEST(ApAtT, WorstRankingClosedForm) {
    // N = 10, three positives ranked last
    std::vector<double> s(10);
    for (std::size_t i = 0; i < 10; ++i) s[i] = static_cast<double>(i);
    auto t = from_counts({0, 0, 0, 0, 0, 0, 0, 1, 1, 1});
    const double expect = (1.0 / 8.0 + 2.0 / 9.0 + 3.0 / 10.0) / 3.0;
    EXPECT_NEAR(*auprc(s, t).value, expect, 1e-15);
}

TEST(ApAtT, KPrecisionCountsOnlyMultiErrorExamples) {
    std::vector<double> s{0.1, 0.2, 0.3, 0.4};
    auto t = from_counts({1, 2, 3, 0});
    auto r2 = ap_at_t(s, t, 3, 2);
    EXPECT_EQ(r2.name, "ap2_at_t");
    EXPECT_DOUBLE_EQ(*r2.value, (1.0 / 2.0 + 2.0 / 3.0) / 2.0);
    EXPECT_DOUBLE_EQ(*ap_at_t(s, t, 3, 3).value, 1.0 / 3.0);
    EXPECT_EQ(ap_at_t(s, t, 3, 2).n_positives, 2u);
}

TEST(ApAtT, RejectsBadParameters) {
    std::vector<double> s{0.1, 0.2};
    auto t = from_counts({1, 0});
    EXPECT_THROW(ap_at_t(s, t, 0), ParameterError);
    EXPECT_THROW(ap_at_t(s, t, 3), ParameterError);
    EXPECT_THROW(ap_at_t(s, t, 1, 0), ParameterError);
    EXPECT_THROW(ap_at_t(s, from_counts({1}), 1), DataError);
    EXPECT_THROW(auprc(s, from_counts({0, 0})), DataError);
}

TEST(ApAtT, MatchesBruteForceOracle) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> len(1, 50), cnt(0, 3);
    std::uniform_int_distribution<int> coarse(0, 5);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = len(rng);
        std::vector<double> s(n);
        std::vector<std::size_t> c(n);
        auto u = testutil::random_scores(n, 1, rng);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rep % 3 == 0 ? coarse(rng) / 5.0 : u(i, 0);  // every third instance is tie-heavy
            c[i] = cnt(rng);
        }
        auto t = from_counts(c);
        std::uniform_int_distribution<std::size_t> tt(1, n);
        const std::size_t T = tt(rng);
        for (std::size_t k = 1; k <= 3; ++k)
            EXPECT_NEAR(*ap_at_t(s, t, T, k).value, oracle::ap_at_t(s, c, T, k), 1e-12) << rep;
        if (t.n_mislabeled() > 0) {
            EXPECT_NEAR(*auprc(s, t).value, oracle::ap_at_t(s, c, n, 1), 1e-12);
        }
    }
}

TEST(Auprc, EqualsApAtFullDepth) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        auto u = testutil::random_scores(80, 1, rng);
        auto b = testutil::random_labels(80, 1, rng, 0.2);
        std::vector<double> s(u.data().begin(), u.data().end());
        std::vector<std::size_t> c(b.data().begin(), b.data().end());
        c[0] = 1;
        auto t = from_counts(c);
        EXPECT_EQ(*auprc(s, t).value, *ap_at_t(s, t, 80).value);
    }
}

TEST(Metrics, InvariantUnderMonotoneTransforms) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        auto u = testutil::random_scores(40, 1, rng);
        std::vector<double> s(u.data().begin(), u.data().end()), f(40);
        for (std::size_t i = 0; i < 40; ++i) f[i] = std::exp(3.0 * s[i]) - 7.0;
        std::vector<std::size_t> c(40);
        for (std::size_t i = 0; i < 40; ++i) c[i] = (i * 7 + rep) % 4;
        auto t = from_counts(c);
        EXPECT_EQ(*ap_at_t(s, t, 15).value, *ap_at_t(f, t, 15).value);
        EXPECT_NEAR(*spearman(s, c).value, *spearman(f, c).value, 1e-12);
    }
}

TEST(Spearman, HandValues) {
    std::vector<double> s{0.1, 0.2, 0.3, 0.4};
    std::vector<std::size_t> up{0, 1, 2, 3}, down{3, 2, 1, 0};
    EXPECT_NEAR(*spearman(s, up).value, 1.0, 1e-15);
    EXPECT_NEAR(*spearman(s, down).value, -1.0, 1e-15);
    std::vector<double> s3{1.0, 2.0, 3.0};
    std::vector<std::size_t> tied{0, 0, 1};
    EXPECT_NEAR(*spearman(s3, tied).value, std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Spearman, ConstantInputIsUndefined) {
    std::vector<double> s{0.1, 0.2, 0.3};
    std::vector<std::size_t> zeros{0, 0, 0};
    EXPECT_FALSE(spearman(s, zeros).value.has_value());
    std::vector<double> flat{0.5, 0.5, 0.5};
    std::vector<std::size_t> c{0, 1, 2};
    EXPECT_FALSE(spearman(flat, c).value.has_value());
    EXPECT_THROW(spearman(std::vector<double>{0.1}, std::vector<std::size_t>{0}), DataError);
    EXPECT_THROW(spearman(s, std::vector<std::size_t>{0, 1}), DataError);
}

TEST(Spearman, MatchesBruteForceOracle) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> len(3, 50), cnt(0, 3);
    std::uniform_int_distribution<int> coarse(0, 4);
    int checked = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = len(rng);
        std::vector<double> s(n);
        std::vector<std::size_t> c(n);
        auto u = testutil::random_scores(n, 1, rng);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rep % 2 ? coarse(rng) / 4.0 : u(i, 0);
            c[i] = cnt(rng);
        }
        auto r = spearman(s, c);
        if (!r.value) continue;
        EXPECT_NEAR(*r.value, oracle::spearman(s, c), 1e-12) << rep;
        ++checked;
    }
    EXPECT_GT(checked, 250);
}

TEST(FlagAccuracy, PrecisionRecall) {
    auto t = from_counts({1, 0, 2, 0});
    auto a = flag_accuracy({true, true, false, false}, t);
    EXPECT_DOUBLE_EQ(a.precision, 0.5);
    EXPECT_DOUBLE_EQ(a.recall, 0.5);
    auto none = flag_accuracy({false, false, false, false}, t);
    EXPECT_DOUBLE_EQ(none.precision, 1.0);
    EXPECT_DOUBLE_EQ(none.recall, 0.0);
}
