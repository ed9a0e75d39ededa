// Generate a small noisy dataset, get out-of-fold probabilities, then rank and flag examples.

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "mlerr/mlerr.hpp"

int main() {
    using namespace mlerr;

    GenConfig cfg = GenConfig::small();
    cfg.n_samples = 1000;
    auto noisy = make_noisy_dataset(cfg, ReplicateSeeds::derive(7));
    const auto& ds = noisy.dataset;
    const auto truth = error_truth(ds.given_labels, *ds.true_labels);
    std::printf("%zu examples, %zu classes, %zu mislabeled\n", ds.n_examples(), ds.n_classes(), truth.n_mislabeled());

    LogRegParams params;
    params.epochs = 200;
    const auto probs = cross_val_pred_probs(ds, CVConfig{5, 1, true}, params);

    for (auto m : {PoolingMethod::of(Pooling::Min), PoolingMethod::ema(), PoolingMethod::of(Pooling::Mean)}) {
        const auto q = score_examples(ds.given_labels, probs, m);
        const auto ap = ap_at_t(q.values, truth, truth.n_mislabeled());
        const auto sp = spearman(q.values, truth.error_counts);
        std::printf("%-6s AP@T %.3f  spearman %.3f\n", method_label(m).c_str(), *ap.value, sp.value.value_or(0.0));
    }

    const auto q = score_examples(ds.given_labels, probs, PoolingMethod::ema());
    const auto order = rank_ascending(q.values);
    std::printf("\nlowest-scoring examples (ema):\n");
    for (std::size_t r = 0; r < 5; ++r) {
        const auto i = order[r];
        std::printf("  id %-5s score %.4f  wrong annotations %zu\n", ds.example_ids[i].c_str(), q.values[i],
                    truth.error_counts[i]);
    }

    const auto flags = flag_multilabel(ds.given_labels, probs);
    const auto acc = flag_accuracy(flags.example_flags, truth);
    std::printf("\nconfident learning flagged %zu examples (precision %.3f, recall %.3f)\n", flags.n_flagged(),
                acc.precision, acc.recall);
    return 0;
}
