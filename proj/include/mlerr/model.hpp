#pragma once
// One-vs-rest L2-regularized logistic regression trained by full-batch
// proximal gradient descent, and k-fold cross-validated predictions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlerr/core_data.hpp"
#include "mlerr/matrix.hpp"

namespace mlerr {

/// Training diverged (non-finite objective).
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LogRegParams {
    double learning_rate = 0.1;
    double l2 = 1e-4;
    std::size_t epochs = 500;
    bool log_counts = true;   // log(1 + x) before standardizing
    bool standardize = true;  // per-feature z-score with training statistics
    bool record_loss = false;

    void check() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ParameterError("learning rate must be > 0");
        if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ParameterError("l2 strength must be >= 0");
    }
};

/// Feature transform fitted on training rows only.
struct FeatureScaler {
    bool log_counts = true;
    std::vector<double> mean;
    std::vector<double> scale;

    static FeatureScaler fit(const FeatureMatrix& x, const LogRegParams& p) {
        FeatureScaler s;
        s.log_counts = p.log_counts;
        const std::size_t n = x.rows(), d = x.cols();
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        if (!p.standardize || n == 0) return s;
        for (std::size_t j = 0; j < d; ++j) {
            double sum = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = s.pre(x(i, j));
                sum += v;
                sq += v * v;
            }
            const double m = sum / static_cast<double>(n);
            const double var = std::max(0.0, sq / static_cast<double>(n) - m * m);
            s.mean[j] = m;
            s.scale[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
        }
        return s;
    }

    double pre(double v) const { return log_counts ? std::log1p(std::max(v, 0.0)) : v; }

    FeatureMatrix apply(const FeatureMatrix& x) const {
        if (x.cols() != mean.size()) throw DataError("feature width mismatch: model expects " +
                                                     std::to_string(mean.size()) + ", got " + std::to_string(x.cols()));
        FeatureMatrix out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (pre(x(i, j)) - mean[j]) / scale[j];
        return out;
    }
};

struct LogRegModel {
    Matrix<double> weights;  // K×(D+1), bias in the last column
    FeatureScaler scaler;
    LogRegParams params;
    std::vector<std::vector<double>> loss_history;  // per class, filled when params.record_loss

    std::size_t n_classes() const noexcept { return weights.rows(); }
    std::size_t n_features() const noexcept { return weights.cols() ? weights.cols() - 1 : 0; }
};

inline double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Mean binary cross-entropy plus (l2/2)·||w||², bias unpenalized.
/// `coef` holds D weights followed by the bias.
inline double logistic_objective(const FeatureMatrix& x, std::span<const double> y, std::span<const double> coef,
                                 double l2) {
    const std::size_t n = x.rows(), d = x.cols();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = coef[d];
        for (std::size_t j = 0; j < d; ++j) z += coef[j] * x(i, j);
        loss += softplus(z) - y[i] * z;
    }
    double reg = 0.0;
    for (std::size_t j = 0; j < d; ++j) reg += coef[j] * coef[j];
    return loss / static_cast<double>(n) + 0.5 * l2 * reg;
}

/// Gradient of logistic_objective with respect to (w, bias).
inline std::vector<double> logistic_gradient(const FeatureMatrix& x, std::span<const double> y,
                                             std::span<const double> coef, double l2) {
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> g(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = coef[d];
        for (std::size_t j = 0; j < d; ++j) z += coef[j] * x(i, j);
        const double r = sigmoid(z) - y[i];
        for (std::size_t j = 0; j < d; ++j) g[j] += r * x(i, j);
        g[d] += r;
    }
    for (std::size_t j = 0; j < d; ++j) g[j] = g[j] / static_cast<double>(n) + l2 * coef[j];
    g[d] /= static_cast<double>(n);
    return g;
}

namespace detail {

/// Fits one class on already-transformed features. Returns D weights + bias.
inline std::vector<double> fit_binary(const FeatureMatrix& x, std::span<const double> y, const LogRegParams& p,
                                      std::size_t class_index, std::vector<double>* history) {
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> coef(d + 1, 0.0);

    const double n_pos = std::accumulate(y.begin(), y.end(), 0.0);
    if (n_pos == 0.0 || n_pos == static_cast<double>(n)) {
        const double rate = (n_pos + 0.5) / (static_cast<double>(n) + 1.0);
        coef[d] = std::log(rate / (1.0 - rate));
        return coef;
    }

    std::vector<double> grad(d + 1);
    const double shrink = 1.0 / (1.0 + p.learning_rate * p.l2);
    for (std::size_t epoch = 0; epoch <= p.epochs; ++epoch) {
        double loss = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double zi = coef[d];
            for (std::size_t j = 0; j < d; ++j) zi += coef[j] * x(i, j);
            loss += softplus(zi) - y[i] * zi;
            const double r = sigmoid(zi) - y[i];
            for (std::size_t j = 0; j < d; ++j) grad[j] += r * x(i, j);
            grad[d] += r;
        }
        double reg = 0.0;
        for (std::size_t j = 0; j < d; ++j) reg += coef[j] * coef[j];
        loss = loss / static_cast<double>(n) + 0.5 * p.l2 * reg;
        if (!std::isfinite(loss))
            throw TrainingError("logistic regression diverged for class " + std::to_string(class_index) +
                                " at epoch " + std::to_string(epoch));
        if (history) history->push_back(loss);
        if (epoch == p.epochs) break;

        // gradient step on the data term, then the closed-form prox of the L2 term
        for (std::size_t j = 0; j < d; ++j)
            coef[j] = (coef[j] - p.learning_rate * grad[j] / static_cast<double>(n)) * shrink;
        coef[d] -= p.learning_rate * grad[d] / static_cast<double>(n);
    }
    return coef;
}

}  // namespace detail

/// Trains one independent binary model per class.
inline LogRegModel train(const FeatureMatrix& features, const LabelMatrix& labels, const LogRegParams& params = {}) {
    params.check();
    if (features.rows() != labels.rows()) throw DataError("train: features and labels have different row counts");
    if (features.rows() < 2) throw DataError("train: need at least 2 examples");
    if (features.cols() < 1) throw DataError("train: need at least 1 feature");

    LogRegModel model;
    model.params = params;
    model.scaler = FeatureScaler::fit(features, params);
    const FeatureMatrix x = model.scaler.apply(features);
    const std::size_t K = labels.cols(), d = features.cols();
    model.weights = Matrix<double>(K, d + 1, 0.0);
    if (params.record_loss) model.loss_history.resize(K);

    std::vector<double> y(labels.rows());
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < labels.rows(); ++i) y[i] = labels(i, k);
        auto coef = detail::fit_binary(x, y, params, k, params.record_loss ? &model.loss_history[k] : nullptr);
        std::copy(coef.begin(), coef.end(), model.weights.row(k).begin());
    }
    return model;
}

/// Per-class sigmoid outputs; rows are not normalized.
inline ProbMatrix predict_proba(const LogRegModel& model, const FeatureMatrix& features) {
    if (features.cols() != model.n_features())
        throw DataError("predict_proba: feature width " + std::to_string(features.cols()) + " does not match model width " +
                        std::to_string(model.n_features()));
    const FeatureMatrix x = model.scaler.apply(features);
    const std::size_t d = x.cols();
    ProbMatrix probs(x.rows(), model.n_classes());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t k = 0; k < model.n_classes(); ++k) {
            const auto w = model.weights.row(k);
            double z = w[d];
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x(i, j);
            probs(i, k) = sigmoid(z);
        }
    return probs;
}

struct CVConfig {
    std::size_t n_folds = 5;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

/// Fold index per example: a (optionally seeded-shuffled) order dealt round-robin into folds.
inline std::vector<std::size_t> fold_assignment(std::size_t n, const CVConfig& cv) {
    if (cv.n_folds < 2 || cv.n_folds > n)
        throw ParameterError("cross-validation needs 2 <= folds <= N (folds = " + std::to_string(cv.n_folds) +
                             ", N = " + std::to_string(n) + ")");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cv.shuffle) {
        std::mt19937_64 rng(cv.seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::size_t> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % cv.n_folds;
    return fold;
}

/// Out-of-sample probabilities: each example is predicted by a model trained on the other folds.
inline ProbMatrix cross_val_pred_probs(const FeatureMatrix& features, const LabelMatrix& labels, const CVConfig& cv,
                                       const LogRegParams& params = {}) {
    if (features.rows() != labels.rows()) throw DataError("cross_val_pred_probs: row count mismatch");
    const std::size_t n = labels.rows(), K = labels.cols(), d = features.cols();
    const auto fold = fold_assignment(n, cv);
    ProbMatrix out(n, K);
    for (std::size_t f = 0; f < cv.n_folds; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
        FeatureMatrix xtr(tr.size(), d), xte(te.size(), d);
        LabelMatrix ytr(tr.size(), K);
        for (std::size_t r = 0; r < tr.size(); ++r) {
            std::copy_n(features.row(tr[r]).begin(), d, xtr.row(r).begin());
            std::copy_n(labels.row(tr[r]).begin(), K, ytr.row(r).begin());
        }
        for (std::size_t r = 0; r < te.size(); ++r) std::copy_n(features.row(te[r]).begin(), d, xte.row(r).begin());
        LogRegParams p = params;
        p.record_loss = false;
        const auto model = train(xtr, ytr, p);
        const auto probs = predict_proba(model, xte);
        for (std::size_t r = 0; r < te.size(); ++r) std::copy_n(probs.row(r).begin(), K, out.row(te[r]).begin());
    }
    return out;
}

inline ProbMatrix cross_val_pred_probs(const MultiLabelDataset& ds, const CVConfig& cv, const LogRegParams& params = {}) {
    if (!ds.features) throw DataError("cross_val_pred_probs: dataset has no features");
    return cross_val_pred_probs(*ds.features, ds.given_labels, cv, params);
}

}  // namespace mlerr
