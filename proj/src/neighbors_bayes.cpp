#include "falldet/classifiers.hpp"

#include <algorithm>
#include <cmath>

#include "falldet/kernels.hpp"

namespace falldet::classifiers {

void KnnConfig::validate() const {
    require(k >= 1, "knn: k must be >= 1");
    require(k % 2 == 1, "knn: k must be odd so votes cannot tie");
}

KnnModel fit_knn(const Matrix& X, const std::vector<int>& y,
                 const KnnConfig& config) {
    config.validate();
    require(X.rows > 0 && X.cols > 0, "knn: empty training data");
    require(X.rows == y.size(), "knn: row count != label count");
    require(static_cast<std::size_t>(config.k) <= X.rows,
            "knn: k larger than the training set");
    for (const int label : y) {
        require(label == 0 || label == 1, "knn: labels must be 0 or 1");
    }
    for (const double v : X.data) {
        require(std::isfinite(v),
                "knn: non-finite feature value, impute before training");
    }
    KnnModel model;
    model.train = X;
    model.labels = y;
    model.config = config;
    return model;
}

Prediction predict(const KnnModel& model, std::span<const double> x) {
    require(x.size() == model.train.cols, "knn: feature width mismatch");
    const std::size_t n = model.train.rows;
    const auto k = static_cast<std::size_t>(model.config.k);

    std::vector<std::pair<double, std::size_t>> ranked(n);
    for (std::size_t i = 0; i < n; ++i) {
        ranked[i] = {kernels::squared_distance(model.train.row(i), x.data(),
                                               x.size()),
                     i};
    }
    // (distance, row index) ordering makes distance ties deterministic.
    std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());

    std::size_t ones = 0;
    for (std::size_t j = 0; j < k; ++j) {
        ones += static_cast<std::size_t>(model.labels[ranked[j].second]);
    }
    const double score = static_cast<double>(ones) / static_cast<double>(k);
    return {2 * ones > k ? 1 : 0, score};
}

GnbModel fit_gnb(const Matrix& X, const std::vector<int>& y) {
    require(X.rows > 0 && X.cols > 0, "gnb: empty training data");
    require(X.rows == y.size(), "gnb: row count != label count");
    std::array<std::size_t, 2> count{0, 0};
    for (const int label : y) {
        require(label == 0 || label == 1, "gnb: labels must be 0 or 1");
        ++count[static_cast<std::size_t>(label)];
    }
    require(count[0] > 0 && count[1] > 0,
            "gnb: training data must contain both classes");
    for (const double v : X.data) {
        require(std::isfinite(v),
                "gnb: non-finite feature value, impute before training");
    }

    const std::size_t d = X.cols;
    GnbModel model;
    model.n_features = d;
    model.mean = Matrix(2, d);
    model.variance = Matrix(2, d);
    for (int c = 0; c < 2; ++c) {
        model.log_prior[c] =
            std::log(static_cast<double>(count[c]) /
                     static_cast<double>(X.rows));
    }

    for (std::size_t i = 0; i < X.rows; ++i) {
        const double* row = X.row(i);
        double* mean = model.mean.row(static_cast<std::size_t>(y[i]));
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            model.mean.at(c, j) /= static_cast<double>(count[c]);
        }
    }
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double* row = X.row(i);
        const auto c = static_cast<std::size_t>(y[i]);
        for (std::size_t j = 0; j < d; ++j) {
            const double delta = row[j] - model.mean.at(c, j);
            model.variance.at(c, j) += delta * delta;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            model.variance.at(c, j) /= static_cast<double>(count[c]);
        }
    }

    // Variance floor proportional to the widest feature, so a feature that
    // happens to be constant within one class cannot blow up the density.
    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < X.rows; ++i) mean += X.at(i, j);
        mean /= static_cast<double>(X.rows);
        double acc = 0.0;
        for (std::size_t i = 0; i < X.rows; ++i) {
            const double delta = X.at(i, j) - mean;
            acc += delta * delta;
        }
        max_var = std::max(max_var, acc / static_cast<double>(X.rows));
    }
    double floor = 1e-9 * max_var;
    if (floor <= 0.0) floor = 1e-12;
    for (double& v : model.variance.data) v = std::max(v, floor);
    return model;
}

std::array<double, 2> posterior(const GnbModel& model,
                                std::span<const double> x) {
    require(x.size() == model.n_features, "gnb: feature width mismatch");
    constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
    std::array<double, 2> joint{};
    for (int c = 0; c < 2; ++c) {
        double acc = model.log_prior[c];
        for (std::size_t j = 0; j < model.n_features; ++j) {
            const double v = model.variance.at(c, j);
            const double delta = x[j] - model.mean.at(c, j);
            acc -= 0.5 * (kLog2Pi + std::log(v) + delta * delta / v);
        }
        joint[c] = acc;
    }
    const double peak = std::max(joint[0], joint[1]);
    const double e0 = std::exp(joint[0] - peak);
    const double e1 = std::exp(joint[1] - peak);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

Prediction predict(const GnbModel& model, std::span<const double> x) {
    const double score = posterior(model, x)[1];
    return {score > 0.5 ? 1 : 0, score};
}

}  // namespace falldet::classifiers
