#include "falldet/classifiers.hpp"

#include <algorithm>
#include <cmath>

#include "falldet/kernels.hpp"
#include "falldet/rng.hpp"

namespace falldet::classifiers {

namespace {

void check_binary(const Matrix& X, const std::vector<int>& y, const char* who) {
    require(X.rows > 0 && X.cols > 0, std::string(who) + ": empty training data");
    require(X.rows == y.size(), std::string(who) + ": row count != label count");
    bool seen[2] = {false, false};
    for (const int label : y) {
        require(label == 0 || label == 1,
                std::string(who) + ": labels must be 0 or 1");
        seen[label] = true;
    }
    require(seen[0] && seen[1],
            std::string(who) + ": training data must contain both classes");
    for (const double v : X.data) {
        require(std::isfinite(v), std::string(who) +
                                      ": non-finite feature value, impute "
                                      "before training");
    }
}

double loss_at(const std::vector<double>& w, double b, double C,
               const Matrix& X, const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double z = kernels::dot(w.data(), X.row(i), X.cols) + b;
        // -log p(y|x) = softplus(z) - y*z
        loss += softplus(z) - (y[i] ? z : 0.0);
    }
    const double w2 = kernels::dot(w.data(), w.data(), w.size());
    return loss + w2 / (2.0 * C);
}

}  // namespace

void LogRegConfig::validate() const {
    require(std::isfinite(C) && C > 0.0, "logreg: C must be positive");
    require(std::isfinite(grad_tol) && grad_tol > 0.0,
            "logreg: grad_tol must be positive");
    require(max_iter >= 1, "logreg: max_iter must be >= 1");
}

std::vector<double> logreg_gradient(const std::vector<double>& weights,
                                    double bias, double C, const Matrix& X,
                                    const std::vector<int>& y) {
    require(X.rows == y.size(), "logreg: row count != label count");
    require(X.cols == weights.size(), "logreg: feature width mismatch");
    require(C > 0.0, "logreg: C must be positive");

    std::vector<double> grad(weights.size() + 1, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double z = kernels::dot(weights.data(), X.row(i), X.cols) + bias;
        const double delta = sigmoid(z) - static_cast<double>(y[i]);
        kernels::axpy(delta, X.row(i), grad.data(), X.cols);
        grad.back() += delta;
    }
    for (std::size_t j = 0; j < weights.size(); ++j) {
        grad[j] += weights[j] / C;  // bias stays unpenalized
    }
    return grad;
}

LogRegModel fit_logreg(const Matrix& X, const std::vector<int>& y,
                       const LogRegConfig& config) {
    config.validate();
    check_binary(X, y, "logreg");

    LogRegModel model;
    model.config = config;
    model.weights.assign(X.cols, 0.0);
    model.bias = 0.0;

    double step = 1.0;
    std::vector<double> trial_w(X.cols);
    double current_loss = loss_at(model.weights, model.bias, config.C, X, y);

    for (int iter = 0; iter < config.max_iter; ++iter) {
        const auto grad =
            logreg_gradient(model.weights, model.bias, config.C, X, y);
        double inf_norm = 0.0;
        double grad_sq = 0.0;
        for (const double g : grad) {
            inf_norm = std::max(inf_norm, std::abs(g));
            grad_sq += g * g;
        }
        if (inf_norm < config.grad_tol) break;

        // Armijo backtracking, warm-started from the last accepted step.
        double t = std::min(step * 2.0, 1e6);
        bool accepted = false;
        double trial_b = 0.0, trial_loss = 0.0;
        while (t > 1e-18) {
            for (std::size_t j = 0; j < trial_w.size(); ++j) {
                trial_w[j] = model.weights[j] - t * grad[j];
            }
            trial_b = model.bias - t * grad.back();
            trial_loss = loss_at(trial_w, trial_b, config.C, X, y);
            if (trial_loss <= current_loss - 1e-4 * t * grad_sq) {
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        if (!accepted) break;  // no descent representable anymore
        model.weights = trial_w;
        model.bias = trial_b;
        current_loss = trial_loss;
        step = t;
    }
    return model;
}

double logreg_loss(const LogRegModel& model, const Matrix& X,
                   const std::vector<int>& y) {
    require(X.rows == y.size(), "logreg: row count != label count");
    require(X.cols == model.weights.size(), "logreg: feature width mismatch");
    return loss_at(model.weights, model.bias, model.config.C, X, y);
}

double decision_function(const LogRegModel& model, std::span<const double> x) {
    require(x.size() == model.weights.size(), "logreg: feature width mismatch");
    return kernels::dot(model.weights.data(), x.data(), x.size()) + model.bias;
}

Prediction predict(const LogRegModel& model, std::span<const double> x) {
    const double margin = decision_function(model, x);
    return {margin > 0.0 ? 1 : 0, margin};
}

void SgdConfig::validate() const {
    require(std::isfinite(alpha) && alpha > 0.0, "sgd: alpha must be positive");
    require(max_iter >= 1, "sgd: max_iter must be >= 1");
    require(std::isfinite(tol) && tol >= 0.0, "sgd: tol must be >= 0");
}

SgdModel fit_sgd(const Matrix& X, const std::vector<int>& y,
                 const SgdConfig& config) {
    config.validate();
    check_binary(X, y, "sgd");

    SgdModel model;
    model.config = config;
    model.weights.assign(X.cols, 0.0);
    model.bias = 0.0;

    const std::size_t n = X.rows;
    const double t0 = 1.0 / config.alpha;
    double t = 0.0;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_iter; ++epoch) {
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double max_update = 0.0;
        for (const std::size_t i : order) {
            const double eta = 1.0 / (config.alpha * (t0 + t));
            t += 1.0;
            const double label = y[i] ? 1.0 : -1.0;
            const double margin =
                label * (kernels::dot(model.weights.data(), X.row(i), X.cols) +
                         model.bias);
            const double shrink = 1.0 - eta * config.alpha;
            const double push = margin < 1.0 ? eta * label : 0.0;
            const double* row = X.row(i);
            for (std::size_t j = 0; j < X.cols; ++j) {
                const double next = shrink * model.weights[j] + push * row[j];
                max_update = std::max(max_update,
                                      std::abs(next - model.weights[j]));
                model.weights[j] = next;
            }
            if (push != 0.0) {
                model.bias += push;  // bias is not regularized
                max_update = std::max(max_update, std::abs(push));
            }
        }
        model.epochs_run = epoch + 1;
        if (max_update < config.tol) break;
    }
    return model;
}

double decision_function(const SgdModel& model, std::span<const double> x) {
    require(x.size() == model.weights.size(), "sgd: feature width mismatch");
    return kernels::dot(model.weights.data(), x.data(), x.size()) + model.bias;
}

Prediction predict(const SgdModel& model, std::span<const double> x) {
    const double margin = decision_function(model, x);
    return {margin > 0.0 ? 1 : 0, margin};
}

}  // namespace falldet::classifiers
