#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "falldet/common.hpp"
#include "falldet/trees.hpp"

namespace falldet::classifiers {

// ----- support vector machine (RBF kernel, SMO) -----

struct SvmConfig {
    double C = 1.0;
    double kkt_tol = 1e-3;

    void validate() const;
};

struct SvmModel {
    double gamma = 0.0;  // 1 / (d * var(all training cells))
    double bias = 0.0;
    Matrix support_vectors;
    std::vector<double> alpha_y;  // alpha_i * y_i, y in {-1,+1}
    std::size_t n_features = 0;
    SvmConfig config;
};

SvmModel fit_svm(const Matrix& X, const std::vector<int>& y,
                 const SvmConfig& config = {});

/// Signed kernel expansion sum_i alpha_i y_i K(x_i, x) + b.
double decision_function(const SvmModel& model, std::span<const double> x);

/// Largest Karush-Kuhn-Tucker violation over the training set; fitted
/// models keep this within the configured tolerance.
double kkt_violation(const SvmModel& model, const Matrix& X,
                     const std::vector<int>& y);

Prediction predict(const SvmModel& model, std::span<const double> x);

// ----- logistic regression (full-batch gradient descent) -----

struct LogRegConfig {
    double C = 1.0;           // inverse regularization strength
    double grad_tol = 1e-6;   // stop when the gradient inf-norm drops below
    int max_iter = 10000;

    void validate() const;
};

struct LogRegModel {
    std::vector<double> weights;
    double bias = 0.0;
    LogRegConfig config;
};

LogRegModel fit_logreg(const Matrix& X, const std::vector<int>& y,
                       const LogRegConfig& config = {});

/// Regularized negative log-likelihood (sum form; bias unpenalized).
double logreg_loss(const LogRegModel& model, const Matrix& X,
                   const std::vector<int>& y);

/// Gradient of logreg_loss with respect to (weights..., bias).
std::vector<double> logreg_gradient(const std::vector<double>& weights,
                                    double bias, double C, const Matrix& X,
                                    const std::vector<int>& y);

double decision_function(const LogRegModel& model, std::span<const double> x);
Prediction predict(const LogRegModel& model, std::span<const double> x);

// ----- linear SVM via stochastic gradient descent (hinge loss) -----

struct SgdConfig {
    double alpha = 1e-4;  // L2 strength, also sets the learning-rate scale
    int max_iter = 1000;  // epochs
    double tol = 1e-4;    // stop when an epoch's largest update is below
    std::uint64_t seed = 0;

    void validate() const;
};

struct SgdModel {
    std::vector<double> weights;
    double bias = 0.0;
    int epochs_run = 0;
    SgdConfig config;
};

SgdModel fit_sgd(const Matrix& X, const std::vector<int>& y,
                 const SgdConfig& config = {});

double decision_function(const SgdModel& model, std::span<const double> x);
Prediction predict(const SgdModel& model, std::span<const double> x);

// ----- k nearest neighbors -----

struct KnnConfig {
    int k = 5;

    void validate() const;
};

struct KnnModel {
    Matrix train;
    std::vector<int> labels;
    KnnConfig config;
};

KnnModel fit_knn(const Matrix& X, const std::vector<int>& y,
                 const KnnConfig& config = {});

/// Uniform vote of the k nearest by Euclidean distance; distance ties break
/// on the lower training row index. Score is the positive vote fraction.
Prediction predict(const KnnModel& model, std::span<const double> x);

// ----- Gaussian naive Bayes -----

struct GnbModel {
    std::array<double, 2> log_prior{0.0, 0.0};
    Matrix mean;      // 2 x d
    Matrix variance;  // 2 x d, floored
    std::size_t n_features = 0;
};

GnbModel fit_gnb(const Matrix& X, const std::vector<int>& y);

/// Posterior probabilities for both classes (they sum to 1).
std::array<double, 2> posterior(const GnbModel& model,
                                std::span<const double> x);

Prediction predict(const GnbModel& model, std::span<const double> x);

// ----- uniform interface over the eight model kinds -----

enum class ModelKind {
    svm,
    logreg,
    sgd,
    knn,
    gnb,
    tree,
    forest,
    gboost,
};

const std::vector<ModelKind>& all_model_kinds();
std::string kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

/// Everything needed to train one model. Defaults reproduce the benchmark
/// configuration: SVM C=1 RBF, logistic C=1, gini tree without depth limit,
/// k=5 uniform kNN, 100-tree forest, SGD alpha=1e-4 for 1000 epochs, and
/// 100 boosting stages at learning rate 0.1.
struct ModelConfig {
    ModelKind kind = ModelKind::svm;
    std::uint64_t seed = 0;
    SvmConfig svm;
    LogRegConfig logreg;
    SgdConfig sgd;
    KnnConfig knn;
    trees::TreeConfig tree;
    trees::ForestConfig forest;
    trees::BoostConfig gboost;

    void validate() const;
};

using Model = std::variant<SvmModel, LogRegModel, SgdModel, KnnModel, GnbModel,
                           trees::DecisionTree, trees::RandomForest,
                           trees::GradientBoosting>;

Model fit_model(const ModelConfig& config, const Matrix& X,
                const std::vector<int>& y);

ModelKind kind_of(const Model& model);

/// Margin for svm/logreg/sgd, positive-class probability or vote fraction
/// for the rest.
double decision_score(const Model& model, std::span<const double> x);

/// Decision boundary matching decision_score: 0 for margin models, 0.5 for
/// the probability and vote models. A score exactly at the threshold
/// predicts 0.
double decision_threshold(ModelKind kind);

Prediction predict(const Model& model, std::span<const double> x);

std::size_t feature_width(const Model& model);

}  // namespace falldet::classifiers
