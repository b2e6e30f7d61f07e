#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "falldet/common.hpp"

namespace falldet::trees {

/// Binary class histogram.
struct ClassDistribution {
    std::array<std::int64_t, 2> counts{0, 0};

    std::int64_t total() const { return counts[0] + counts[1]; }
};

/// Gini impurity 1 - sum(p_c^2). Empty distributions are an error.
double gini(const ClassDistribution& dist);

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;       // left branch takes x[feature] <= threshold
    double impurity_decrease = 0.0;
};

/// Exhaustive best binary split over the candidate features: thresholds are
/// midpoints between consecutive distinct values, scored by weighted Gini.
/// Candidate comparison is done in exact integer arithmetic so ties are real
/// ties; they resolve to the lowest feature index, then lowest threshold.
/// Returns nullopt when nothing strictly beats the parent impurity.
std::optional<SplitCandidate> best_split(
    const Matrix& X, const std::vector<int>& y,
    const std::vector<std::size_t>& candidate_features);

/// As above but restricted to a row subset (which may repeat rows, as
/// bootstrap samples do).
std::optional<SplitCandidate> best_split_rows(
    const Matrix& X, const std::vector<int>& y,
    const std::vector<std::size_t>& rows,
    const std::vector<std::size_t>& candidate_features);

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<std::int64_t, 2> counts{0, 0};  // training class histogram
};

struct TreeConfig {
    std::optional<int> max_depth;  // nullopt = grow until pure
    int min_samples_split = 2;

    void validate() const;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::size_t n_features = 0;
    TreeConfig config;

    bool empty() const { return nodes.empty(); }
};

DecisionTree fit_tree(const Matrix& X, const std::vector<int>& y,
                      const TreeConfig& config = {});
Prediction predict(const DecisionTree& tree, std::span<const double> x);

/// Per-feature impurity decrease, weighted by node sample fraction and
/// normalized to sum 1 (uniform when the tree never split).
std::vector<double> feature_importances(const DecisionTree& tree);

struct ForestConfig {
    int n_estimators = 100;
    std::uint64_t seed = 0;
    std::optional<int> max_depth;
    int min_samples_split = 2;
    /// When false every tree trains on the full sample (no bagging); useful
    /// for reducing a one-tree forest to a plain decision tree.
    bool bootstrap = true;

    void validate() const;
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    /// in_bag[t][i] != 0 when training row i was drawn into tree t's
    /// bootstrap sample.
    std::vector<std::vector<std::uint8_t>> in_bag;
    std::size_t n_features = 0;
    std::size_t n_training_rows = 0;
    ForestConfig config;
};

/// Bagged trees with ceil(sqrt(d)) feature candidates per node. Tree t draws
/// from an rng derived from (seed, t), so results do not depend on build
/// order or platform.
RandomForest fit_forest(const Matrix& X, const std::vector<int>& y,
                        const ForestConfig& config = {});

/// Majority vote; score is the fraction of trees voting 1, ties predict 0.
Prediction predict(const RandomForest& forest, std::span<const double> x);

/// Mean over trees of the per-tree weighted impurity decrease, normalized
/// to sum 1 (uniform when no tree ever split).
std::vector<double> feature_importances(const RandomForest& forest);

/// Out-of-bag error: each training row is voted on only by trees that did
/// not see it; rows seen by every tree are skipped. Errors if no row has an
/// out-of-bag vote.
double oob_error(const RandomForest& forest, const Matrix& X,
                 const std::vector<int>& y);

struct BoostConfig {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int tree_depth = 3;

    void validate() const;
};

struct RegressionNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<RegressionNode> nodes;
};

double predict_value(const RegressionTree& tree, std::span<const double> x);

/// Binomial-deviance gradient boosting: depth-limited regression trees fit
/// to sigmoid residuals, leaf values taking a Newton step.
struct GradientBoosting {
    double initial_raw_score = 0.0;  // log-odds of the base rate
    std::vector<RegressionTree> stages;
    std::size_t n_features = 0;
    BoostConfig config;
};

GradientBoosting fit_gboost(const Matrix& X, const std::vector<int>& y,
                            const BoostConfig& config = {});

/// Raw additive score before the sigmoid.
double raw_score(const GradientBoosting& model, std::span<const double> x);

/// score = sigmoid(raw); label = score > 0.5.
Prediction predict(const GradientBoosting& model, std::span<const double> x);

}  // namespace falldet::trees
