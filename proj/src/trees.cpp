#include "falldet/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "falldet/rng.hpp"

namespace falldet::trees {

double gini(const ClassDistribution& dist) {
    const std::int64_t n = dist.total();
    require(dist.counts[0] >= 0 && dist.counts[1] >= 0,
            "gini: negative class count");
    require(n > 0, "gini: empty distribution");
    const double p0 = static_cast<double>(dist.counts[0]) / static_cast<double>(n);
    const double p1 = static_cast<double>(dist.counts[1]) / static_cast<double>(n);
    return 1.0 - (p0 * p0 + p1 * p1);
}

void TreeConfig::validate() const {
    require(min_samples_split >= 2, "tree: min_samples_split must be >= 2");
    require(!max_depth || *max_depth >= 0, "tree: negative max_depth");
}

void ForestConfig::validate() const {
    require(n_estimators >= 1, "forest: n_estimators must be >= 1");
    require(min_samples_split >= 2, "forest: min_samples_split must be >= 2");
    require(!max_depth || *max_depth >= 0, "forest: negative max_depth");
}

void BoostConfig::validate() const {
    require(n_estimators >= 0, "gboost: negative n_estimators");
    require(std::isfinite(learning_rate) && learning_rate > 0.0,
            "gboost: learning_rate must be positive");
    require(tree_depth >= 1, "gboost: tree_depth must be >= 1");
}

namespace {

using i128 = __int128;

/// Split quality as an exact rational. Maximizing
///   ((nL0^2 + nL1^2) * nR + (nR0^2 + nR1^2) * nL) / (nL * nR)
/// is equivalent to minimizing the weighted Gini of the children, and the
/// integer form lets candidates be compared without rounding, so threshold
/// ties are broken the same way on every platform.
struct SplitScore {
    i128 num = 0;
    std::int64_t den = 1;
};

SplitScore score_split(const ClassDistribution& left,
                       const ClassDistribution& right) {
    const i128 l0 = left.counts[0], l1 = left.counts[1];
    const i128 r0 = right.counts[0], r1 = right.counts[1];
    const i128 nl = l0 + l1, nr = r0 + r1;
    SplitScore s;
    s.num = (l0 * l0 + l1 * l1) * nr + (r0 * r0 + r1 * r1) * nl;
    s.den = static_cast<std::int64_t>(nl * nr);
    return s;
}

bool better(const SplitScore& a, const SplitScore& b) {
    return a.num * b.den > b.num * a.den;
}

/// Strict improvement over the parent's own impurity.
bool improves_parent(const SplitScore& s, const ClassDistribution& parent) {
    const i128 c0 = parent.counts[0], c1 = parent.counts[1];
    const i128 n = c0 + c1;
    return s.num * n > (c0 * c0 + c1 * c1) * static_cast<i128>(s.den);
}

double decrease_for(const SplitScore& s, const ClassDistribution& parent) {
    const double n = static_cast<double>(parent.total());
    const double parent_sq =
        static_cast<double>(parent.counts[0]) * static_cast<double>(parent.counts[0]) +
        static_cast<double>(parent.counts[1]) * static_cast<double>(parent.counts[1]);
    // Weighted child Gini = 1 - num / (den * n); parent Gini = 1 - sq / n^2.
    return static_cast<double>(s.num) / (static_cast<double>(s.den) * n) -
           parent_sq / (n * n);
}

std::vector<std::size_t> checked_candidates(
    const Matrix& X, const std::vector<std::size_t>& candidate_features) {
    require(!candidate_features.empty(), "split: no candidate features");
    std::vector<std::size_t> features = candidate_features;
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()),
                   features.end());
    require(features.back() < X.cols,
            "split: candidate feature out of range");
    return features;
}

}  // namespace

std::optional<SplitCandidate> best_split_rows(
    const Matrix& X, const std::vector<int>& y,
    const std::vector<std::size_t>& rows,
    const std::vector<std::size_t>& candidate_features) {
    require(rows.size() >= 2, "split: need at least two rows");
    const auto features = checked_candidates(X, candidate_features);

    ClassDistribution parent;
    for (const std::size_t i : rows) {
        ++parent.counts[static_cast<std::size_t>(y[i])];
    }
    if (parent.counts[0] == 0 || parent.counts[1] == 0) return std::nullopt;

    std::optional<SplitCandidate> best;
    SplitScore best_score;
    std::vector<std::pair<double, int>> ordered(rows.size());

    for (const std::size_t f : features) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            ordered[k] = {X.at(rows[k], f), y[rows[k]]};
        }
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        ClassDistribution left;
        for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
            ++left.counts[static_cast<std::size_t>(ordered[k].second)];
            const double v1 = ordered[k].first;
            const double v2 = ordered[k + 1].first;
            if (!(v1 < v2)) continue;

            const ClassDistribution right{
                {parent.counts[0] - left.counts[0],
                 parent.counts[1] - left.counts[1]}};
            const SplitScore score = score_split(left, right);
            if (!improves_parent(score, parent)) continue;
            if (best && !better(score, best_score)) continue;

            double threshold = v1 + (v2 - v1) / 2.0;
            // Guard against the midpoint rounding up onto v2, which would
            // pull v2 into the left branch.
            if (!(threshold < v2)) threshold = v1;
            best = SplitCandidate{f, threshold, decrease_for(score, parent)};
            best_score = score;
        }
    }
    return best;
}

std::optional<SplitCandidate> best_split(
    const Matrix& X, const std::vector<int>& y,
    const std::vector<std::size_t>& candidate_features) {
    require(X.rows == y.size(), "split: row count != label count");
    std::vector<std::size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return best_split_rows(X, y, rows, candidate_features);
}

namespace {

void check_training_data(const Matrix& X, const std::vector<int>& y) {
    require(X.rows > 0, "fit: empty training data");
    require(X.cols > 0, "fit: no features");
    require(X.rows == y.size(), "fit: row count != label count");
    for (const int label : y) {
        require(label == 0 || label == 1, "fit: labels must be 0 or 1");
    }
    for (const double v : X.data) {
        require(std::isfinite(v),
                "fit: non-finite feature value, impute before training");
    }
}

std::size_t sqrt_features(std::size_t d) {
    std::size_t m = 1;
    while (m * m < d) ++m;
    return m;
}

/// Distinct feature indices drawn without replacement, returned sorted so
/// the lowest-index tie-break is stable.
std::vector<std::size_t> draw_features(Rng& rng, std::size_t d,
                                       std::size_t mtry) {
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + rng.bounded(d - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(mtry);
    std::sort(pool.begin(), pool.end());
    return pool;
}

struct GrowContext {
    const Matrix& X;
    const std::vector<int>& y;
    TreeConfig config;
    Rng* rng = nullptr;  // when set, each node samples `mtry` features
    std::size_t mtry = 0;
    std::vector<TreeNode>* nodes = nullptr;
};

std::int32_t grow(GrowContext& ctx, std::vector<std::size_t> rows, int depth) {
    TreeNode node;
    for (const std::size_t i : rows) {
        ++node.counts[static_cast<std::size_t>(ctx.y[i])];
    }
    const auto idx = static_cast<std::int32_t>(ctx.nodes->size());
    ctx.nodes->push_back(node);

    const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
    const bool at_depth_cap =
        ctx.config.max_depth && depth >= *ctx.config.max_depth;
    if (pure || at_depth_cap ||
        rows.size() < static_cast<std::size_t>(ctx.config.min_samples_split)) {
        return idx;
    }

    std::vector<std::size_t> candidates;
    if (ctx.rng) {
        candidates = draw_features(*ctx.rng, ctx.X.cols, ctx.mtry);
    } else {
        candidates.resize(ctx.X.cols);
        std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    }
    const auto split = best_split_rows(ctx.X, ctx.y, rows, candidates);
    if (!split) return idx;

    std::vector<std::size_t> left_rows, right_rows;
    for (const std::size_t i : rows) {
        (ctx.X.at(i, split->feature) <= split->threshold ? left_rows
                                                         : right_rows)
            .push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();

    const std::int32_t left = grow(ctx, std::move(left_rows), depth + 1);
    const std::int32_t right = grow(ctx, std::move(right_rows), depth + 1);
    TreeNode& self = (*ctx.nodes)[idx];
    self.feature = static_cast<std::int32_t>(split->feature);
    self.threshold = split->threshold;
    self.left = left;
    self.right = right;
    return idx;
}

}  // namespace

DecisionTree fit_tree(const Matrix& X, const std::vector<int>& y,
                      const TreeConfig& config) {
    config.validate();
    check_training_data(X, y);

    DecisionTree tree;
    tree.n_features = X.cols;
    tree.config = config;
    std::vector<std::size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    GrowContext ctx{X, y, config, nullptr, 0, &tree.nodes};
    grow(ctx, std::move(rows), 0);
    return tree;
}

Prediction predict(const DecisionTree& tree, std::span<const double> x) {
    require(!tree.empty(), "tree: not fitted");
    require(x.size() == tree.n_features, "tree: feature width mismatch");
    std::size_t at = 0;
    while (tree.nodes[at].feature >= 0) {
        const TreeNode& node = tree.nodes[at];
        at = static_cast<std::size_t>(
            x[static_cast<std::size_t>(node.feature)] <= node.threshold
                ? node.left
                : node.right);
    }
    const TreeNode& leaf = tree.nodes[at];
    const double total = static_cast<double>(leaf.counts[0] + leaf.counts[1]);
    const double score = static_cast<double>(leaf.counts[1]) / total;
    return {score > 0.5 ? 1 : 0, score};
}

namespace {

std::vector<double> raw_importances(const DecisionTree& tree) {
    std::vector<double> gains(tree.n_features, 0.0);
    if (tree.empty()) return gains;
    const double n_root =
        static_cast<double>(tree.nodes[0].counts[0] + tree.nodes[0].counts[1]);
    for (const TreeNode& node : tree.nodes) {
        if (node.feature < 0) continue;
        const ClassDistribution parent{{node.counts[0], node.counts[1]}};
        const auto& left = tree.nodes[static_cast<std::size_t>(node.left)];
        const auto& right = tree.nodes[static_cast<std::size_t>(node.right)];
        const SplitScore score =
            score_split({{left.counts[0], left.counts[1]}},
                        {{right.counts[0], right.counts[1]}});
        const double weight = static_cast<double>(parent.total()) / n_root;
        gains[static_cast<std::size_t>(node.feature)] +=
            weight * decrease_for(score, parent);
    }
    return gains;
}

void normalize_importances(std::vector<double>& gains) {
    double total = 0.0;
    for (const double g : gains) total += g;
    if (total <= 0.0) {
        const double uniform = 1.0 / static_cast<double>(gains.size());
        std::fill(gains.begin(), gains.end(), uniform);
        return;
    }
    for (double& g : gains) g /= total;
}

}  // namespace

std::vector<double> feature_importances(const DecisionTree& tree) {
    require(!tree.empty(), "tree: not fitted");
    auto gains = raw_importances(tree);
    normalize_importances(gains);
    return gains;
}

RandomForest fit_forest(const Matrix& X, const std::vector<int>& y,
                        const ForestConfig& config) {
    config.validate();
    check_training_data(X, y);

    RandomForest forest;
    forest.config = config;
    forest.n_features = X.cols;
    forest.n_training_rows = X.rows;
    const std::size_t n = X.rows;
    const std::size_t mtry = sqrt_features(X.cols);
    const TreeConfig tree_config{config.max_depth, config.min_samples_split};

    for (int t = 0; t < config.n_estimators; ++t) {
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows;
        std::vector<std::uint8_t> mask(n, 0);
        rows.reserve(n);
        if (config.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t pick = rng.bounded(n);
                rows.push_back(pick);
                mask[pick] = 1;
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) rows.push_back(i);
            std::fill(mask.begin(), mask.end(), std::uint8_t{1});
        }

        DecisionTree tree;
        tree.n_features = X.cols;
        tree.config = tree_config;
        GrowContext ctx{X, y, tree_config, &rng, mtry, &tree.nodes};
        grow(ctx, std::move(rows), 0);
        forest.trees.push_back(std::move(tree));
        forest.in_bag.push_back(std::move(mask));
    }
    return forest;
}

Prediction predict(const RandomForest& forest, std::span<const double> x) {
    require(!forest.trees.empty(), "forest: not fitted");
    std::int64_t ones = 0;
    for (const DecisionTree& tree : forest.trees) {
        ones += predict(tree, x).label;
    }
    const auto total = static_cast<std::int64_t>(forest.trees.size());
    const double score =
        static_cast<double>(ones) / static_cast<double>(total);
    // Integer majority test keeps the tie-to-0 rule exact.
    return {2 * ones > total ? 1 : 0, score};
}

std::vector<double> feature_importances(const RandomForest& forest) {
    require(!forest.trees.empty(), "forest: not fitted");
    std::vector<double> gains(forest.n_features, 0.0);
    for (const DecisionTree& tree : forest.trees) {
        const auto tree_gains = raw_importances(tree);
        for (std::size_t j = 0; j < gains.size(); ++j) {
            gains[j] += tree_gains[j];
        }
    }
    for (double& g : gains) g /= static_cast<double>(forest.trees.size());
    normalize_importances(gains);
    return gains;
}

double oob_error(const RandomForest& forest, const Matrix& X,
                 const std::vector<int>& y) {
    require(!forest.trees.empty(), "forest: not fitted");
    require(X.rows == forest.n_training_rows && X.rows == y.size(),
            "oob: matrix does not match the training data shape");
    require(X.cols == forest.n_features, "oob: feature width mismatch");

    std::size_t considered = 0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        std::int64_t votes[2] = {0, 0};
        for (std::size_t t = 0; t < forest.trees.size(); ++t) {
            if (forest.in_bag[t][i]) continue;
            ++votes[predict(forest.trees[t], X.row_span(i)).label];
        }
        if (votes[0] + votes[1] == 0) continue;  // seen by every tree
        const int pred = votes[1] > votes[0] ? 1 : 0;
        ++considered;
        if (pred != y[i]) ++wrong;
    }
    require(considered > 0, "oob: no sample has an out-of-bag vote");
    return static_cast<double>(wrong) / static_cast<double>(considered);
}

namespace {

struct RegGrowContext {
    const Matrix& X;
    const std::vector<double>& residual;
    const std::vector<double>& hessian;
    int max_depth = 3;
    std::vector<RegressionNode>* nodes = nullptr;
};

std::int32_t grow_reg(RegGrowContext& ctx, std::vector<std::size_t> rows,
                      int depth) {
    const auto idx = static_cast<std::int32_t>(ctx.nodes->size());
    ctx.nodes->push_back({});

    auto make_leaf = [&]() {
        double num = 0.0, den = 0.0;
        for (const std::size_t i : rows) {
            num += ctx.residual[i];
            den += ctx.hessian[i];
        }
        // Newton step for binomial deviance; the denominator collapses when
        // the leaf is already saturated.
        (*ctx.nodes)[idx].value = num / std::max(den, 1e-12);
        return idx;
    };

    if (depth >= ctx.max_depth || rows.size() < 2) return make_leaf();

    // Variance-reduction split: maximize sumL^2/nL + sumR^2/nR - sumP^2/nP.
    double total = 0.0;
    for (const std::size_t i : rows) total += ctx.residual[i];
    const double parent_term =
        total * total / static_cast<double>(rows.size());

    double best_gain = 1e-12;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;
    std::vector<std::pair<double, double>> ordered(rows.size());

    for (std::size_t f = 0; f < ctx.X.cols; ++f) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            ordered[k] = {ctx.X.at(rows[k], f), ctx.residual[rows[k]]};
        }
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
            left_sum += ordered[k].second;
            const double v1 = ordered[k].first;
            const double v2 = ordered[k + 1].first;
            if (!(v1 < v2)) continue;
            const double nl = static_cast<double>(k + 1);
            const double nr = static_cast<double>(ordered.size() - k - 1);
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / nl +
                                right_sum * right_sum / nr - parent_term;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = f;
                double threshold = v1 + (v2 - v1) / 2.0;
                if (!(threshold < v2)) threshold = v1;
                best_threshold = threshold;
                found = true;
            }
        }
    }
    if (!found) return make_leaf();

    std::vector<std::size_t> left_rows, right_rows;
    for (const std::size_t i : rows) {
        (ctx.X.at(i, best_feature) <= best_threshold ? left_rows : right_rows)
            .push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();

    const std::int32_t left = grow_reg(ctx, std::move(left_rows), depth + 1);
    const std::int32_t right = grow_reg(ctx, std::move(right_rows), depth + 1);
    RegressionNode& self = (*ctx.nodes)[idx];
    self.feature = static_cast<std::int32_t>(best_feature);
    self.threshold = best_threshold;
    self.left = left;
    self.right = right;
    return idx;
}

}  // namespace

double predict_value(const RegressionTree& tree, std::span<const double> x) {
    require(!tree.nodes.empty(), "regression tree: not fitted");
    std::size_t at = 0;
    while (tree.nodes[at].feature >= 0) {
        const RegressionNode& node = tree.nodes[at];
        at = static_cast<std::size_t>(
            x[static_cast<std::size_t>(node.feature)] <= node.threshold
                ? node.left
                : node.right);
    }
    return tree.nodes[at].value;
}

GradientBoosting fit_gboost(const Matrix& X, const std::vector<int>& y,
                            const BoostConfig& config) {
    config.validate();
    check_training_data(X, y);

    std::int64_t positives = 0;
    for (const int label : y) positives += label;
    require(positives > 0 && positives < static_cast<std::int64_t>(y.size()),
            "gboost: training data must contain both classes");

    GradientBoosting model;
    model.config = config;
    model.n_features = X.cols;
    const double base_rate =
        static_cast<double>(positives) / static_cast<double>(y.size());
    model.initial_raw_score = std::log(base_rate / (1.0 - base_rate));

    const std::size_t n = X.rows;
    std::vector<double> raw(n, model.initial_raw_score);
    std::vector<double> residual(n), hessian(n);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

    for (int m = 0; m < config.n_estimators; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            residual[i] = static_cast<double>(y[i]) - p;
            hessian[i] = p * (1.0 - p);
        }
        RegressionTree tree;
        RegGrowContext ctx{X, residual, hessian, config.tree_depth,
                           &tree.nodes};
        grow_reg(ctx, all_rows, 0);
        for (std::size_t i = 0; i < n; ++i) {
            raw[i] += config.learning_rate * predict_value(tree, X.row_span(i));
        }
        model.stages.push_back(std::move(tree));
    }
    return model;
}

double raw_score(const GradientBoosting& model, std::span<const double> x) {
    require(x.size() == model.n_features, "gboost: feature width mismatch");
    double raw = model.initial_raw_score;
    for (const RegressionTree& tree : model.stages) {
        raw += model.config.learning_rate * predict_value(tree, x);
    }
    return raw;
}

Prediction predict(const GradientBoosting& model, std::span<const double> x) {
    const double score = sigmoid(raw_score(model, x));
    return {score > 0.5 ? 1 : 0, score};
}

}  // namespace falldet::trees
