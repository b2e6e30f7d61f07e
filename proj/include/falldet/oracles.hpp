#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "falldet/common.hpp"

// Slow, obviously-correct reference implementations used only by the test
// suite to cross-check the real ones. They share no code with the library
// versions on purpose.

namespace falldet::oracles {

/// Exhaustive k nearest neighbors: full sort by (distance, index), majority
/// vote.
int knn_label(const Matrix& train, const std::vector<int>& labels,
              std::span<const double> query, int k);

/// Pairwise ranking AUC: fraction of positive/negative pairs ranked
/// correctly, ties counting one half.
double pairwise_auc(const std::vector<int>& y_true,
                    const std::vector<double>& scores);

/// Plain recursive greedy CART on pointers, with its own exact-rational
/// split comparison.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
    int label = 0;
    double score = 0.0;
};

struct Tree {
    std::unique_ptr<TreeNode> root;
};

Tree greedy_tree(const Matrix& X, const std::vector<int>& y,
                 std::optional<int> max_depth = std::nullopt);

int tree_label(const Tree& tree, std::span<const double> x);
double tree_score(const Tree& tree, std::span<const double> x);

}  // namespace falldet::oracles
