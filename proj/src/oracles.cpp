#include "falldet/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace falldet::oracles {

int knn_label(const Matrix& train, const std::vector<int>& labels,
              std::span<const double> query, int k) {
    require(k >= 1 && static_cast<std::size_t>(k) <= train.rows,
            "oracle knn: bad k");
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < train.rows; ++i) {
        double dist = 0.0;
        for (std::size_t j = 0; j < train.cols; ++j) {
            const double diff = train.at(i, j) - query[j];
            dist += diff * diff;
        }
        ranked.emplace_back(dist, i);
    }
    std::sort(ranked.begin(), ranked.end());
    int ones = 0;
    for (int j = 0; j < k; ++j) ones += labels[ranked[j].second];
    return 2 * ones > k ? 1 : 0;
}

double pairwise_auc(const std::vector<int>& y_true,
                    const std::vector<double>& scores) {
    std::int64_t wins2 = 0;  // 2 per win, 1 per tie
    std::int64_t pairs = 0;
    for (std::size_t p = 0; p < y_true.size(); ++p) {
        if (y_true[p] != 1) continue;
        for (std::size_t n = 0; n < y_true.size(); ++n) {
            if (y_true[n] != 0) continue;
            ++pairs;
            if (scores[p] > scores[n]) {
                wins2 += 2;
            } else if (scores[p] == scores[n]) {
                wins2 += 1;
            }
        }
    }
    require(pairs > 0, "oracle auc: needs both classes");
    return static_cast<double>(wins2) / (2.0 * static_cast<double>(pairs));
}

namespace {

struct Counts {
    std::int64_t zero = 0;
    std::int64_t one = 0;
    std::int64_t total() const { return zero + one; }
};

Counts count_of(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
    Counts c;
    for (const std::size_t i : rows) {
        if (y[i]) ++c.one; else ++c.zero;
    }
    return c;
}

/// Candidate quality as the exact rational
///   [(l0^2+l1^2) * nr + (r0^2+r1^2) * nl] / (nl * nr),
/// compared by int64 cross products. Fixture sizes stay far below overflow.
struct Quality {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

Quality quality_of(const Counts& l, const Counts& r) {
    const std::int64_t nl = l.total(), nr = r.total();
    return {(l.zero * l.zero + l.one * l.one) * nr +
                (r.zero * r.zero + r.one * r.one) * nl,
            nl * nr};
}

bool strictly_better(const Quality& a, const Quality& b) {
    return a.num * b.den > b.num * a.den;
}

bool beats_parent(const Quality& q, const Counts& parent) {
    const std::int64_t n = parent.total();
    return q.num * n >
           (parent.zero * parent.zero + parent.one * parent.one) * q.den;
}

std::unique_ptr<TreeNode> build(const Matrix& X, const std::vector<int>& y,
                                const std::vector<std::size_t>& rows,
                                std::optional<int> max_depth, int depth) {
    auto node = std::make_unique<TreeNode>();
    const Counts counts = count_of(y, rows);
    node->label = counts.one > counts.zero ? 1 : 0;
    node->score =
        static_cast<double>(counts.one) / static_cast<double>(counts.total());

    if (counts.zero == 0 || counts.one == 0 || rows.size() < 2 ||
        (max_depth && depth >= *max_depth)) {
        return node;
    }

    bool found = false;
    Quality best_quality;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::vector<double> values;
        for (const std::size_t i : rows) values.push_back(X.at(i, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            double threshold = values[v] + (values[v + 1] - values[v]) / 2.0;
            if (!(threshold < values[v + 1])) threshold = values[v];
            Counts left, right;
            for (const std::size_t i : rows) {
                if (X.at(i, f) <= threshold) {
                    if (y[i]) ++left.one; else ++left.zero;
                } else {
                    if (y[i]) ++right.one; else ++right.zero;
                }
            }
            const Quality q = quality_of(left, right);
            if (!beats_parent(q, counts)) continue;
            if (found && !strictly_better(q, best_quality)) continue;
            found = true;
            best_quality = q;
            best_feature = f;
            best_threshold = threshold;
        }
    }
    if (!found) return node;

    std::vector<std::size_t> left_rows, right_rows;
    for (const std::size_t i : rows) {
        if (X.at(i, best_feature) <= best_threshold) {
            left_rows.push_back(i);
        } else {
            right_rows.push_back(i);
        }
    }
    node->feature = static_cast<int>(best_feature);
    node->threshold = best_threshold;
    node->left = build(X, y, left_rows, max_depth, depth + 1);
    node->right = build(X, y, right_rows, max_depth, depth + 1);
    return node;
}

const TreeNode* descend(const Tree& tree, std::span<const double> x) {
    const TreeNode* node = tree.root.get();
    require(node != nullptr, "oracle tree: empty");
    while (node->feature >= 0) {
        node = x[static_cast<std::size_t>(node->feature)] <= node->threshold
                   ? node->left.get()
                   : node->right.get();
    }
    return node;
}

}  // namespace

Tree greedy_tree(const Matrix& X, const std::vector<int>& y,
                 std::optional<int> max_depth) {
    require(X.rows > 0 && X.rows == y.size(), "oracle tree: bad input");
    std::vector<std::size_t> rows(X.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    Tree tree;
    tree.root = build(X, y, rows, max_depth, 0);
    return tree;
}

int tree_label(const Tree& tree, std::span<const double> x) {
    return descend(tree, x)->label;
}

double tree_score(const Tree& tree, std::span<const double> x) {
    return descend(tree, x)->score;
}

}  // namespace falldet::oracles
