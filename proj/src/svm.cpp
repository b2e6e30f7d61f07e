#include "falldet/classifiers.hpp"

#include <algorithm>
#include <cmath>

#include "falldet/kernels.hpp"

namespace falldet::classifiers {

void SvmConfig::validate() const {
    require(std::isfinite(C) && C > 0.0, "svm: C must be positive");
    require(std::isfinite(kkt_tol) && kkt_tol > 0.0,
            "svm: kkt_tol must be positive");
}

namespace {

void check_binary_training_data(const Matrix& X, const std::vector<int>& y,
                                const char* who) {
    require(X.rows > 0 && X.cols > 0,
            std::string(who) + ": empty training data");
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

double scale_gamma(const Matrix& X) {
    const std::size_t n = X.data.size();
    const double mean = kernels::sum(X.data.data(), n) / static_cast<double>(n);
    double acc = 0.0;
    for (const double v : X.data) acc += (v - mean) * (v - mean);
    const double var = acc / static_cast<double>(n);
    require(var > 0.0, "svm: training features have zero variance");
    return 1.0 / (static_cast<double>(X.cols) * var);
}

constexpr double kAlphaEps = 1e-8;
constexpr double kStepEps = 1e-12;

/// Sequential minimal optimization for the soft-margin RBF dual. The
/// heuristics follow Platt's two-loop structure, with every scan running in
/// index order so a fit is reproducible.
struct Smo {
    const Matrix& X;
    std::vector<double> y;  // +-1
    double C;
    double tol;
    double gamma;
    std::vector<double> alpha;
    std::vector<double> error;  // E_i = f(x_i) - y_i, kept incrementally
    double b = 0.0;
    Matrix cache;  // full kernel matrix when it fits
    bool cached = false;

    Smo(const Matrix& x_in, const std::vector<int>& labels,
        const SvmConfig& config, double gamma_in)
        : X(x_in), C(config.C), tol(config.kkt_tol), gamma(gamma_in) {
        const std::size_t n = X.rows;
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] ? 1.0 : -1.0;
        alpha.assign(n, 0.0);
        error.resize(n);
        for (std::size_t i = 0; i < n; ++i) error[i] = -y[i];
        cached = n <= 4096;
        if (cached) {
            cache = Matrix(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                cache.at(i, i) = 1.0;
                for (std::size_t j = i + 1; j < n; ++j) {
                    const double k = std::exp(
                        -gamma * kernels::squared_distance(X.row(i), X.row(j),
                                                           X.cols));
                    cache.at(i, j) = k;
                    cache.at(j, i) = k;
                }
            }
        }
    }

    double kern(std::size_t i, std::size_t j) const {
        if (cached) return cache.at(i, j);
        if (i == j) return 1.0;
        return std::exp(-gamma *
                        kernels::squared_distance(X.row(i), X.row(j), X.cols));
    }

    bool non_bound(std::size_t i) const {
        return alpha[i] > kAlphaEps && alpha[i] < C - kAlphaEps;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alpha[i1], a2 = alpha[i2];
        const double y1 = y[i1], y2 = y[i2];
        const double e1 = error[i1], e2 = error[i2];
        const double s = y1 * y2;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(C, C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - C);
            hi = std::min(C, a1 + a2);
        }
        if (lo >= hi) return false;

        const double k11 = kern(i1, i1);
        const double k12 = kern(i1, i2);
        const double k22 = kern(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > kStepEps) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::clamp(a2_new, lo, hi);
        } else {
            // Flat direction: compare the objective at both clip ends.
            const double f1 = y1 * (e1 + b) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 + b) - s * a1 * k12 - a2 * k22;
            const double l1 = a1 + s * (a2 - lo);
            const double h1 = a1 + s * (a2 - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                                  0.5 * lo * lo * k22 + s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                                  0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if (obj_lo < obj_hi - kStepEps) {
                a2_new = lo;
            } else if (obj_lo > obj_hi + kStepEps) {
                a2_new = hi;
            } else {
                return false;
            }
        }
        if (std::abs(a2_new - a2) < kStepEps * (a2_new + a2 + kStepEps)) {
            return false;
        }

        double a1_new = a1 + s * (a2 - a2_new);
        a1_new = std::clamp(a1_new, 0.0, C);

        const double d1 = y1 * (a1_new - a1);
        const double d2 = y2 * (a2_new - a2);
        const double b1 = b - e1 - d1 * k11 - d2 * k12;
        const double b2 = b - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1_new > kAlphaEps && a1_new < C - kAlphaEps) {
            b_new = b1;
        } else if (a2_new > kAlphaEps && a2_new < C - kAlphaEps) {
            b_new = b2;
        } else {
            b_new = 0.5 * (b1 + b2);
        }
        const double db = b_new - b;

        for (std::size_t k = 0; k < error.size(); ++k) {
            error[k] += d1 * kern(i1, k) + d2 * kern(i2, k) + db;
        }
        alpha[i1] = a1_new;
        alpha[i2] = a2_new;
        b = b_new;
        return true;
    }

    int examine(std::size_t i2) {
        const double y2 = y[i2];
        const double a2 = alpha[i2];
        const double e2 = error[i2];
        const double r2 = e2 * y2;
        const bool violates = (r2 < -tol && a2 < C - kAlphaEps) ||
                              (r2 > tol && a2 > kAlphaEps);
        if (!violates) return 0;

        // Second-choice heuristic: the partner with the largest |E1 - E2|
        // among non-bound points, lowest index on ties.
        std::size_t best = i2;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (!non_bound(i)) continue;
            const double gap = std::abs(error[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best != i2 && take_step(best, i2)) return 1;

        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (non_bound(i) && take_step(i, i2)) return 1;
        }
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (take_step(i, i2)) return 1;
        }
        return 0;
    }

    void solve() {
        bool examine_all = true;
        int changed = 0;
        long long passes = 0;
        while (changed > 0 || examine_all) {
            if (++passes > 100000) {
                throw std::runtime_error("svm: optimizer did not converge");
            }
            changed = 0;
            for (std::size_t i = 0; i < alpha.size(); ++i) {
                if (examine_all || non_bound(i)) changed += examine(i);
            }
            if (examine_all) {
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
    }
};

}  // namespace

SvmModel fit_svm(const Matrix& X, const std::vector<int>& y,
                 const SvmConfig& config) {
    config.validate();
    check_binary_training_data(X, y, "svm");

    SvmModel model;
    model.config = config;
    model.n_features = X.cols;
    model.gamma = scale_gamma(X);

    Smo smo(X, y, config, model.gamma);
    smo.solve();
    model.bias = smo.b;

    std::size_t n_sv = 0;
    for (const double a : smo.alpha) n_sv += a > kAlphaEps;
    model.support_vectors = Matrix(n_sv, X.cols);
    model.alpha_y.reserve(n_sv);
    std::size_t at = 0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        if (smo.alpha[i] <= kAlphaEps) continue;
        std::copy_n(X.row(i), X.cols, model.support_vectors.row(at++));
        model.alpha_y.push_back(smo.alpha[i] * smo.y[i]);
    }
    return model;
}

double decision_function(const SvmModel& model, std::span<const double> x) {
    require(x.size() == model.n_features, "svm: feature width mismatch");
    double acc = model.bias;
    for (std::size_t i = 0; i < model.alpha_y.size(); ++i) {
        acc += model.alpha_y[i] *
               std::exp(-model.gamma *
                        kernels::squared_distance(model.support_vectors.row(i),
                                                  x.data(), x.size()));
    }
    return acc;
}

double kkt_violation(const SvmModel& model, const Matrix& X,
                     const std::vector<int>& y) {
    check_binary_training_data(X, y, "svm");
    require(X.cols == model.n_features, "svm: feature width mismatch");

    // Reconstruct each row's alpha: support vectors carry |alpha_y|, other
    // rows sit at zero. Rows are matched to support vectors in order.
    std::vector<double> alpha(X.rows, 0.0);
    std::size_t sv = 0;
    for (std::size_t i = 0; i < X.rows && sv < model.alpha_y.size(); ++i) {
        if (std::equal(X.row(i), X.row(i) + X.cols,
                       model.support_vectors.row(sv))) {
            alpha[i] = std::abs(model.alpha_y[sv]);
            ++sv;
        }
    }
    require(sv == model.alpha_y.size(),
            "svm: model was not fit on this training matrix");

    double worst = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double yf = (y[i] ? 1.0 : -1.0) * decision_function(model, X.row_span(i));
        double violation = 0.0;
        if (alpha[i] <= kAlphaEps) {
            violation = std::max(0.0, 1.0 - yf);
        } else if (alpha[i] >= model.config.C - kAlphaEps) {
            violation = std::max(0.0, yf - 1.0);
        } else {
            violation = std::abs(yf - 1.0);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

Prediction predict(const SvmModel& model, std::span<const double> x) {
    const double margin = decision_function(model, x);
    return {margin > 0.0 ? 1 : 0, margin};
}

}  // namespace falldet::classifiers
