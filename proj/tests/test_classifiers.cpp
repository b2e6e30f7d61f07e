#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "falldet/classifiers.hpp"
#include "falldet/oracles.hpp"
#include "falldet/rng.hpp"

using namespace falldet;

namespace {

struct Problem {
    Matrix X;
    std::vector<int> y;
};

// two gaussian blobs, linearly separable with margin
Problem blobs(Rng& rng, std::size_t n_per_class, double spread = 0.3) {
    Problem p;
    p.X = Matrix(2 * n_per_class, 2);
    p.y.resize(2 * n_per_class);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        const int label = i < n_per_class ? 0 : 1;
        const double cx = label == 0 ? -2.0 : 2.0;
        p.X.at(i, 0) = cx + spread * rng.normal();
        p.X.at(i, 1) = cx + spread * rng.normal();
        p.y[i] = label;
    }
    return p;
}

}  // namespace

TEST_CASE("svm on two mirrored points recovers the analytic solution") {
    Matrix X(2, 1);
    X.at(0, 0) = -1.0;
    X.at(1, 0) = 1.0;
    const std::vector<int> y = {0, 1};
    const auto model = classifiers::fit_svm(X, y);

    CHECK(model.gamma == doctest::Approx(1.0));
    CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-9));
    REQUIRE(model.alpha_y.size() == 2);
    // both points sit at the box constraint C=1
    CHECK(std::abs(model.alpha_y[0]) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(model.alpha_y[1]) == doctest::Approx(1.0).epsilon(1e-6));

    const std::vector<double> origin = {0.0};
    const std::vector<double> right = {1.0};
    CHECK(classifiers::decision_function(model, origin) ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(classifiers::decision_function(model, right) ==
          doctest::Approx(1.0 - std::exp(-4.0)).epsilon(1e-6));

    // a zero margin is not an impact
    CHECK(classifiers::predict(model, origin).label == 0);
    CHECK(classifiers::predict(model, right).label == 1);
    CHECK(classifiers::kkt_violation(model, X, y) <= 1e-3);
}

TEST_CASE("svm separates gaussian blobs and satisfies its kkt tolerance") {
    Rng rng(3);
    const auto p = blobs(rng, 20);
    const auto model = classifiers::fit_svm(p.X, p.y);
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        CHECK(classifiers::predict(model, p.X.row_span(i)).label == p.y[i]);
    }
    CHECK(classifiers::kkt_violation(model, p.X, p.y) <= 1e-3);
}

TEST_CASE("logreg analytic gradient matches central differences") {
    Rng rng(5);
    const auto p = blobs(rng, 10, 1.5);
    std::vector<double> w = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    double b = rng.uniform(-1, 1);
    const double C = 1.0;

    const auto grad = classifiers::logreg_gradient(w, b, C, p.X, p.y);
    REQUIRE(grad.size() == 3);

    const double h = 1e-6;
    auto loss_at = [&](const std::vector<double>& wq, double bq) {
        classifiers::LogRegModel m;
        m.weights = wq;
        m.bias = bq;
        return classifiers::logreg_loss(m, p.X, p.y);
    };
    for (std::size_t j = 0; j < 2; ++j) {
        auto hi = w, lo = w;
        hi[j] += h;
        lo[j] -= h;
        const double numeric = (loss_at(hi, b) - loss_at(lo, b)) / (2 * h);
        CHECK(grad[j] == doctest::Approx(numeric).epsilon(1e-6));
    }
    const double numeric_b = (loss_at(w, b + h) - loss_at(w, b - h)) / (2 * h);
    CHECK(grad[2] == doctest::Approx(numeric_b).epsilon(1e-6));
}

TEST_CASE("logreg converges to a stationary point and classifies the blobs") {
    Rng rng(6);
    const auto p = blobs(rng, 15);
    const auto model = classifiers::fit_logreg(p.X, p.y);
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        CHECK(classifiers::predict(model, p.X.row_span(i)).label == p.y[i]);
    }
    const auto grad = classifiers::logreg_gradient(
        model.weights, model.bias, model.config.C, p.X, p.y);
    double inf = 0.0;
    for (const double g : grad) inf = std::max(inf, std::abs(g));
    CHECK(inf < 1e-6);
}

TEST_CASE("stronger regularization shrinks logreg weights") {
    Rng rng(7);
    const auto p = blobs(rng, 15);
    classifiers::LogRegConfig loose;
    loose.C = 100.0;
    classifiers::LogRegConfig tight;
    tight.C = 0.01;
    const auto big = classifiers::fit_logreg(p.X, p.y, loose);
    const auto small = classifiers::fit_logreg(p.X, p.y, tight);
    const double norm_big = std::hypot(big.weights[0], big.weights[1]);
    const double norm_small = std::hypot(small.weights[0], small.weights[1]);
    CHECK(norm_small < norm_big);
}

TEST_CASE("sgd hinge classifier is seed-deterministic") {
    Rng rng(8);
    const auto p = blobs(rng, 20);
    const auto a = classifiers::fit_sgd(p.X, p.y);
    const auto b = classifiers::fit_sgd(p.X, p.y);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.epochs_run == b.epochs_run);
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        CHECK(classifiers::predict(a, p.X.row_span(i)).label == p.y[i]);
    }

    classifiers::SgdConfig other;
    other.seed = 99;
    const auto c = classifiers::fit_sgd(p.X, p.y, other);
    CHECK(a.weights != c.weights);
}

TEST_CASE("knn votes match the exhaustive oracle") {
    Rng rng(9);
    Matrix X(60, 3);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        for (std::size_t j = 0; j < 3; ++j) X.at(i, j) = rng.uniform(-1, 1);
        y[i] = int(rng.bounded(2));
    }
    for (const int k : {1, 3, 5}) {
        classifiers::KnnConfig config;
        config.k = k;
        const auto model = classifiers::fit_knn(X, y, config);
        for (int q = 0; q < 50; ++q) {
            const std::vector<double> query = {rng.uniform(-1, 1),
                                               rng.uniform(-1, 1),
                                               rng.uniform(-1, 1)};
            CHECK(classifiers::predict(model, query).label ==
                  oracles::knn_label(X, y, query, k));
        }
    }
}

TEST_CASE("knn distance ties break on the lower training index") {
    Matrix X(2, 1);
    X.at(0, 0) = 0.0;
    X.at(1, 0) = 2.0;
    classifiers::KnnConfig config;
    config.k = 1;
    const auto model = classifiers::fit_knn(X, {1, 0}, config);
    const std::vector<double> mid = {1.0};
    CHECK(classifiers::predict(model, mid).label == 1);  // row 0 wins the tie
}

TEST_CASE("knn configuration limits") {
    Matrix X(4, 1);
    for (int i = 0; i < 4; ++i) X.at(i, 0) = i;
    const std::vector<int> y = {0, 0, 1, 1};
    classifiers::KnnConfig even;
    even.k = 2;
    CHECK_THROWS_AS(classifiers::fit_knn(X, y, even), std::invalid_argument);
    classifiers::KnnConfig big;
    big.k = 5;
    CHECK_THROWS_AS(classifiers::fit_knn(X, y, big), std::invalid_argument);
}

TEST_CASE("gaussian naive bayes is symmetric on mirrored classes") {
    Matrix X(4, 1);
    X.at(0, 0) = -1.5;
    X.at(1, 0) = -0.5;
    X.at(2, 0) = 0.5;
    X.at(3, 0) = 1.5;
    const auto model = classifiers::fit_gnb(X, {0, 0, 1, 1});
    const std::vector<double> mid = {0.0};
    const auto post = classifiers::posterior(model, mid);
    CHECK(post[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(post[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(classifiers::predict(model, mid).label == 0);  // exact tie stays 0

    const std::vector<double> right = {1.0};
    CHECK(classifiers::predict(model, right).label == 1);
}

TEST_CASE("gnb posteriors always sum to one, even with constant features") {
    Rng rng(10);
    Matrix X(20, 2);
    std::vector<int> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        y[i] = i < 10 ? 0 : 1;
        X.at(i, 0) = y[i] == 0 ? rng.normal(-1, 0.2) : rng.normal(1, 0.2);
        X.at(i, 1) = 7.0;  // zero variance everywhere
    }
    const auto model = classifiers::fit_gnb(X, y);
    for (int q = 0; q < 30; ++q) {
        const std::vector<double> query = {rng.uniform(-3, 3), 7.0};
        const auto post = classifiers::posterior(model, query);
        CHECK(std::isfinite(post[0]));
        CHECK(post[0] + post[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single-class training data is rejected where it cannot work") {
    Matrix X(6, 1);
    for (int i = 0; i < 6; ++i) X.at(i, 0) = i;
    const std::vector<int> ones(6, 1);

    CHECK_THROWS_AS(classifiers::fit_svm(X, ones), std::invalid_argument);
    CHECK_THROWS_AS(classifiers::fit_logreg(X, ones), std::invalid_argument);
    CHECK_THROWS_AS(classifiers::fit_sgd(X, ones), std::invalid_argument);
    CHECK_THROWS_AS(classifiers::fit_gnb(X, ones), std::invalid_argument);

    classifiers::KnnConfig k1;
    k1.k = 1;
    CHECK_NOTHROW(classifiers::fit_knn(X, ones, k1));
    CHECK_NOTHROW(trees::fit_tree(X, ones));
}

TEST_CASE("non-finite features are rejected") {
    Matrix X(4, 1);
    X.at(2, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(classifiers::fit_svm(X, {0, 0, 1, 1}),
                    std::invalid_argument);
}

TEST_CASE("model kind names round-trip") {
    for (const auto kind : classifiers::all_model_kinds()) {
        CHECK(classifiers::kind_from_name(classifiers::kind_name(kind)) == kind);
    }
    CHECK(classifiers::all_model_kinds().size() == 8);
    CHECK_THROWS_AS(classifiers::kind_from_name("perceptron"),
                    std::invalid_argument);
}

TEST_CASE("the uniform interface agrees with each model's own threshold") {
    Rng rng(12);
    const auto p = blobs(rng, 15);
    for (const auto kind : classifiers::all_model_kinds()) {
        classifiers::ModelConfig config;
        config.kind = kind;
        config.seed = 1;
        config.forest.n_estimators = 10;
        config.gboost.n_estimators = 10;
        config.knn.k = 3;
        const auto model = classifiers::fit_model(config, p.X, p.y);
        CHECK(classifiers::kind_of(model) == kind);
        CHECK(classifiers::feature_width(model) == 2);

        const double threshold = classifiers::decision_threshold(kind);
        int correct = 0;
        for (std::size_t i = 0; i < p.X.rows; ++i) {
            const auto pred = classifiers::predict(model, p.X.row_span(i));
            const double score = classifiers::decision_score(model, p.X.row_span(i));
            CHECK(pred.score == score);
            CHECK(pred.label == (score > threshold ? 1 : 0));
            if (pred.label == p.y[i]) ++correct;
        }
        // every kind should nail two far-apart blobs
        CHECK(correct == int(p.X.rows));
    }
}
