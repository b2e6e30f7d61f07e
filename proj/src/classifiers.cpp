#include "falldet/classifiers.hpp"

#include <algorithm>

namespace falldet::classifiers {

const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds = {
        ModelKind::svm,  ModelKind::logreg, ModelKind::sgd,
        ModelKind::knn,  ModelKind::gnb,    ModelKind::tree,
        ModelKind::forest, ModelKind::gboost,
    };
    return kinds;
}

std::string kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::svm: return "svm";
        case ModelKind::logreg: return "logreg";
        case ModelKind::sgd: return "sgd";
        case ModelKind::knn: return "knn";
        case ModelKind::gnb: return "gnb";
        case ModelKind::tree: return "tree";
        case ModelKind::forest: return "forest";
        case ModelKind::gboost: return "gboost";
    }
    throw std::invalid_argument("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
    for (const ModelKind kind : all_model_kinds()) {
        if (kind_name(kind) == name) return kind;
    }
    throw std::invalid_argument("unknown model kind '" + name + "'");
}

void ModelConfig::validate() const {
    switch (kind) {
        case ModelKind::svm: svm.validate(); return;
        case ModelKind::logreg: logreg.validate(); return;
        case ModelKind::sgd: sgd.validate(); return;
        case ModelKind::knn: knn.validate(); return;
        case ModelKind::gnb: return;
        case ModelKind::tree: tree.validate(); return;
        case ModelKind::forest: forest.validate(); return;
        case ModelKind::gboost: gboost.validate(); return;
    }
    throw std::invalid_argument("unknown model kind");
}

Model fit_model(const ModelConfig& config, const Matrix& X,
                const std::vector<int>& y) {
    config.validate();
    switch (config.kind) {
        case ModelKind::svm:
            return fit_svm(X, y, config.svm);
        case ModelKind::logreg:
            return fit_logreg(X, y, config.logreg);
        case ModelKind::sgd: {
            SgdConfig sgd_config = config.sgd;
            sgd_config.seed = config.seed;
            return fit_sgd(X, y, sgd_config);
        }
        case ModelKind::knn:
            return fit_knn(X, y, config.knn);
        case ModelKind::gnb:
            return fit_gnb(X, y);
        case ModelKind::tree:
            return fit_tree(X, y, config.tree);
        case ModelKind::forest: {
            trees::ForestConfig forest_config = config.forest;
            forest_config.seed = config.seed;
            return trees::fit_forest(X, y, forest_config);
        }
        case ModelKind::gboost:
            return trees::fit_gboost(X, y, config.gboost);
    }
    throw std::invalid_argument("unknown model kind");
}

ModelKind kind_of(const Model& model) {
    switch (model.index()) {
        case 0: return ModelKind::svm;
        case 1: return ModelKind::logreg;
        case 2: return ModelKind::sgd;
        case 3: return ModelKind::knn;
        case 4: return ModelKind::gnb;
        case 5: return ModelKind::tree;
        case 6: return ModelKind::forest;
        case 7: return ModelKind::gboost;
    }
    throw std::invalid_argument("empty model variant");
}

Prediction predict(const Model& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

double decision_score(const Model& model, std::span<const double> x) {
    return predict(model, x).score;
}

double decision_threshold(ModelKind kind) {
    switch (kind) {
        case ModelKind::svm:
        case ModelKind::logreg:
        case ModelKind::sgd:
            return 0.0;  // signed margin
        default:
            return 0.5;  // probability or vote fraction
    }
}

std::size_t feature_width(const Model& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) return m.n_features;
            else if constexpr (std::is_same_v<T, LogRegModel>) return m.weights.size();
            else if constexpr (std::is_same_v<T, SgdModel>) return m.weights.size();
            else if constexpr (std::is_same_v<T, KnnModel>) return m.train.cols;
            else if constexpr (std::is_same_v<T, GnbModel>) return m.n_features;
            else if constexpr (std::is_same_v<T, trees::DecisionTree>) return m.n_features;
            else if constexpr (std::is_same_v<T, trees::RandomForest>) return m.n_features;
            else return m.n_features;
        },
        model);
}

}  // namespace falldet::classifiers
