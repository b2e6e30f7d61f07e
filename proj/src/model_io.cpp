#include "falldet/model_io.hpp"

#include <fstream>

namespace falldet::model_io {

using classifiers::Model;
using classifiers::ModelKind;
using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    require(m.data.size() == m.rows * m.cols,
            "model json: matrix data size does not match its shape");
    return m;
}

json tree_nodes_to_json(const trees::DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
        nodes.push_back(json::array({node.feature, node.threshold, node.left,
                                     node.right, node.counts[0],
                                     node.counts[1]}));
    }
    return nodes;
}

void tree_nodes_from_json(const json& j, trees::DecisionTree& tree) {
    for (const auto& entry : j) {
        require(entry.is_array() && entry.size() == 6,
                "model json: tree node must be [feature, threshold, left, "
                "right, count0, count1]");
        trees::TreeNode node;
        node.feature = entry[0].get<std::int32_t>();
        node.threshold = entry[1].get<double>();
        node.left = entry[2].get<std::int32_t>();
        node.right = entry[3].get<std::int32_t>();
        node.counts[0] = entry[4].get<std::int64_t>();
        node.counts[1] = entry[5].get<std::int64_t>();
        tree.nodes.push_back(node);
    }
    require(!tree.nodes.empty(), "model json: tree has no nodes");
}

json tree_to_json(const trees::DecisionTree& tree) {
    json hp;
    if (tree.config.max_depth) {
        hp["max_depth"] = *tree.config.max_depth;
    } else {
        hp["max_depth"] = nullptr;
    }
    hp["min_samples_split"] = tree.config.min_samples_split;
    return json{{"hyperparameters", hp},
                {"parameters",
                 {{"n_features", tree.n_features},
                  {"nodes", tree_nodes_to_json(tree)}}}};
}

trees::DecisionTree tree_from_json(const json& hp, const json& params) {
    trees::DecisionTree tree;
    if (!hp.at("max_depth").is_null()) {
        tree.config.max_depth = hp.at("max_depth").get<int>();
    }
    tree.config.min_samples_split = hp.at("min_samples_split").get<int>();
    tree.n_features = params.at("n_features").get<std::size_t>();
    tree_nodes_from_json(params.at("nodes"), tree);
    return tree;
}

std::string mask_to_string(const std::vector<std::uint8_t>& mask) {
    std::string s(mask.size(), '0');
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) s[i] = '1';
    }
    return s;
}

std::vector<std::uint8_t> mask_from_string(const std::string& s) {
    std::vector<std::uint8_t> mask(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        require(s[i] == '0' || s[i] == '1',
                "model json: in-bag mask must be a 0/1 string");
        mask[i] = s[i] == '1';
    }
    return mask;
}

json reg_tree_to_json(const trees::RegressionTree& tree) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
        nodes.push_back(json::array({node.feature, node.threshold, node.left,
                                     node.right, node.value}));
    }
    return nodes;
}

trees::RegressionTree reg_tree_from_json(const json& j) {
    trees::RegressionTree tree;
    for (const auto& entry : j) {
        require(entry.is_array() && entry.size() == 5,
                "model json: regression node must be [feature, threshold, "
                "left, right, value]");
        trees::RegressionNode node;
        node.feature = entry[0].get<std::int32_t>();
        node.threshold = entry[1].get<double>();
        node.left = entry[2].get<std::int32_t>();
        node.right = entry[3].get<std::int32_t>();
        node.value = entry[4].get<double>();
        tree.nodes.push_back(node);
    }
    require(!tree.nodes.empty(), "model json: regression tree has no nodes");
    return tree;
}

Model model_from_json_impl(const json& doc);

}  // namespace

json to_json(const Model& model) {
    json doc;
    doc["format"] = "falldet-model";
    doc["schema_version"] = 1;
    doc["kind"] = classifiers::kind_name(classifiers::kind_of(model));
    doc["seed"] = 0;

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, classifiers::SvmModel>) {
                doc["hyperparameters"] = {{"C", m.config.C},
                                          {"kkt_tol", m.config.kkt_tol}};
                doc["parameters"] = {
                    {"gamma", m.gamma},
                    {"bias", m.bias},
                    {"n_features", m.n_features},
                    {"alpha_y", m.alpha_y},
                    {"support_vectors", matrix_to_json(m.support_vectors)}};
            } else if constexpr (std::is_same_v<T, classifiers::LogRegModel>) {
                doc["hyperparameters"] = {{"C", m.config.C},
                                          {"grad_tol", m.config.grad_tol},
                                          {"max_iter", m.config.max_iter}};
                doc["parameters"] = {{"weights", m.weights}, {"bias", m.bias}};
            } else if constexpr (std::is_same_v<T, classifiers::SgdModel>) {
                doc["seed"] = m.config.seed;
                doc["hyperparameters"] = {{"alpha", m.config.alpha},
                                          {"max_iter", m.config.max_iter},
                                          {"tol", m.config.tol}};
                doc["parameters"] = {{"weights", m.weights},
                                     {"bias", m.bias},
                                     {"epochs_run", m.epochs_run}};
            } else if constexpr (std::is_same_v<T, classifiers::KnnModel>) {
                doc["hyperparameters"] = {{"k", m.config.k}};
                doc["parameters"] = {{"train", matrix_to_json(m.train)},
                                     {"labels", m.labels}};
            } else if constexpr (std::is_same_v<T, classifiers::GnbModel>) {
                doc["hyperparameters"] = json::object();
                doc["parameters"] = {
                    {"log_prior", m.log_prior},
                    {"mean", matrix_to_json(m.mean)},
                    {"variance", matrix_to_json(m.variance)},
                    {"n_features", m.n_features}};
            } else if constexpr (std::is_same_v<T, trees::DecisionTree>) {
                const json packed = tree_to_json(m);
                doc["hyperparameters"] = packed.at("hyperparameters");
                doc["parameters"] = packed.at("parameters");
            } else if constexpr (std::is_same_v<T, trees::RandomForest>) {
                doc["seed"] = m.config.seed;
                json hp = {{"n_estimators", m.config.n_estimators},
                           {"min_samples_split", m.config.min_samples_split},
                           {"bootstrap", m.config.bootstrap}};
                if (m.config.max_depth) {
                    hp["max_depth"] = *m.config.max_depth;
                } else {
                    hp["max_depth"] = nullptr;
                }
                doc["hyperparameters"] = hp;
                json packed_trees = json::array();
                for (const auto& tree : m.trees) {
                    packed_trees.push_back(
                        {{"n_features", tree.n_features},
                         {"nodes", tree_nodes_to_json(tree)}});
                }
                json masks = json::array();
                for (const auto& mask : m.in_bag) {
                    masks.push_back(mask_to_string(mask));
                }
                doc["parameters"] = {{"n_features", m.n_features},
                                     {"n_training_rows", m.n_training_rows},
                                     {"trees", packed_trees},
                                     {"in_bag", masks}};
            } else {
                doc["hyperparameters"] = {
                    {"n_estimators", m.config.n_estimators},
                    {"learning_rate", m.config.learning_rate},
                    {"tree_depth", m.config.tree_depth}};
                json stages = json::array();
                for (const auto& stage : m.stages) {
                    stages.push_back(reg_tree_to_json(stage));
                }
                doc["parameters"] = {
                    {"initial_raw_score", m.initial_raw_score},
                    {"n_features", m.n_features},
                    {"stages", stages}};
            }
        },
        model);
    return doc;
}

Model model_from_json(const json& doc) {
    try {
        return model_from_json_impl(doc);
    } catch (const json::exception& e) {
        // Missing keys and type mismatches surface from the json library;
        // fold them into the same error type as our own shape checks.
        throw std::invalid_argument(std::string("model json: ") + e.what());
    }
}

namespace {

Model model_from_json_impl(const json& doc) {
    require(doc.is_object(), "model json: document must be an object");
    require(doc.value("format", "") == "falldet-model",
            "model json: missing or wrong format tag");
    require(doc.value("schema_version", 0) == 1,
            "model json: unsupported schema_version");
    const ModelKind kind =
        classifiers::kind_from_name(doc.at("kind").get<std::string>());
    const auto seed = doc.at("seed").get<std::uint64_t>();
    const json& hp = doc.at("hyperparameters");
    const json& params = doc.at("parameters");

    switch (kind) {
        case ModelKind::svm: {
            classifiers::SvmModel m;
            m.config.C = hp.at("C").get<double>();
            m.config.kkt_tol = hp.at("kkt_tol").get<double>();
            m.gamma = params.at("gamma").get<double>();
            m.bias = params.at("bias").get<double>();
            m.n_features = params.at("n_features").get<std::size_t>();
            m.alpha_y = params.at("alpha_y").get<std::vector<double>>();
            m.support_vectors = matrix_from_json(params.at("support_vectors"));
            require(m.support_vectors.rows == m.alpha_y.size() &&
                        m.support_vectors.cols == m.n_features,
                    "model json: svm coefficients do not match the support "
                    "vectors");
            return m;
        }
        case ModelKind::logreg: {
            classifiers::LogRegModel m;
            m.config.C = hp.at("C").get<double>();
            m.config.grad_tol = hp.at("grad_tol").get<double>();
            m.config.max_iter = hp.at("max_iter").get<int>();
            m.weights = params.at("weights").get<std::vector<double>>();
            m.bias = params.at("bias").get<double>();
            return m;
        }
        case ModelKind::sgd: {
            classifiers::SgdModel m;
            m.config.seed = seed;
            m.config.alpha = hp.at("alpha").get<double>();
            m.config.max_iter = hp.at("max_iter").get<int>();
            m.config.tol = hp.at("tol").get<double>();
            m.weights = params.at("weights").get<std::vector<double>>();
            m.bias = params.at("bias").get<double>();
            m.epochs_run = params.at("epochs_run").get<int>();
            return m;
        }
        case ModelKind::knn: {
            classifiers::KnnModel m;
            m.config.k = hp.at("k").get<int>();
            m.train = matrix_from_json(params.at("train"));
            m.labels = params.at("labels").get<std::vector<int>>();
            require(m.labels.size() == m.train.rows,
                    "model json: knn labels do not match the stored matrix");
            return m;
        }
        case ModelKind::gnb: {
            classifiers::GnbModel m;
            m.log_prior = params.at("log_prior").get<std::array<double, 2>>();
            m.mean = matrix_from_json(params.at("mean"));
            m.variance = matrix_from_json(params.at("variance"));
            m.n_features = params.at("n_features").get<std::size_t>();
            require(m.mean.rows == 2 && m.variance.rows == 2 &&
                        m.mean.cols == m.n_features &&
                        m.variance.cols == m.n_features,
                    "model json: gnb moments have the wrong shape");
            return m;
        }
        case ModelKind::tree:
            return tree_from_json(hp, params);
        case ModelKind::forest: {
            trees::RandomForest m;
            m.config.seed = seed;
            m.config.n_estimators = hp.at("n_estimators").get<int>();
            m.config.min_samples_split = hp.at("min_samples_split").get<int>();
            m.config.bootstrap = hp.at("bootstrap").get<bool>();
            if (!hp.at("max_depth").is_null()) {
                m.config.max_depth = hp.at("max_depth").get<int>();
            }
            m.n_features = params.at("n_features").get<std::size_t>();
            m.n_training_rows = params.at("n_training_rows").get<std::size_t>();
            for (const auto& packed : params.at("trees")) {
                trees::DecisionTree tree;
                tree.config.max_depth = m.config.max_depth;
                tree.config.min_samples_split = m.config.min_samples_split;
                tree.n_features = packed.at("n_features").get<std::size_t>();
                tree_nodes_from_json(packed.at("nodes"), tree);
                m.trees.push_back(std::move(tree));
            }
            for (const auto& mask : params.at("in_bag")) {
                m.in_bag.push_back(mask_from_string(mask.get<std::string>()));
            }
            require(!m.trees.empty(), "model json: forest has no trees");
            require(m.in_bag.size() == m.trees.size(),
                    "model json: forest in-bag masks do not match its trees");
            return m;
        }
        case ModelKind::gboost: {
            trees::GradientBoosting m;
            m.config.n_estimators = hp.at("n_estimators").get<int>();
            m.config.learning_rate = hp.at("learning_rate").get<double>();
            m.config.tree_depth = hp.at("tree_depth").get<int>();
            m.initial_raw_score = params.at("initial_raw_score").get<double>();
            m.n_features = params.at("n_features").get<std::size_t>();
            for (const auto& stage : params.at("stages")) {
                m.stages.push_back(reg_tree_from_json(stage));
            }
            return m;
        }
    }
    throw std::invalid_argument("model json: unknown kind");
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << to_json(model).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace falldet::model_io
