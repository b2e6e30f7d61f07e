#include "falldet/featsel.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "falldet/csv.hpp"

namespace falldet::featsel {

namespace {

trees::RandomForest fit_on(const dataio::CanonicalDataset& train,
                           const trees::ForestConfig& config) {
    require(train.has_labels(), "featsel: training data has no labels");
    return trees::fit_forest(train.features, train.labels, config);
}

}  // namespace

FeatureRanking rank_features(const dataio::CanonicalDataset& train,
                             const trees::ForestConfig& forest,
                             std::uint64_t seed) {
    train.validate();
    trees::ForestConfig config = forest;
    config.seed = seed;
    const trees::RandomForest fitted = fit_on(train, config);
    const std::vector<double> importance = trees::feature_importances(fitted);

    std::vector<std::size_t> order(importance.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return importance[a] > importance[b];
                     });

    FeatureRanking ranking;
    for (const std::size_t j : order) {
        ranking.features.push_back(train.feature_names[j]);
        ranking.importances.push_back(importance[j]);
    }
    return ranking;
}

std::vector<TopKStudyRow> topk_study(const dataio::CanonicalDataset& train,
                                     const FeatureRanking& ranking,
                                     const std::vector<std::size_t>& ks,
                                     const trees::ForestConfig& forest,
                                     std::uint64_t seed) {
    train.validate();
    require(!ks.empty(), "topk study: no k values");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        require(ks[i] >= 1 && ks[i] <= ranking.size(),
                "topk study: k out of range: " + std::to_string(ks[i]));
        require(i == 0 || ks[i] > ks[i - 1],
                "topk study: k values must be strictly increasing");
    }

    trees::ForestConfig config = forest;
    config.seed = seed;

    std::vector<TopKStudyRow> rows;
    for (const std::size_t k : ks) {
        const dataio::CanonicalDataset narrowed =
            dataio::select_columns(train, select_top_k(ranking, k));

        TopKStudyRow row;
        row.k = k;
        std::array<double, 3> seconds{};
        for (int run = 0; run < 3; ++run) {
            const auto started = std::chrono::steady_clock::now();
            const trees::RandomForest fitted = fit_on(narrowed, config);
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - started;
            seconds[run] = elapsed.count();
            if (run == 0) {
                row.oob_error =
                    trees::oob_error(fitted, narrowed.features, narrowed.labels);
            }
        }
        std::sort(seconds.begin(), seconds.end());
        row.train_seconds = seconds[1];
        rows.push_back(row);
    }
    return rows;
}

std::vector<std::string> select_top_k(const FeatureRanking& ranking,
                                      std::size_t k) {
    require(k >= 1, "select: k must be >= 1");
    require(k <= ranking.size(),
            "select: k exceeds the number of ranked features");
    return {ranking.features.begin(),
            ranking.features.begin() + static_cast<std::ptrdiff_t>(k)};
}

void write_importances_csv(const std::filesystem::path& path,
                           const FeatureRanking& ranking) {
    require(ranking.features.size() == ranking.importances.size(),
            "importances: ragged ranking");
    std::string text = "rank,feature,importance\n";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        text += std::to_string(i + 1);
        text += ',';
        text += ranking.features[i];
        text += ',';
        text += csv::format_double(ranking.importances[i]);
        text += '\n';
    }
    csv::write_text(path, text);
}

FeatureRanking read_importances_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    const std::vector<std::string> expect = {"rank", "feature", "importance"};
    require(table.header == expect,
            path.string() + ": header must be rank,feature,importance");
    FeatureRanking ranking;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string context = path.string() + " row " + std::to_string(r + 1);
        require(table.rows[r][0] == std::to_string(r + 1),
                context + ": ranks must be 1,2,3,...");
        ranking.features.push_back(table.rows[r][1]);
        const auto value = csv::parse_double(table.rows[r][2]);
        require(value.has_value() && *value >= 0.0,
                context + ": importance must be a non-negative number");
        ranking.importances.push_back(*value);
    }
    require(!ranking.features.empty(), path.string() + ": no rows");
    return ranking;
}

void write_topk_csv(const std::filesystem::path& path,
                    const std::vector<TopKStudyRow>& rows) {
    std::string text = "k,oob_error,train_seconds\n";
    for (const auto& row : rows) {
        text += std::to_string(row.k);
        text += ',';
        text += csv::format_double(row.oob_error);
        text += ',';
        text += csv::format_double(row.train_seconds);
        text += '\n';
    }
    csv::write_text(path, text);
}

}  // namespace falldet::featsel
