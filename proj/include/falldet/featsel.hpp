#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "falldet/dataset.hpp"
#include "falldet/trees.hpp"

namespace falldet::featsel {

/// Features ordered by random-forest Gini importance, best first.
/// Importances are non-negative and sum to 1; ties keep the original column
/// order.
struct FeatureRanking {
    std::vector<std::string> features;
    std::vector<double> importances;

    std::size_t size() const { return features.size(); }
};

/// Fit a forest on labeled training data and rank its features. `seed`
/// overrides the forest config's own seed.
FeatureRanking rank_features(const dataio::CanonicalDataset& train,
                             const trees::ForestConfig& forest,
                             std::uint64_t seed);

struct TopKStudyRow {
    std::size_t k = 0;
    double oob_error = 0.0;
    double train_seconds = 0.0;  // median of three timed fits
};

/// Refit a forest on the best k features for each requested k, recording
/// out-of-bag error and the median training time of three runs. The k values
/// must be strictly increasing and within the feature count.
std::vector<TopKStudyRow> topk_study(const dataio::CanonicalDataset& train,
                                     const FeatureRanking& ranking,
                                     const std::vector<std::size_t>& ks,
                                     const trees::ForestConfig& forest,
                                     std::uint64_t seed);

/// First k names of the ranking.
std::vector<std::string> select_top_k(const FeatureRanking& ranking,
                                      std::size_t k);

/// importances.csv: rank,feature,importance (rank starts at 1).
void write_importances_csv(const std::filesystem::path& path,
                           const FeatureRanking& ranking);
FeatureRanking read_importances_csv(const std::filesystem::path& path);

/// topk_study.csv: k,oob_error,train_seconds.
void write_topk_csv(const std::filesystem::path& path,
                    const std::vector<TopKStudyRow>& rows);

}  // namespace falldet::featsel
