#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "falldet/classifiers.hpp"
#include "falldet/common.hpp"

namespace falldet::eval {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(const std::vector<int>& y_true,
                          const std::vector<int>& y_pred);

/// Positive-class and support-weighted flavors of the usual scores. All
/// ratios define 0/0 as 0. Weighted recall coincides with accuracy by
/// construction; weighted F1 is the harmonic mean of weighted precision and
/// weighted recall.
struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double training_time_seconds = 0.0;
};

MetricSet metrics(const ConfusionMatrix& cm);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)->(1,1)
    double auc = 0.0;
};

/// Threshold sweep over the distinct scores in descending order, tied
/// scores moving together. The area is accumulated in integers, so it
/// equals the pairwise ranking probability exactly.
RocCurve roc_curve(const std::vector<int>& y_true,
                   const std::vector<double>& scores);

struct LabeledMatrix {
    Matrix X;
    std::vector<int> y;
};

struct ModelReport {
    std::string model;
    double threshold = 0.0;
    ConfusionMatrix confusion;
    MetricSet metrics;
    RocCurve roc;
};

struct BenchmarkOptions {
    /// Replace each model's default decision threshold with the one that
    /// maximizes F1 on the validation split (ties to the lower threshold).
    bool sweep_threshold = false;
};

/// Score a fitted model on a test set at the given decision threshold.
/// training_time_seconds is left at 0 for the caller to fill.
ModelReport evaluate_model(const classifiers::Model& model,
                           const LabeledMatrix& test, double threshold);

/// Threshold with the best F1 on the given data, searched over the model's
/// own scores (plus the default), lower threshold winning ties.
double sweep_threshold(const classifiers::Model& model,
                       const LabeledMatrix& val);

/// Fit every configured model on train (timing each fit) and report on
/// test. `val` is only consulted when options.sweep_threshold is set.
std::vector<ModelReport> run_benchmark(
    const LabeledMatrix& train, const LabeledMatrix& val,
    const LabeledMatrix& test,
    const std::vector<classifiers::ModelConfig>& configs,
    const BenchmarkOptions& options = {});

void write_report_json(const std::filesystem::path& path,
                       const std::vector<ModelReport>& reports,
                       std::uint64_t seed);
void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc);
void write_confusion_csv(const std::filesystem::path& path,
                         const ConfusionMatrix& cm);

/// Fixed-width text table of the per-model metrics (the `report` command's
/// output).
std::string format_report_table(const std::vector<ModelReport>& reports);

}  // namespace falldet::eval
