#include "falldet/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "falldet/csv.hpp"

namespace falldet::eval {

ConfusionMatrix confusion(const std::vector<int>& y_true,
                          const std::vector<int>& y_pred) {
    require(y_true.size() == y_pred.size(),
            "confusion: prediction count != label count");
    require(!y_true.empty(), "confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        require(y_true[i] == 0 || y_true[i] == 1,
                "confusion: labels must be 0 or 1");
        require(y_pred[i] == 0 || y_pred[i] == 1,
                "confusion: predictions must be 0 or 1");
        if (y_true[i] == 1) {
            if (y_pred[i] == 1) ++cm.tp; else ++cm.fn;
        } else {
            if (y_pred[i] == 1) ++cm.fp; else ++cm.tn;
        }
    }
    return cm;
}

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double harmonic(double a, double b) {
    return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

}  // namespace

MetricSet metrics(const ConfusionMatrix& cm) {
    require(cm.tp >= 0 && cm.fp >= 0 && cm.tn >= 0 && cm.fn >= 0,
            "metrics: negative confusion counts");
    require(cm.total() > 0, "metrics: empty confusion matrix");

    const auto tp = static_cast<double>(cm.tp);
    const auto fp = static_cast<double>(cm.fp);
    const auto tn = static_cast<double>(cm.tn);
    const auto fn = static_cast<double>(cm.fn);
    const double n = tp + fp + tn + fn;
    const double pos_support = tp + fn;
    const double neg_support = tn + fp;

    MetricSet m;
    m.accuracy = (tp + tn) / n;
    m.precision = safe_div(tp, tp + fp);
    m.recall = safe_div(tp, tp + fn);
    m.f1 = harmonic(m.precision, m.recall);

    const double neg_precision = safe_div(tn, tn + fn);
    const double neg_recall = safe_div(tn, neg_support);
    m.precision_weighted =
        (pos_support * m.precision + neg_support * neg_precision) / n;
    m.recall_weighted = (pos_support * m.recall + neg_support * neg_recall) / n;
    m.f1_weighted = harmonic(m.precision_weighted, m.recall_weighted);
    return m;
}

RocCurve roc_curve(const std::vector<int>& y_true,
                   const std::vector<double>& scores) {
    require(y_true.size() == scores.size(),
            "roc: score count != label count");
    require(!y_true.empty(), "roc: empty input");
    std::int64_t positives = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        require(y_true[i] == 0 || y_true[i] == 1, "roc: labels must be 0 or 1");
        require(std::isfinite(scores[i]), "roc: non-finite score");
        positives += y_true[i];
    }
    const std::int64_t negatives =
        static_cast<std::int64_t>(y_true.size()) - positives;
    require(positives > 0 && negatives > 0, "roc: needs both classes present");

    std::vector<std::size_t> order(y_true.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    RocCurve roc;
    roc.points.emplace_back(0.0, 0.0);
    std::int64_t tp = 0, fp = 0;
    // Twice the area under the step curve, in integer units of positives x
    // negatives; tied scores advance as one block so the curve cuts the tie
    // diagonally.
    std::int64_t twice_area = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::int64_t dtp = 0, dfp = 0;
        const double score = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == score; ++i) {
            if (y_true[order[i]]) ++dtp; else ++dfp;
        }
        twice_area += dfp * (2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        roc.points.emplace_back(
            static_cast<double>(fp) / static_cast<double>(negatives),
            static_cast<double>(tp) / static_cast<double>(positives));
    }
    roc.auc = static_cast<double>(twice_area) /
              (2.0 * static_cast<double>(positives) *
               static_cast<double>(negatives));
    return roc;
}

ModelReport evaluate_model(const classifiers::Model& model,
                           const LabeledMatrix& test, double threshold) {
    require(test.X.rows == test.y.size(),
            "evaluate: row count != label count");
    require(test.X.rows > 0, "evaluate: empty test set");
    require(test.X.cols == classifiers::feature_width(model),
            "evaluate: feature width mismatch");

    ModelReport report;
    report.model = classifiers::kind_name(classifiers::kind_of(model));
    report.threshold = threshold;

    std::vector<double> scores(test.X.rows);
    std::vector<int> predicted(test.X.rows);
    for (std::size_t i = 0; i < test.X.rows; ++i) {
        scores[i] = classifiers::decision_score(model, test.X.row_span(i));
        predicted[i] = scores[i] > threshold ? 1 : 0;
    }
    report.confusion = confusion(test.y, predicted);
    report.metrics = metrics(report.confusion);
    report.roc = roc_curve(test.y, scores);
    return report;
}

double sweep_threshold(const classifiers::Model& model,
                       const LabeledMatrix& val) {
    require(val.X.rows == val.y.size(), "sweep: row count != label count");
    require(val.X.rows > 0, "sweep: empty validation set");

    std::vector<double> scores(val.X.rows);
    for (std::size_t i = 0; i < val.X.rows; ++i) {
        scores[i] = classifiers::decision_score(model, val.X.row_span(i));
    }
    std::vector<double> candidates = scores;
    candidates.push_back(classifiers::decision_threshold(
        classifiers::kind_of(model)));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    double best_threshold = candidates.front();
    double best_f1 = -1.0;
    std::vector<int> predicted(val.X.rows);
    for (const double threshold : candidates) {
        for (std::size_t i = 0; i < val.X.rows; ++i) {
            predicted[i] = scores[i] > threshold ? 1 : 0;
        }
        const double f1 = metrics(confusion(val.y, predicted)).f1;
        if (f1 > best_f1) {  // strict: ties keep the lower threshold
            best_f1 = f1;
            best_threshold = threshold;
        }
    }
    return best_threshold;
}

std::vector<ModelReport> run_benchmark(
    const LabeledMatrix& train, const LabeledMatrix& val,
    const LabeledMatrix& test,
    const std::vector<classifiers::ModelConfig>& configs,
    const BenchmarkOptions& options) {
    require(!configs.empty(), "benchmark: no model configs");

    std::vector<ModelReport> reports;
    for (const auto& config : configs) {
        const auto started = std::chrono::steady_clock::now();
        const classifiers::Model model =
            classifiers::fit_model(config, train.X, train.y);
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - started;

        double threshold = classifiers::decision_threshold(config.kind);
        if (options.sweep_threshold) {
            threshold = sweep_threshold(model, val);
        }
        ModelReport report = evaluate_model(model, test, threshold);
        report.metrics.training_time_seconds = elapsed.count();
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_report_json(const std::filesystem::path& path,
                       const std::vector<ModelReport>& reports,
                       std::uint64_t seed) {
    nlohmann::ordered_json doc;
    doc["format"] = "falldet-report";
    doc["schema_version"] = 1;
    doc["seed"] = seed;
    doc["models"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json entry;
        entry["model"] = r.model;
        entry["threshold"] = r.threshold;
        entry["training_time_seconds"] = r.metrics.training_time_seconds;
        entry["confusion"] = {{"tp", r.confusion.tp},
                              {"fp", r.confusion.fp},
                              {"tn", r.confusion.tn},
                              {"fn", r.confusion.fn}};
        entry["metrics"] = {{"accuracy", r.metrics.accuracy},
                            {"precision", r.metrics.precision},
                            {"recall", r.metrics.recall},
                            {"f1", r.metrics.f1},
                            {"precision_weighted", r.metrics.precision_weighted},
                            {"recall_weighted", r.metrics.recall_weighted},
                            {"f1_weighted", r.metrics.f1_weighted},
                            {"auc", r.roc.auc}};
        doc["models"].push_back(std::move(entry));
    }
    csv::write_text(path, doc.dump(2) + "\n");
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc) {
    std::string text = "fpr,tpr\n";
    for (const auto& [fpr, tpr] : roc.points) {
        text += csv::format_double(fpr);
        text += ',';
        text += csv::format_double(tpr);
        text += '\n';
    }
    csv::write_text(path, text);
}

void write_confusion_csv(const std::filesystem::path& path,
                         const ConfusionMatrix& cm) {
    std::string text = "tp,fp,tn,fn\n";
    text += std::to_string(cm.tp) + ',' + std::to_string(cm.fp) + ',' +
            std::to_string(cm.tn) + ',' + std::to_string(cm.fn) + '\n';
    csv::write_text(path, text);
}

std::string format_report_table(const std::vector<ModelReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "model" << std::right << std::setw(10)
        << "accuracy" << std::setw(11) << "precision" << std::setw(8)
        << "recall" << std::setw(8) << "f1" << std::setw(8) << "auc"
        << std::setw(12) << "train_s" << '\n';
    out << std::string(65, '-') << '\n';
    out << std::fixed;
    for (const auto& r : reports) {
        out << std::left << std::setw(8) << r.model << std::right
            << std::setprecision(4) << std::setw(10) << r.metrics.accuracy
            << std::setw(11) << r.metrics.precision << std::setw(8)
            << r.metrics.recall << std::setw(8) << r.metrics.f1 << std::setw(8)
            << r.roc.auc << std::setprecision(3) << std::setw(12)
            << r.metrics.training_time_seconds << '\n';
    }
    return out.str();
}

}  // namespace falldet::eval
