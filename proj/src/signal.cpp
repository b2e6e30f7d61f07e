#include "falldet/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "falldet/csv.hpp"
#include "falldet/kernels.hpp"

namespace falldet::signal {

void DetectorConfig::validate() const {
    require(std::isfinite(beta) && beta > 0.0,
            "detector: beta must be a positive number of g");
    require(refractory_ms >= 0, "detector: negative refractory window");
}

NormParams zscore_fit(const dataio::CanonicalDataset& train) {
    train.validate();
    require(train.size() > 0, "zscore_fit: empty dataset");

    const std::size_t n = train.size();
    const std::size_t d = train.features.cols;
    NormParams params;
    params.feature_names = train.feature_names;
    params.mean.resize(d);
    params.stddev.resize(d);

    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = train.features.at(i, j);
            require(!std::isnan(v), "zscore_fit: missing value in column " +
                                        train.feature_names[j] +
                                        ", impute first");
            column[i] = v;
        }
        const double mean = kernels::sum(column.data(), n) / static_cast<double>(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dlt = column[i] - mean;
            acc += dlt * dlt;
        }
        params.mean[j] = mean;
        params.stddev[j] = std::sqrt(acc / static_cast<double>(n));
    }
    return params;
}

dataio::CanonicalDataset zscore_apply(const dataio::CanonicalDataset& data,
                                      const NormParams& params) {
    data.validate();
    require(data.feature_names == params.feature_names,
            "zscore_apply: feature names do not match the fitted parameters");

    const std::size_t d = params.mean.size();
    std::vector<double> inv_std(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double s = params.stddev[j];
        require(std::isfinite(s) && s >= 0.0, "zscore_apply: bad stddev");
        // Zero-spread columns carry no information; map them to 0 instead of
        // dividing by zero.
        inv_std[j] = s == 0.0 ? 0.0 : 1.0 / s;
    }

    dataio::CanonicalDataset out = data;
    for (std::size_t i = 0; i < out.size(); ++i) {
        kernels::normalize(data.features.row(i), params.mean.data(),
                           inv_std.data(), out.features.row(i), d);
    }
    return out;
}

double smv(const AccelSample& sample) {
    require(std::isfinite(sample.ax) && std::isfinite(sample.ay) &&
                std::isfinite(sample.az),
            "smv: axis values must be finite");
    double out = 0.0;
    kernels::magnitude3(&sample.ax, &sample.ay, &sample.az, &out, 1);
    return out;
}

SmvSeries smv_series(const dataio::CanonicalDataset& data,
                     const std::array<std::string, 3>& axis_columns,
                     const SmvOptions& options) {
    data.validate();
    const std::size_t n = data.size();
    std::array<std::vector<double>, 3> axes;
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t j = dataio::feature_index(data, axis_columns[a]);
        axes[a].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = data.features.at(i, j);
            require(std::isfinite(v),
                    "smv: non-finite value in axis column " + axis_columns[a] +
                        " at row " + std::to_string(i));
            axes[a][i] = v;
        }
    }

    if (options.unit_guard && n >= 2) {
        // Heuristic: axes that all have mean ~0 and spread ~1 look like
        // z-scores, not raw g readings.
        bool standardized = true;
        for (const auto& axis : axes) {
            const double mean =
                kernels::sum(axis.data(), n) / static_cast<double>(n);
            double acc = 0.0;
            for (double v : axis) acc += (v - mean) * (v - mean);
            const double stddev = std::sqrt(acc / static_cast<double>(n));
            if (std::abs(mean) >= 0.15 || std::abs(stddev - 1.0) >= 0.15) {
                standardized = false;
                break;
            }
        }
        require(!standardized,
                "smv: axis columns look z-score normalized; the magnitude "
                "must be computed from raw g values");
    }

    SmvSeries series;
    series.timestamps_ms = data.timestamps_ms;
    series.values.resize(n);
    kernels::magnitude3(axes[0].data(), axes[1].data(), axes[2].data(),
                        series.values.data(), n);
    return series;
}

std::optional<std::int64_t> detect_onset(const SmvSeries& series,
                                         const DetectorConfig& config) {
    config.validate();
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.values[i] > config.beta) return series.timestamps_ms[i];
    }
    return std::nullopt;
}

std::vector<ImpactEvent> segment_events(const SmvSeries& series,
                                        const DetectorConfig& config) {
    config.validate();
    require(series.timestamps_ms.size() == series.values.size(),
            "segment_events: series sizes disagree");

    std::vector<ImpactEvent> events;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!(series.values[i] > config.beta)) continue;
        const std::int64_t t = series.timestamps_ms[i];
        const double v = series.values[i];
        // Merge into the previous event if the quiet gap was shorter than
        // the refractory window.
        if (!events.empty() && t - events.back().end_ms < config.refractory_ms) {
            ImpactEvent& prev = events.back();
            prev.end_ms = t;
            if (v > prev.peak_smv) {
                prev.peak_smv = v;
                prev.peak_ms = t;
            }
        } else {
            events.push_back({t, t, t, v});
        }
    }
    return events;
}

dataio::CanonicalDataset label_impacts(const dataio::CanonicalDataset& data,
                                       const SmvSeries& series,
                                       const DetectorConfig& config) {
    config.validate();
    data.validate();
    require(series.size() == data.size(),
            "label_impacts: series length does not match the dataset");
    require(series.timestamps_ms == data.timestamps_ms,
            "label_impacts: series timestamps do not match the dataset");

    dataio::CanonicalDataset out = data;
    out.labels.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.labels[i] = series.values[i] > config.beta ? 1 : 0;
    }
    return out;
}

std::vector<ReviewRange> read_review_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    const std::vector<std::string> expect = {"start_ms", "end_ms", "label"};
    require(table.header == expect,
            path.string() + ": review csv header must be start_ms,end_ms,label");
    std::vector<ReviewRange> review;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::string context = path.string() + " row " + std::to_string(r + 1);
        ReviewRange range;
        range.start_ms = csv::parse_timestamp_ms(cells[0], context);
        range.end_ms = csv::parse_timestamp_ms(cells[1], context);
        require(cells[2] == "0" || cells[2] == "1",
                context + ": label must be 0 or 1");
        range.label = cells[2] == "1" ? 1 : 0;
        require(range.start_ms <= range.end_ms,
                context + ": range start is after its end");
        review.push_back(range);
    }
    return review;
}

dataio::CanonicalDataset apply_review(const dataio::CanonicalDataset& data,
                                      const std::vector<ReviewRange>& review) {
    data.validate();
    if (review.empty()) return data;
    require(data.has_labels(), "apply_review: dataset has no labels to revise");

    dataio::CanonicalDataset out = data;
    for (const auto& range : review) {
        require(range.label == 0 || range.label == 1,
                "apply_review: label must be 0 or 1");
        require(range.start_ms <= range.end_ms,
                "apply_review: range start is after its end");
        bool touched = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::int64_t t = out.timestamps_ms[i];
            if (t >= range.start_ms && t <= range.end_ms) {
                out.labels[i] = range.label;
                touched = true;
            }
        }
        require(touched, "apply_review: range " + std::to_string(range.start_ms) +
                             ".." + std::to_string(range.end_ms) +
                             " covers no rows");
    }
    return out;
}

void write_smv_csv(const std::filesystem::path& path, const SmvSeries& series) {
    require(series.timestamps_ms.size() == series.values.size(),
            "smv csv: series sizes disagree");
    std::string text = "timestamp_ms,smv_g\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        text += std::to_string(series.timestamps_ms[i]);
        text += ',';
        text += csv::format_double(series.values[i]);
        text += '\n';
    }
    csv::write_text(path, text);
}

SmvSeries read_smv_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    const std::vector<std::string> expect = {"timestamp_ms", "smv_g"};
    require(table.header == expect,
            path.string() + ": smv csv header must be timestamp_ms,smv_g");
    SmvSeries series;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string context = path.string() + " row " + std::to_string(r + 1);
        series.timestamps_ms.push_back(
            csv::parse_timestamp_ms(table.rows[r][0], context));
        const auto value = csv::parse_double(table.rows[r][1]);
        require(value && std::isfinite(*value) && *value >= 0.0,
                context + ": smv_g must be a non-negative number");
        series.values.push_back(*value);
    }
    return series;
}

}  // namespace falldet::signal
