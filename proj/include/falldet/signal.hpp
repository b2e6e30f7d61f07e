#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "falldet/dataset.hpp"

namespace falldet::signal {

/// One accelerometer reading in g.
struct AccelSample {
    double ax = 0.0;
    double ay = 0.0;
    double az = 0.0;
};

/// Signal magnitude vector series aligned with a dataset's rows.
struct SmvSeries {
    std::vector<std::int64_t> timestamps_ms;
    std::vector<double> values;  // in g, all >= 0

    std::size_t size() const { return values.size(); }
};

/// Impact threshold and event merging policy. `beta` is in g and the
/// comparison is strict: a sample exactly at beta is not an impact.
struct DetectorConfig {
    double beta = 2.0;
    std::int64_t refractory_ms = 500;

    void validate() const;
};

/// One above-threshold excursion after refractory merging.
struct ImpactEvent {
    std::int64_t start_ms = 0;
    std::int64_t peak_ms = 0;
    std::int64_t end_ms = 0;
    double peak_smv = 0.0;
};

/// Per-feature standardization parameters fit on training data only.
struct NormParams {
    std::vector<std::string> feature_names;
    std::vector<double> mean;
    std::vector<double> stddev;  // population
};

struct SmvOptions {
    /// Reject axis columns that look already standardized (all three with
    /// mean near 0 and standard deviation near 1), since the magnitude of
    /// z-scored axes is meaningless as an acceleration.
    bool unit_guard = true;
};

/// Fit per-column mean and population standard deviation. The input must be
/// fully imputed; NaN cells are an error.
NormParams zscore_fit(const dataio::CanonicalDataset& train);

/// (x - mean) / stddev per column; columns with zero spread map to 0.
dataio::CanonicalDataset zscore_apply(const dataio::CanonicalDataset& data,
                                      const NormParams& params);

/// Euclidean magnitude of one 3-axis sample. Inputs must be finite.
double smv(const AccelSample& sample);

/// Magnitude series over the named axis columns (raw g, not normalized).
SmvSeries smv_series(const dataio::CanonicalDataset& data,
                     const std::array<std::string, 3>& axis_columns,
                     const SmvOptions& options = {});

/// Timestamp of the first sample strictly above beta, or nullopt.
std::optional<std::int64_t> detect_onset(const SmvSeries& series,
                                         const DetectorConfig& config);

/// Contiguous above-threshold runs, merging runs separated by a gap shorter
/// than the refractory window. Peak ties keep the earliest peak.
std::vector<ImpactEvent> segment_events(const SmvSeries& series,
                                        const DetectorConfig& config);

/// Label every row: 1 where the aligned SMV exceeds beta, else 0.
dataio::CanonicalDataset label_impacts(const dataio::CanonicalDataset& data,
                                       const SmvSeries& series,
                                       const DetectorConfig& config);

/// Manual review override: rows whose timestamp falls inside
/// [start_ms, end_ms] get the given label.
struct ReviewRange {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    int label = 0;
};

/// Review CSV: start_ms,end_ms,label
std::vector<ReviewRange> read_review_csv(const std::filesystem::path& path);

/// Apply review ranges on top of automatic labels. Every range must cover at
/// least one row; a range touching no rows is an error.
dataio::CanonicalDataset apply_review(const dataio::CanonicalDataset& data,
                                      const std::vector<ReviewRange>& review);

/// SMV CSV: timestamp_ms,smv_g
void write_smv_csv(const std::filesystem::path& path, const SmvSeries& series);
SmvSeries read_smv_csv(const std::filesystem::path& path);

}  // namespace falldet::signal
