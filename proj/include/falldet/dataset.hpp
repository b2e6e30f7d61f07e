#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "falldet/common.hpp"

namespace falldet::dataio {

/// One device's raw recording. Timestamps are strictly increasing; missing
/// readings are stored as NaN.
struct RawSensorStream {
    std::string device_id;
    std::vector<std::string> channel_names;
    std::vector<std::int64_t> timestamps_ms;
    Matrix values;  // one row per sample, one column per channel

    std::size_t size() const { return timestamps_ms.size(); }
    void validate() const;
};

struct RowMeta {
    std::string subject;
    std::string activity;
    std::string trial;

    bool operator==(const RowMeta&) const = default;
};

/// The aligned table every later stage consumes: one row per time step, all
/// device channels side by side, optional binary labels.
struct CanonicalDataset {
    std::vector<std::string> feature_names;
    std::vector<std::int64_t> timestamps_ms;  // non-decreasing
    Matrix features;                          // n x d, NaN = missing
    std::vector<RowMeta> meta;                // size n
    std::vector<int> labels;                  // empty, or size n in {0,1}

    std::size_t size() const { return timestamps_ms.size(); }
    bool has_labels() const { return !labels.empty(); }
    void validate() const;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const;
};

struct SplitResult {
    CanonicalDataset train;
    CanonicalDataset validation;
    CanonicalDataset test;
};

/// Expected shape of one device's CSV. The file must have `timestamp_ms` as
/// its first column; if `channels` is non-empty the remaining header cells
/// must match it exactly.
struct CsvSchema {
    std::string device_id;
    std::vector<std::string> channels;
};

/// Read one device CSV into a stream. Missing cells (empty or "NAN", any
/// case) and unparseable numbers become NaN. Rejects files whose timestamps
/// are not strictly increasing.
RawSensorStream ingest_csv(const std::filesystem::path& path,
                           const CsvSchema& schema);

/// Write a stream in the same CSV shape ingest_csv reads
/// (timestamp_ms,<channels...>; NaN cells as "NAN").
void write_stream_csv(const std::filesystem::path& path,
                      const RawSensorStream& stream);

/// Align streams on the reference device's clock by nearest-neighbor
/// timestamp matching within `tolerance_ms`. Reference rows that lack a
/// match in any stream are dropped. Matched columns are named
/// `<device>_<channel>`. Equal-distance candidates resolve to the earlier
/// sample.
CanonicalDataset synchronize(const std::vector<RawSensorStream>& streams,
                             const std::string& reference_device,
                             std::int64_t tolerance_ms,
                             const RowMeta& meta = {});

/// Replace NaN cells with the column mean computed over `statistics_source`
/// (typically the training split, so no information leaks from val/test).
/// Any column entirely missing in the source is an error.
CanonicalDataset impute_missing(const CanonicalDataset& data,
                                const CanonicalDataset& statistics_source);

/// Deterministic train/val/test split. Global part sizes are
/// floor(fraction * n) for val and test with the remainder going to train;
/// stratified mode keeps per-class proportions within one row of the global
/// ones. Row order inside each part follows the original dataset.
SplitResult split(const CanonicalDataset& data, const SplitSpec& spec);

/// Canonical CSV: timestamp_ms, subject, activity, trial, <features...>
/// and a trailing `label` column when labels are present.
CanonicalDataset read_canonical_csv(const std::filesystem::path& path);
void write_canonical_csv(const std::filesystem::path& path,
                         const CanonicalDataset& data);

/// Column lookup helper; throws std::invalid_argument naming the column.
std::size_t feature_index(const CanonicalDataset& data, const std::string& name);

/// Copy with only the named feature columns, in the given order.
CanonicalDataset select_columns(const CanonicalDataset& data,
                                const std::vector<std::string>& names);

}  // namespace falldet::dataio
