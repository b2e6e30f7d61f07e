#include "falldet/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "falldet/csv.hpp"
#include "falldet/rng.hpp"

namespace falldet::dataio {

namespace {

void require_unique_names(const std::vector<std::string>& names,
                          const std::string& what) {
    std::set<std::string> seen;
    for (const auto& n : names) {
        require(!n.empty(), what + ": empty name");
        require(seen.insert(n).second, what + ": duplicate name '" + n + "'");
    }
}

}  // namespace

void RawSensorStream::validate() const {
    require(!device_id.empty(), "stream has empty device id");
    require_unique_names(channel_names, "stream " + device_id);
    require(values.cols == channel_names.size(),
            "stream " + device_id + ": value width != channel count");
    require(values.rows == timestamps_ms.size(),
            "stream " + device_id + ": row count != timestamp count");
    for (std::size_t i = 1; i < timestamps_ms.size(); ++i) {
        if (timestamps_ms[i] <= timestamps_ms[i - 1]) {
            std::ostringstream msg;
            msg << "stream " << device_id
                << ": timestamps not strictly increasing at sample " << i;
            throw std::invalid_argument(msg.str());
        }
    }
}

void CanonicalDataset::validate() const {
    require_unique_names(feature_names, "dataset features");
    require(features.cols == feature_names.size(),
            "dataset: feature width != feature name count");
    require(features.rows == timestamps_ms.size(),
            "dataset: row count != timestamp count");
    require(meta.size() == timestamps_ms.size(),
            "dataset: meta count != row count");
    for (std::size_t i = 1; i < timestamps_ms.size(); ++i) {
        require(timestamps_ms[i] >= timestamps_ms[i - 1],
                "dataset: timestamps decrease at row " + std::to_string(i));
    }
    if (!labels.empty()) {
        require(labels.size() == timestamps_ms.size(),
                "dataset: label count != row count");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            require(labels[i] == 0 || labels[i] == 1,
                    "dataset: label out of {0,1} at row " + std::to_string(i));
        }
    }
}

void SplitSpec::validate() const {
    const double parts[] = {train_fraction, val_fraction, test_fraction};
    for (double p : parts) {
        require(p > 0.0 && p < 1.0,
                "split fractions must lie strictly between 0 and 1");
    }
    require(std::abs(train_fraction + val_fraction + test_fraction - 1.0) < 1e-9,
            "split fractions must sum to 1");
}

RawSensorStream ingest_csv(const std::filesystem::path& path,
                           const CsvSchema& schema) {
    const csv::Table table = csv::read_table(path);
    require(table.header.front() == "timestamp_ms",
            path.string() + ": first column must be timestamp_ms");
    require(table.header.size() > 1, path.string() + ": no channel columns");

    RawSensorStream stream;
    stream.device_id = schema.device_id;
    stream.channel_names.assign(table.header.begin() + 1, table.header.end());
    if (!schema.channels.empty() && schema.channels != stream.channel_names) {
        throw std::invalid_argument(path.string() +
                                    ": channel columns do not match the "
                                    "configured channels for device " +
                                    schema.device_id);
    }

    const std::size_t width = stream.channel_names.size();
    stream.values = Matrix(table.rows.size(), width);
    stream.timestamps_ms.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::int64_t ts = csv::parse_timestamp_ms(
            cells[0], path.string() + " row " + std::to_string(r + 1));
        if (!stream.timestamps_ms.empty() && ts <= stream.timestamps_ms.back()) {
            std::ostringstream msg;
            msg << path.string() << ": timestamps not strictly increasing at row "
                << r + 1;
            throw std::invalid_argument(msg.str());
        }
        stream.timestamps_ms.push_back(ts);
        for (std::size_t c = 0; c < width; ++c) {
            const std::string& cell = cells[c + 1];
            if (csv::is_missing(cell)) {
                stream.values.at(r, c) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const auto value = csv::parse_double(cell);
            stream.values.at(r, c) =
                value ? *value : std::numeric_limits<double>::quiet_NaN();
        }
    }
    require(stream.size() > 0, path.string() + ": no samples");
    stream.validate();
    return stream;
}

void write_stream_csv(const std::filesystem::path& path,
                      const RawSensorStream& stream) {
    stream.validate();
    std::string text = "timestamp_ms";
    for (const auto& ch : stream.channel_names) {
        text += ',';
        text += ch;
    }
    text += '\n';
    for (std::size_t i = 0; i < stream.size(); ++i) {
        text += std::to_string(stream.timestamps_ms[i]);
        for (std::size_t c = 0; c < stream.values.cols; ++c) {
            text += ',';
            const double v = stream.values.at(i, c);
            text += std::isnan(v) ? "NAN" : csv::format_double(v);
        }
        text += '\n';
    }
    csv::write_text(path, text);
}

namespace {

/// Index of the stream sample nearest to `t`, if within tolerance.
/// Equal distances resolve to the earlier sample.
std::optional<std::size_t> nearest_sample(const std::vector<std::int64_t>& ts,
                                          std::int64_t t,
                                          std::int64_t tolerance_ms) {
    if (ts.empty()) return std::nullopt;
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    std::optional<std::size_t> best;
    std::int64_t best_dist = 0;
    if (it != ts.begin()) {
        const std::size_t i = static_cast<std::size_t>(it - ts.begin()) - 1;
        best = i;
        best_dist = t - ts[i];
    }
    if (it != ts.end()) {
        const std::size_t i = static_cast<std::size_t>(it - ts.begin());
        const std::int64_t dist = ts[i] - t;
        if (!best || dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    if (!best || best_dist > tolerance_ms) return std::nullopt;
    return best;
}

}  // namespace

CanonicalDataset synchronize(const std::vector<RawSensorStream>& streams,
                             const std::string& reference_device,
                             std::int64_t tolerance_ms, const RowMeta& meta) {
    require(!streams.empty(), "synchronize: no streams");
    require(tolerance_ms >= 0, "synchronize: negative tolerance");
    std::set<std::string> ids;
    for (const auto& s : streams) {
        s.validate();
        require(ids.insert(s.device_id).second,
                "synchronize: duplicate device id '" + s.device_id + "'");
    }
    const auto ref_it =
        std::find_if(streams.begin(), streams.end(), [&](const auto& s) {
            return s.device_id == reference_device;
        });
    require(ref_it != streams.end(),
            "synchronize: unknown reference device '" + reference_device + "'");
    const RawSensorStream& ref = *ref_it;
    require(ref.size() > 0, "synchronize: empty reference stream");

    CanonicalDataset out;
    for (const auto& s : streams) {
        for (const auto& ch : s.channel_names) {
            out.feature_names.push_back(s.device_id + "_" + ch);
        }
    }
    const std::size_t width = out.feature_names.size();

    std::vector<double> row(width);
    std::vector<double> all_values;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const std::int64_t t = ref.timestamps_ms[i];
        bool complete = true;
        std::size_t col = 0;
        for (const auto& s : streams) {
            std::size_t sample = 0;
            if (&s == &ref) {
                sample = i;
            } else {
                const auto found = nearest_sample(s.timestamps_ms, t, tolerance_ms);
                if (!found) {
                    complete = false;
                    break;
                }
                sample = *found;
            }
            for (std::size_t c = 0; c < s.values.cols; ++c) {
                row[col++] = s.values.at(sample, c);
            }
        }
        if (!complete) continue;
        out.timestamps_ms.push_back(t);
        all_values.insert(all_values.end(), row.begin(), row.end());
    }
    require(!out.timestamps_ms.empty(),
            "synchronize: empty result, no reference sample had matches in "
            "every stream");

    out.features = Matrix(out.timestamps_ms.size(), width);
    out.features.data = std::move(all_values);
    out.meta.assign(out.timestamps_ms.size(), meta);
    out.validate();
    return out;
}

CanonicalDataset impute_missing(const CanonicalDataset& data,
                                const CanonicalDataset& statistics_source) {
    data.validate();
    statistics_source.validate();
    require(data.feature_names == statistics_source.feature_names,
            "impute: feature names differ between data and statistics source");

    const std::size_t d = data.feature_names.size();
    std::vector<double> means(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < statistics_source.size(); ++i) {
            const double v = statistics_source.features.at(i, j);
            if (!std::isnan(v)) {
                acc += v;
                ++count;
            }
        }
        require(count > 0, "impute: column entirely missing in statistics "
                           "source: " + data.feature_names[j]);
        means[j] = acc / static_cast<double>(count);
    }

    CanonicalDataset out = data;
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double& v = out.features.at(i, j);
            if (std::isnan(v)) v = means[j];
        }
    }
    return out;
}

namespace {

CanonicalDataset take_rows(const CanonicalDataset& data,
                           const std::vector<std::size_t>& rows) {
    CanonicalDataset out;
    out.feature_names = data.feature_names;
    out.features = Matrix(rows.size(), data.features.cols);
    out.timestamps_ms.reserve(rows.size());
    out.meta.reserve(rows.size());
    if (data.has_labels()) out.labels.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t i = rows[k];
        out.timestamps_ms.push_back(data.timestamps_ms[i]);
        out.meta.push_back(data.meta[i]);
        if (data.has_labels()) out.labels.push_back(data.labels[i]);
        std::copy_n(data.features.row(i), data.features.cols, out.features.row(k));
    }
    return out;
}

/// floor() with a small epsilon so exact products like 0.7 * 10 do not land
/// one below their true value.
std::size_t floor_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

SplitResult split(const CanonicalDataset& data, const SplitSpec& spec) {
    spec.validate();
    data.validate();
    const std::size_t n = data.size();
    require(n >= 3, "split: dataset too small, need at least 3 rows");

    const std::size_t n_val = floor_count(spec.val_fraction, n);
    const std::size_t n_test = floor_count(spec.test_fraction, n);

    std::vector<std::size_t> val_rows, test_rows, train_rows;
    Rng rng(spec.seed);

    if (spec.stratified) {
        require(data.has_labels(), "split: stratified mode needs labels");
        std::array<std::vector<std::size_t>, 2> by_class;
        for (std::size_t i = 0; i < n; ++i) {
            by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
        }
        for (int c = 0; c < 2; ++c) {
            require(by_class[c].size() >= 3,
                    "split: class " + std::to_string(c) +
                        " too small, need at least 3 rows");
        }

        // Per-class floor counts; the few rows still owed to hit the global
        // part sizes go to the classes with the largest fractional
        // remainders (largest-remainder rule, ties to the lower class).
        std::array<std::size_t, 2> val_c{}, test_c{};
        auto allocate = [&](double fraction, std::size_t total,
                            std::array<std::size_t, 2>& out) {
            std::array<double, 2> remainder{};
            std::size_t assigned = 0;
            for (int c = 0; c < 2; ++c) {
                const std::size_t nc = by_class[c].size();
                out[c] = floor_count(fraction, nc);
                remainder[c] =
                    fraction * static_cast<double>(nc) - static_cast<double>(out[c]);
                assigned += out[c];
            }
            for (std::size_t pending = total - assigned; pending > 0; --pending) {
                int pick = -1;
                for (int c = 0; c < 2; ++c) {
                    const bool has_room =
                        val_c[c] + test_c[c] + 1 <= by_class[c].size() &&
                        out[c] < by_class[c].size();
                    if (!has_room) continue;
                    if (pick < 0 || remainder[c] > remainder[pick]) pick = c;
                }
                require(pick >= 0, "split: cannot satisfy part sizes");
                ++out[pick];
                remainder[pick] -= 1.0;
            }
        };
        allocate(spec.val_fraction, n_val, val_c);
        allocate(spec.test_fraction, n_test, test_c);

        for (int c = 0; c < 2; ++c) {
            auto& rows = by_class[c];
            rng.shuffle(rows);
            std::size_t k = 0;
            for (std::size_t i = 0; i < val_c[c]; ++i) val_rows.push_back(rows[k++]);
            for (std::size_t i = 0; i < test_c[c]; ++i) test_rows.push_back(rows[k++]);
            for (; k < rows.size(); ++k) train_rows.push_back(rows[k]);
        }
    } else {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        val_rows.assign(order.begin(), order.begin() + n_val);
        test_rows.assign(order.begin() + n_val, order.begin() + n_val + n_test);
        train_rows.assign(order.begin() + n_val + n_test, order.end());
    }

    // Original row order inside each part keeps timestamps non-decreasing.
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());

    SplitResult out;
    out.train = take_rows(data, train_rows);
    out.validation = take_rows(data, val_rows);
    out.test = take_rows(data, test_rows);
    return out;
}

CanonicalDataset read_canonical_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    const std::vector<std::string> fixed = {"timestamp_ms", "subject",
                                            "activity", "trial"};
    require(table.header.size() >= fixed.size() + 1,
            path.string() + ": canonical csv needs timestamp_ms, subject, "
                            "activity, trial and at least one feature");
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        require(table.header[i] == fixed[i],
                path.string() + ": column " + std::to_string(i + 1) +
                    " must be '" + fixed[i] + "'");
    }
    const bool labeled = table.header.back() == "label";
    const std::size_t feature_begin = fixed.size();
    const std::size_t feature_end = table.header.size() - (labeled ? 1 : 0);
    require(feature_end > feature_begin,
            path.string() + ": no feature columns");

    CanonicalDataset out;
    out.feature_names.assign(table.header.begin() + feature_begin,
                             table.header.begin() + feature_end);
    const std::size_t d = out.feature_names.size();
    out.features = Matrix(table.rows.size(), d);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::string context = path.string() + " row " + std::to_string(r + 1);
        out.timestamps_ms.push_back(csv::parse_timestamp_ms(cells[0], context));
        out.meta.push_back({cells[1], cells[2], cells[3]});
        for (std::size_t j = 0; j < d; ++j) {
            const std::string& cell = cells[feature_begin + j];
            if (csv::is_missing(cell)) {
                out.features.at(r, j) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const auto value = csv::parse_double(cell);
            require(value.has_value(), context + ": bad numeric cell in column " +
                                           out.feature_names[j]);
            out.features.at(r, j) = *value;
        }
        if (labeled) {
            const std::string& cell = cells.back();
            require(cell == "0" || cell == "1", context + ": bad label '" +
                                                    cell + "', expected 0 or 1");
            out.labels.push_back(cell == "1" ? 1 : 0);
        }
    }
    out.validate();
    return out;
}

void write_canonical_csv(const std::filesystem::path& path,
                         const CanonicalDataset& data) {
    data.validate();
    for (const auto& m : data.meta) {
        for (const std::string* field : {&m.subject, &m.activity, &m.trial}) {
            require(field->find(',') == std::string::npos &&
                        field->find('\n') == std::string::npos,
                    "canonical csv: meta fields must not contain commas or "
                    "newlines");
        }
    }
    std::string text = "timestamp_ms,subject,activity,trial";
    for (const auto& name : data.feature_names) {
        text += ',';
        text += name;
    }
    if (data.has_labels()) text += ",label";
    text += '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        text += std::to_string(data.timestamps_ms[i]);
        text += ',';
        text += data.meta[i].subject;
        text += ',';
        text += data.meta[i].activity;
        text += ',';
        text += data.meta[i].trial;
        for (std::size_t j = 0; j < data.features.cols; ++j) {
            text += ',';
            const double v = data.features.at(i, j);
            text += std::isnan(v) ? "NAN" : csv::format_double(v);
        }
        if (data.has_labels()) {
            text += ',';
            text += data.labels[i] ? '1' : '0';
        }
        text += '\n';
    }
    csv::write_text(path, text);
}

std::size_t feature_index(const CanonicalDataset& data, const std::string& name) {
    const auto it = std::find(data.feature_names.begin(),
                              data.feature_names.end(), name);
    require(it != data.feature_names.end(), "unknown feature column: " + name);
    return static_cast<std::size_t>(it - data.feature_names.begin());
}

CanonicalDataset select_columns(const CanonicalDataset& data,
                                const std::vector<std::string>& names) {
    data.validate();
    require(!names.empty(), "select_columns: no columns requested");
    std::vector<std::size_t> cols;
    std::set<std::string> seen;
    for (const auto& name : names) {
        require(seen.insert(name).second,
                "select_columns: duplicate column '" + name + "'");
        cols.push_back(feature_index(data, name));
    }
    CanonicalDataset out;
    out.feature_names = names;
    out.timestamps_ms = data.timestamps_ms;
    out.meta = data.meta;
    out.labels = data.labels;
    out.features = Matrix(data.size(), cols.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out.features.at(i, j) = data.features.at(i, cols[j]);
        }
    }
    return out;
}

}  // namespace falldet::dataio
