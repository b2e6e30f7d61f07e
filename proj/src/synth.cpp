#include "falldet/synth.hpp"

#include <algorithm>
#include <cmath>

#include "falldet/csv.hpp"
#include "falldet/rng.hpp"

namespace falldet::synth {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDipFloor = 0.1;     // magnitude at the middle of the dip
constexpr double kSpikeWidthS = 0.15;
constexpr double kTruthBeta = 2.0;    // clean-magnitude threshold for truth

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

Vec3 rest_orientation(ActivityKind kind, double t) {
    switch (kind) {
        case ActivityKind::lie:
            return {0.0, 1.0, 0.0};
        case ActivityKind::walk: {
            // Slow tilt sway; the vector stays exactly unit length.
            const double theta = 0.15 * std::sin(2.0 * kPi * 1.5 * t);
            return {std::sin(theta), 0.0, std::cos(theta)};
        }
        default:
            return {0.0, 0.0, 1.0};  // upright
    }
}

Vec3 impact_orientation(ActivityKind kind) {
    switch (kind) {
        case ActivityKind::fall_forward: return {1.0, 0.0, 0.0};
        case ActivityKind::fall_backward: return {-1.0, 0.0, 0.0};
        default: return {0.0, 1.0, 0.0};  // lateral
    }
}

}  // namespace

const std::vector<ActivityKind>& all_activities() {
    static const std::vector<ActivityKind> kinds = {
        ActivityKind::walk,          ActivityKind::sit,
        ActivityKind::lie,           ActivityKind::fall_forward,
        ActivityKind::fall_backward, ActivityKind::fall_lateral,
    };
    return kinds;
}

bool is_fall(ActivityKind kind) {
    return kind == ActivityKind::fall_forward ||
           kind == ActivityKind::fall_backward ||
           kind == ActivityKind::fall_lateral;
}

std::string activity_name(ActivityKind kind) {
    switch (kind) {
        case ActivityKind::walk: return "walk";
        case ActivityKind::sit: return "sit";
        case ActivityKind::lie: return "lie";
        case ActivityKind::fall_forward: return "fall_forward";
        case ActivityKind::fall_backward: return "fall_backward";
        case ActivityKind::fall_lateral: return "fall_lateral";
    }
    throw std::invalid_argument("unknown activity kind");
}

void TraceProfile::validate() const {
    require(std::isfinite(duration_s) && duration_s >= 1.0 &&
                duration_s <= 3600.0,
            "trace: duration_s must be in [1, 3600]");
    // The lower rate bound keeps at least one sample inside the
    // above-threshold part of the shallowest spike (80 ms at peak 2.5).
    require(std::isfinite(sample_rate_hz) && sample_rate_hz >= 13.0 &&
                sample_rate_hz <= 1000.0,
            "trace: sample_rate_hz must be in [13, 1000]");
    require(std::isfinite(noise_std_g) && noise_std_g >= 0.0 &&
                noise_std_g < 1.0,
            "trace: noise_std_g must be in [0, 1)");
    if (is_fall(kind)) {
        require(std::isfinite(impact_peak_g) && impact_peak_g >= 2.5 &&
                    impact_peak_g <= 6.0,
                "trace: impact_peak_g must be in [2.5, 6]");
        require(std::isfinite(impact_time_s) && impact_time_s >= 0.45 &&
                    impact_time_s <= duration_s - 0.2,
                "trace: impact_time_s must leave room for the dip before it "
                "and the spike after it");
    }
}

GeneratedTrace gen_trace(const TraceProfile& profile) {
    profile.validate();
    Rng rng(profile.seed);

    // Draw order is part of the contract: dip duration first (falls only),
    // then per sample the three axis noise values.
    const bool fall = is_fall(profile.kind);
    const double dip_duration = fall ? rng.uniform(0.2, 0.4) : 0.0;
    const double dip_start = profile.impact_time_s - dip_duration;
    const double spike_end = profile.impact_time_s + kSpikeWidthS;

    const auto n = static_cast<std::size_t>(
        std::floor(profile.duration_s * profile.sample_rate_hz + 0.5));

    GeneratedTrace out;
    out.stream.device_id = "synth";
    out.stream.channel_names = {"ax", "ay", "az"};
    out.stream.timestamps_ms.reserve(n);
    out.stream.values = Matrix(n, 3);

    std::int64_t truth_start = -1, truth_end = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / profile.sample_rate_hz;
        const auto ts = static_cast<std::int64_t>(
            std::floor(t * 1000.0 + 0.5));
        out.stream.timestamps_ms.push_back(ts);

        double magnitude = 1.0;
        Vec3 dir = rest_orientation(profile.kind, t);
        if (fall) {
            if (t >= dip_start && t < profile.impact_time_s) {
                magnitude = 1.0 - (1.0 - kDipFloor) *
                                      std::sin(kPi * (t - dip_start) /
                                               dip_duration);
            } else if (t >= profile.impact_time_s && t <= spike_end) {
                magnitude = 1.0 + (profile.impact_peak_g - 1.0) *
                                      std::sin(kPi * (t - profile.impact_time_s) /
                                               kSpikeWidthS);
                dir = impact_orientation(profile.kind);
            } else if (t > spike_end) {
                dir = impact_orientation(profile.kind);  // lying still
            }
        }

        if (magnitude > kTruthBeta) {
            if (truth_start < 0) truth_start = ts;
            truth_end = ts;
        }

        double ax = magnitude * dir.x;
        double ay = magnitude * dir.y;
        double az = magnitude * dir.z;
        if (profile.noise_std_g > 0.0) {
            ax += rng.normal(0.0, profile.noise_std_g);
            ay += rng.normal(0.0, profile.noise_std_g);
            az += rng.normal(0.0, profile.noise_std_g);
        }
        out.stream.values.at(i, 0) = ax;
        out.stream.values.at(i, 1) = ay;
        out.stream.values.at(i, 2) = az;
    }

    if (truth_start >= 0) {
        out.impacts.push_back({truth_start, truth_end});
    }
    require(!fall || !out.impacts.empty(),
            "trace: fall produced no above-threshold sample");
    out.stream.validate();
    return out;
}

void SynthDatasetOptions::validate() const {
    require(n_subjects >= 1, "synth: n_subjects must be >= 1");
    require(trials_per_activity >= 1,
            "synth: trials_per_activity must be >= 1");
    require(std::isfinite(duration_s) && duration_s >= 2.0 &&
                duration_s <= 3600.0,
            "synth: duration_s must be in [2, 3600]");
    require(std::isfinite(sample_rate_hz) && sample_rate_hz >= 13.0 &&
                sample_rate_hz <= 1000.0,
            "synth: sample_rate_hz must be in [13, 1000]");
    require(std::isfinite(noise_std_g) && noise_std_g >= 0.0 &&
                noise_std_g < 1.0,
            "synth: noise_std_g must be in [0, 1)");
    require(n_noise_features >= 0, "synth: negative n_noise_features");
    require(std::isfinite(label_beta) && label_beta > 0.0,
            "synth: label_beta must be positive");
}

GeneratedDataset gen_dataset(const SynthDatasetOptions& options) {
    options.validate();

    GeneratedDataset out;
    auto& data = out.dataset;
    data.feature_names = {"ax", "ay", "az", "smv", "smv_mean5", "smv_std5"};
    for (int j = 0; j < options.n_noise_features; ++j) {
        data.feature_names.push_back("noise" + std::to_string(j));
    }
    const std::size_t d = data.feature_names.size();

    std::vector<double> cells;
    Rng param_rng(mix_seed(options.seed, 0x706172616dULL));  // trace params
    const auto period_ms = static_cast<std::int64_t>(
        std::floor(1000.0 / options.sample_rate_hz + 0.5));
    std::int64_t offset_ms = 0;
    std::uint64_t trace_index = 0;

    for (int subject = 1; subject <= options.n_subjects; ++subject) {
        for (const ActivityKind kind : all_activities()) {
            for (int trial = 1; trial <= options.trials_per_activity; ++trial) {
                TraceProfile profile;
                profile.kind = kind;
                profile.duration_s = options.duration_s;
                profile.sample_rate_hz = options.sample_rate_hz;
                profile.noise_std_g = options.noise_std_g;
                profile.seed = mix_seed(options.seed, trace_index);
                if (is_fall(kind)) {
                    profile.impact_time_s =
                        param_rng.uniform(1.0, options.duration_s - 1.0);
                    profile.impact_peak_g = param_rng.uniform(2.5, 6.0);
                }
                const GeneratedTrace trace = gen_trace(profile);
                Rng noise_rng(mix_seed(options.seed, 0xD15C0ULL + trace_index));

                const std::string subject_id =
                    "s" + std::string(subject < 10 ? "0" : "") +
                    std::to_string(subject);
                const std::string trial_id = "t" + std::to_string(trial);
                TraceGroundTruth truth;
                truth.trace_id =
                    subject_id + "_" + activity_name(kind) + "_" + trial_id;
                for (const auto& interval : trace.impacts) {
                    truth.impacts.push_back({interval.start_ms + offset_ms,
                                             interval.end_ms + offset_ms});
                }
                out.truth.push_back(std::move(truth));

                const std::size_t rows = trace.stream.size();
                std::vector<double> smv(rows);
                for (std::size_t i = 0; i < rows; ++i) {
                    const double ax = trace.stream.values.at(i, 0);
                    const double ay = trace.stream.values.at(i, 1);
                    const double az = trace.stream.values.at(i, 2);
                    smv[i] = std::sqrt(ax * ax + ay * ay + az * az);
                }
                for (std::size_t i = 0; i < rows; ++i) {
                    data.timestamps_ms.push_back(
                        trace.stream.timestamps_ms[i] + offset_ms);
                    data.meta.push_back(
                        {subject_id, activity_name(kind), trial_id});
                    data.labels.push_back(smv[i] > options.label_beta ? 1 : 0);

                    // Trailing window of up to five samples, current included.
                    const std::size_t begin = i >= 4 ? i - 4 : 0;
                    const std::size_t w = i - begin + 1;
                    double mean = 0.0;
                    for (std::size_t j = begin; j <= i; ++j) mean += smv[j];
                    mean /= static_cast<double>(w);
                    double var = 0.0;
                    for (std::size_t j = begin; j <= i; ++j) {
                        var += (smv[j] - mean) * (smv[j] - mean);
                    }
                    var /= static_cast<double>(w);

                    cells.push_back(trace.stream.values.at(i, 0));
                    cells.push_back(trace.stream.values.at(i, 1));
                    cells.push_back(trace.stream.values.at(i, 2));
                    cells.push_back(smv[i]);
                    cells.push_back(mean);
                    cells.push_back(std::sqrt(var));
                    for (int j = 0; j < options.n_noise_features; ++j) {
                        cells.push_back(noise_rng.normal());
                    }
                }
                offset_ms += trace.stream.timestamps_ms.back() + period_ms + 1000;
                ++trace_index;
            }
        }
    }

    data.features = Matrix(data.timestamps_ms.size(), d);
    data.features.data = std::move(cells);
    data.validate();
    return out;
}

void write_ground_truth_csv(const std::filesystem::path& path,
                            const std::vector<TraceGroundTruth>& truth) {
    std::string text = "trace_id,start_ms,end_ms\n";
    for (const auto& trace : truth) {
        for (const auto& interval : trace.impacts) {
            text += trace.trace_id;
            text += ',';
            text += std::to_string(interval.start_ms);
            text += ',';
            text += std::to_string(interval.end_ms);
            text += '\n';
        }
    }
    csv::write_text(path, text);
}

std::vector<TraceGroundTruth> read_ground_truth_csv(
    const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    const std::vector<std::string> expect = {"trace_id", "start_ms", "end_ms"};
    require(table.header == expect,
            path.string() + ": header must be trace_id,start_ms,end_ms");
    std::vector<TraceGroundTruth> truth;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::string context = path.string() + " row " + std::to_string(r + 1);
        require(!cells[0].empty(), context + ": empty trace_id");
        GroundTruthInterval interval;
        interval.start_ms = csv::parse_timestamp_ms(cells[1], context);
        interval.end_ms = csv::parse_timestamp_ms(cells[2], context);
        require(interval.start_ms <= interval.end_ms,
                context + ": interval start is after its end");
        if (truth.empty() || truth.back().trace_id != cells[0]) {
            truth.push_back({cells[0], {interval}});
        } else {
            truth.back().impacts.push_back(interval);
        }
    }
    return truth;
}

}  // namespace falldet::synth
