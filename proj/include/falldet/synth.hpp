#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "falldet/dataset.hpp"

namespace falldet::synth {

enum class ActivityKind {
    walk,
    sit,
    lie,
    fall_forward,
    fall_backward,
    fall_lateral,
};

const std::vector<ActivityKind>& all_activities();
bool is_fall(ActivityKind kind);
std::string activity_name(ActivityKind kind);

/// Recipe for one synthetic accelerometer trace (channels ax, ay, az in g).
///
/// ADLs hold a unit-magnitude gravity vector (walking adds a slow tilt
/// oscillation). Falls run rest -> free-fall dip (magnitude sags to 0.1 g
/// over 0.2-0.4 s) -> impact spike (half sine, 150 ms wide, peaking at
/// impact_peak_g) -> lying rest. Gaussian noise of noise_std_g is added per
/// axis afterwards.
struct TraceProfile {
    ActivityKind kind = ActivityKind::walk;
    double duration_s = 4.0;
    double sample_rate_hz = 18.0;
    double impact_time_s = 2.0;   // falls only: when the spike starts
    double impact_peak_g = 3.0;   // falls only: in [2.5, 6]
    double noise_std_g = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruthInterval {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
};

struct GeneratedTrace {
    dataio::RawSensorStream stream;
    /// Noise-free impact extent: first and last sample whose clean magnitude
    /// exceeds 2 g. Empty for ADL traces, exactly one interval for falls.
    std::vector<GroundTruthInterval> impacts;
};

GeneratedTrace gen_trace(const TraceProfile& profile);

struct TraceGroundTruth {
    std::string trace_id;
    std::vector<GroundTruthInterval> impacts;
};

struct SynthDatasetOptions {
    int n_subjects = 2;
    int trials_per_activity = 3;
    double duration_s = 4.0;
    double sample_rate_hz = 18.0;
    double noise_std_g = 0.08;
    int n_noise_features = 4;   // pure-noise distractor columns
    double label_beta = 2.0;    // labels mark rows whose noisy SMV exceeds it
    std::uint64_t seed = 0;

    void validate() const;
};

/// A labeled benchmark corpus: every subject performs every activity
/// `trials_per_activity` times, traces concatenated on one clock with a 1 s
/// gap. Features are ax, ay, az, the magnitude (smv), its trailing
/// five-sample mean and standard deviation, and the noise columns.
struct GeneratedDataset {
    dataio::CanonicalDataset dataset;
    std::vector<TraceGroundTruth> truth;
};

GeneratedDataset gen_dataset(const SynthDatasetOptions& options);

/// ground_truth.csv: trace_id,start_ms,end_ms; one row per impact interval.
void write_ground_truth_csv(const std::filesystem::path& path,
                            const std::vector<TraceGroundTruth>& truth);
std::vector<TraceGroundTruth> read_ground_truth_csv(
    const std::filesystem::path& path);

}  // namespace falldet::synth
