#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "falldet/signal.hpp"
#include "falldet/synth.hpp"

using namespace falldet;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path dir = "scratch_synth";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double stream_smv(const dataio::RawSensorStream& stream, std::size_t i) {
    return std::sqrt(stream.values.at(i, 0) * stream.values.at(i, 0) +
                     stream.values.at(i, 1) * stream.values.at(i, 1) +
                     stream.values.at(i, 2) * stream.values.at(i, 2));
}

}  // namespace

TEST_CASE("activity catalog") {
    CHECK(synth::all_activities().size() == 6);
    int falls = 0;
    std::set<std::string> names;
    for (const auto kind : synth::all_activities()) {
        names.insert(synth::activity_name(kind));
        if (synth::is_fall(kind)) ++falls;
    }
    CHECK(falls == 3);
    CHECK(names.size() == 6);
}

TEST_CASE("a noiseless walking trace keeps unit gravity magnitude") {
    synth::TraceProfile profile;
    profile.kind = synth::ActivityKind::walk;
    profile.noise_std_g = 0.0;
    const auto trace = synth::gen_trace(profile);
    CHECK(trace.impacts.empty());
    REQUIRE(trace.stream.size() == 72);  // 4 s at 18 Hz
    for (std::size_t i = 0; i < trace.stream.size(); ++i) {
        CHECK(std::abs(stream_smv(trace.stream, i) - 1.0) < 1e-12);
        if (i > 0) {
            CHECK(trace.stream.timestamps_ms[i] >
                  trace.stream.timestamps_ms[i - 1]);
        }
    }
}

TEST_CASE("a noiseless fall spikes once, bounded by its configured peak") {
    synth::TraceProfile profile;
    profile.kind = synth::ActivityKind::fall_forward;
    profile.sample_rate_hz = 100.0;
    profile.impact_time_s = 2.0;
    profile.impact_peak_g = 4.0;
    profile.noise_std_g = 0.0;
    const auto trace = synth::gen_trace(profile);
    REQUIRE(trace.impacts.size() == 1);

    // recompute the ground-truth window straight from the samples
    std::int64_t first = -1, last = -1;
    double peak = 0.0;
    for (std::size_t i = 0; i < trace.stream.size(); ++i) {
        const double v = stream_smv(trace.stream, i);
        peak = std::max(peak, v);
        if (v > 2.0) {
            if (first < 0) first = trace.stream.timestamps_ms[i];
            last = trace.stream.timestamps_ms[i];
        }
    }
    CHECK(trace.impacts[0].start_ms == first);
    CHECK(trace.impacts[0].end_ms == last);
    CHECK(first >= 2000);
    CHECK(last <= 2150 + 10);  // the spike is 150 ms wide
    CHECK(peak <= 4.0 + 1e-9);
    CHECK(peak > 3.5);  // 100 Hz sampling lands close to the crest

    // before the fall the subject is at rest near 1 g
    CHECK(std::abs(stream_smv(trace.stream, 0) - 1.0) < 1e-12);
}

TEST_CASE("traces are a pure function of their profile") {
    synth::TraceProfile profile;
    profile.kind = synth::ActivityKind::fall_lateral;
    profile.noise_std_g = 0.1;
    profile.seed = 12;
    const auto a = synth::gen_trace(profile);
    const auto b = synth::gen_trace(profile);
    CHECK(a.stream.values.data == b.stream.values.data);
    profile.seed = 13;
    const auto c = synth::gen_trace(profile);
    CHECK(a.stream.values.data != c.stream.values.data);
}

TEST_CASE("profile validation bounds") {
    synth::TraceProfile p;
    p.kind = synth::ActivityKind::fall_forward;
    CHECK_NOTHROW(p.validate());

    auto bad = p;
    bad.sample_rate_hz = 12.9;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.sample_rate_hz = 13.0;
    CHECK_NOTHROW(bad.validate());

    bad = p;
    bad.impact_peak_g = 2.4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.impact_peak_g = 6.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.duration_s = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.impact_time_s = 0.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.impact_time_s = bad.duration_s - 0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.noise_std_g = -0.01;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    // ADL profiles ignore the fall-only fields
    synth::TraceProfile adl;
    adl.kind = synth::ActivityKind::sit;
    adl.impact_peak_g = 99.0;
    adl.impact_time_s = 0.0;
    CHECK_NOTHROW(adl.validate());
}

TEST_CASE("the generated corpus matches its documented shape") {
    synth::SynthDatasetOptions options;
    options.seed = 5;
    const auto generated = synth::gen_dataset(options);
    const auto& data = generated.dataset;

    CHECK(data.size() == 2 * 6 * 3 * 72);
    CHECK(data.feature_names ==
          std::vector<std::string>{"ax", "ay", "az", "smv", "smv_mean5",
                                   "smv_std5", "noise0", "noise1", "noise2",
                                   "noise3"});
    REQUIRE(data.has_labels());

    int positives = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        // labels restate the threshold rule on the stored magnitude column
        CHECK(data.labels[i] == (data.features.at(i, 3) > 2.0 ? 1 : 0));
        positives += data.labels[i];
        const double mag = std::sqrt(
            data.features.at(i, 0) * data.features.at(i, 0) +
            data.features.at(i, 1) * data.features.at(i, 1) +
            data.features.at(i, 2) * data.features.at(i, 2));
        CHECK(data.features.at(i, 3) == doctest::Approx(mag).epsilon(1e-12));
        if (i > 0) {
            CHECK(data.timestamps_ms[i] > data.timestamps_ms[i - 1]);
        }
    }
    CHECK(positives > 0);
    CHECK(positives < int(data.size()) / 2);

    CHECK(generated.truth.size() == 2 * 6 * 3);
    int with_impacts = 0;
    for (const auto& entry : generated.truth) {
        with_impacts += entry.impacts.empty() ? 0 : 1;
    }
    CHECK(with_impacts == 2 * 3 * 3);  // three fall kinds per subject/trial
}

TEST_CASE("trailing window statistics match a direct recomputation") {
    synth::SynthDatasetOptions options;
    options.seed = 6;
    const auto data = synth::gen_dataset(options).dataset;
    for (std::size_t i = 0; i < 72; ++i) {  // first trace only
        const std::size_t begin = i >= 4 ? i - 4 : 0;
        double sum = 0.0;
        for (std::size_t j = begin; j <= i; ++j) sum += data.features.at(j, 3);
        const double n = double(i - begin + 1);
        const double mean = sum / n;
        double var = 0.0;
        for (std::size_t j = begin; j <= i; ++j) {
            const double d = data.features.at(j, 3) - mean;
            var += d * d;
        }
        CHECK(data.features.at(i, 4) == doctest::Approx(mean).epsilon(1e-12));
        CHECK(data.features.at(i, 5) ==
              doctest::Approx(std::sqrt(var / n)).epsilon(1e-12));
    }
}

TEST_CASE("corpus generation is deterministic in the seed") {
    synth::SynthDatasetOptions options;
    options.seed = 7;
    const auto a = synth::gen_dataset(options);
    const auto b = synth::gen_dataset(options);
    CHECK(a.dataset.features.data == b.dataset.features.data);
    CHECK(a.dataset.labels == b.dataset.labels);
    options.seed = 8;
    const auto c = synth::gen_dataset(options);
    CHECK(a.dataset.features.data != c.dataset.features.data);
}

TEST_CASE("ground truth csv round-trips the fall windows") {
    const auto dir = scratch();
    synth::SynthDatasetOptions options;
    options.n_subjects = 1;
    options.trials_per_activity = 1;
    options.seed = 9;
    const auto generated = synth::gen_dataset(options);
    synth::write_ground_truth_csv(dir / "gt.csv", generated.truth);
    const auto back = synth::read_ground_truth_csv(dir / "gt.csv");

    std::vector<synth::TraceGroundTruth> nonempty;
    for (const auto& t : generated.truth) {
        if (!t.impacts.empty()) nonempty.push_back(t);
    }
    REQUIRE(back.size() == nonempty.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].trace_id == nonempty[i].trace_id);
        REQUIRE(back[i].impacts.size() == nonempty[i].impacts.size());
        CHECK(back[i].impacts[0].start_ms == nonempty[i].impacts[0].start_ms);
        CHECK(back[i].impacts[0].end_ms == nonempty[i].impacts[0].end_ms);
    }
}

TEST_CASE("dataset options validation") {
    synth::SynthDatasetOptions bad;
    bad.n_subjects = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.label_beta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.sample_rate_hz = 1001.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.n_noise_features = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
