#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "falldet/csv.hpp"
#include "falldet/dataset.hpp"

using namespace falldet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path("scratch_dataio") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

dataio::CanonicalDataset tiny_dataset(std::size_t n, bool labeled = true) {
    dataio::CanonicalDataset data;
    data.feature_names = {"a", "b"};
    data.features = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        data.timestamps_ms.push_back(static_cast<std::int64_t>(10 * i));
        data.features.at(i, 0) = static_cast<double>(i);
        data.features.at(i, 1) = static_cast<double>(n - i);
        data.meta.push_back({"s01", "walk", "t1"});
        if (labeled) data.labels.push_back(i % 2 == 0 ? 0 : 1);
    }
    return data;
}

}  // namespace

TEST_CASE("double formatting round-trips exactly") {
    for (const double v : {0.1, 2.0, -3.5, 1e-8, 12345.6789, 0.8164965809277259}) {
        const auto text = csv::format_double(v);
        const auto back = csv::parse_double(text);
        REQUIRE(back.has_value());
        CHECK(*back == v);
    }
    CHECK(csv::format_double(2.0) == "2");
}

TEST_CASE("cell parsing") {
    CHECK(csv::parse_double(" 1.5 ") == 1.5);
    CHECK_FALSE(csv::parse_double("1.5x").has_value());
    CHECK_FALSE(csv::parse_double("").has_value());
    CHECK(csv::is_missing(""));
    CHECK(csv::is_missing("  "));
    CHECK(csv::is_missing("NaN"));
    CHECK(csv::is_missing("nan"));
    CHECK_FALSE(csv::is_missing("0"));

    CHECK(csv::parse_timestamp_ms("10", "t") == 10);
    CHECK(csv::parse_timestamp_ms("10.6", "t") == 11);
    CHECK(csv::parse_timestamp_ms("10.4", "t") == 10);
    CHECK_THROWS_AS(csv::parse_timestamp_ms("abc", "t"), std::invalid_argument);
}

TEST_CASE("read_table rejects broken files") {
    const auto dir = scratch("tables");
    CHECK_THROWS_AS(csv::read_table(dir / "absent.csv"), std::invalid_argument);

    csv::write_text(dir / "ragged.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(csv::read_table(dir / "ragged.csv"), std::invalid_argument);

    csv::write_text(dir / "ok.csv", "a,b\r\n1, 2\r\n\n3,4\n");
    const auto table = csv::read_table(dir / "ok.csv");
    CHECK(table.header == std::vector<std::string>{"a", "b"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == std::vector<std::string>{"1", "2"});
}

TEST_CASE("ingest reads device csv with gaps as NaN") {
    const auto dir = scratch("ingest");
    csv::write_text(dir / "dev.csv",
                    "timestamp_ms,ax,ay,az\n"
                    "0,0.1,0.2,0.9\n"
                    "20,,0.3,1.0\n"
                    "40,nan,0.4,oops\n");
    const auto stream = dataio::ingest_csv(dir / "dev.csv", {"wrist", {}});
    CHECK(stream.device_id == "wrist");
    CHECK(stream.channel_names == std::vector<std::string>{"ax", "ay", "az"});
    REQUIRE(stream.size() == 3);
    CHECK(stream.values.at(0, 0) == 0.1);
    CHECK(std::isnan(stream.values.at(1, 0)));
    CHECK(std::isnan(stream.values.at(2, 0)));
    CHECK(std::isnan(stream.values.at(2, 2)));  // unparseable treated as gap

    csv::write_text(dir / "dup.csv", "timestamp_ms,ax\n0,1\n0,2\n");
    CHECK_THROWS_AS(dataio::ingest_csv(dir / "dup.csv", {"d", {}}),
                    std::invalid_argument);

    // schema mismatch
    CHECK_THROWS_AS(dataio::ingest_csv(dir / "dev.csv", {"wrist", {"gx", "gy", "gz"}}),
                    std::invalid_argument);

    csv::write_text(dir / "nohdr.csv", "time,ax\n0,1\n");
    CHECK_THROWS_AS(dataio::ingest_csv(dir / "nohdr.csv", {"d", {}}),
                    std::invalid_argument);
}

TEST_CASE("stream csv round-trips through write and ingest") {
    const auto dir = scratch("stream_rt");
    dataio::RawSensorStream stream;
    stream.device_id = "belt";
    stream.channel_names = {"ax", "ay"};
    stream.timestamps_ms = {0, 7, 19};
    stream.values = Matrix(3, 2);
    stream.values.at(0, 0) = 0.25;
    stream.values.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
    stream.values.at(2, 0) = -1.75;
    dataio::write_stream_csv(dir / "belt.csv", stream);
    const auto back = dataio::ingest_csv(dir / "belt.csv", {"belt", {}});
    CHECK(back.timestamps_ms == stream.timestamps_ms);
    CHECK(back.channel_names == stream.channel_names);
    CHECK(back.values.at(0, 0) == 0.25);
    CHECK(std::isnan(back.values.at(1, 1)));
    CHECK(back.values.at(2, 0) == -1.75);
}

TEST_CASE("synchronize joins on nearest timestamp within tolerance") {
    dataio::RawSensorStream belt;
    belt.device_id = "belt";
    belt.channel_names = {"v"};
    belt.timestamps_ms = {0, 10, 20, 30};
    belt.values = Matrix(4, 1);
    for (std::size_t i = 0; i < 4; ++i) belt.values.at(i, 0) = double(i + 1);

    dataio::RawSensorStream wrist;
    wrist.device_id = "wrist";
    wrist.channel_names = {"w"};
    wrist.timestamps_ms = {1, 9, 26};
    wrist.values = Matrix(3, 1);
    wrist.values.at(0, 0) = 10;
    wrist.values.at(1, 0) = 20;
    wrist.values.at(2, 0) = 30;

    const auto joined =
        dataio::synchronize({belt, wrist}, "belt", 2, {"s01", "walk", "t1"});
    CHECK(joined.feature_names ==
          std::vector<std::string>{"belt_v", "wrist_w"});
    REQUIRE(joined.size() == 2);  // rows at 20 and 30 have no match within 2ms
    CHECK(joined.timestamps_ms == std::vector<std::int64_t>{0, 10});
    CHECK(joined.features.at(0, 1) == 10);
    CHECK(joined.features.at(1, 1) == 20);
    CHECK(joined.meta[0].subject == "s01");

    CHECK_THROWS_AS(dataio::synchronize({belt, wrist}, "nope", 2, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dataio::synchronize({belt, wrist}, "belt", -1, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dataio::synchronize({belt, belt}, "belt", 2, {}),
                    std::invalid_argument);
}

TEST_CASE("synchronize resolves distance ties to the earlier sample") {
    dataio::RawSensorStream ref;
    ref.device_id = "r";
    ref.channel_names = {"x"};
    ref.timestamps_ms = {5};
    ref.values = Matrix(1, 1);

    dataio::RawSensorStream other;
    other.device_id = "o";
    other.channel_names = {"y"};
    other.timestamps_ms = {4, 6};
    other.values = Matrix(2, 1);
    other.values.at(0, 0) = 100;
    other.values.at(1, 0) = 200;

    const auto joined = dataio::synchronize({ref, other}, "r", 5, {});
    REQUIRE(joined.size() == 1);
    CHECK(joined.features.at(0, 1) == 100);
}

TEST_CASE("impute fills gaps with training-column means") {
    auto data = tiny_dataset(4);
    data.features.at(1, 0) = std::numeric_limits<double>::quiet_NaN();

    auto stats = tiny_dataset(3);  // column a mean over {0,1,2} = 1
    const auto filled = dataio::impute_missing(data, stats);
    CHECK(filled.features.at(1, 0) == doctest::Approx(1.0));
    CHECK(filled.features.at(0, 0) == 0.0);  // untouched

    auto hollow = tiny_dataset(3);
    for (std::size_t i = 0; i < 3; ++i) {
        hollow.features.at(i, 0) = std::numeric_limits<double>::quiet_NaN();
    }
    CHECK_THROWS_AS(dataio::impute_missing(data, hollow),
                    std::invalid_argument);
}

TEST_CASE("split produces disjoint covering parts with floor sizes") {
    auto data = tiny_dataset(10);
    dataio::SplitSpec spec;
    spec.seed = 3;
    const auto parts = dataio::split(data, spec);
    CHECK(parts.train.size() == 8);
    CHECK(parts.validation.size() == 1);
    CHECK(parts.test.size() == 1);

    std::multiset<double> seen;
    for (const auto* part : {&parts.train, &parts.validation, &parts.test}) {
        for (std::size_t i = 0; i < part->size(); ++i) {
            seen.insert(part->features.at(i, 0));
        }
    }
    CHECK(seen.size() == 10);
    CHECK(*seen.begin() == 0.0);
    CHECK(*seen.rbegin() == 9.0);
}

TEST_CASE("stratified split keeps class proportions") {
    dataio::CanonicalDataset data = tiny_dataset(100);
    for (std::size_t i = 0; i < 100; ++i) data.labels[i] = i < 50 ? 0 : 1;
    dataio::SplitSpec spec;
    spec.seed = 9;
    const auto parts = dataio::split(data, spec);
    auto count_ones = [](const dataio::CanonicalDataset& d) {
        int ones = 0;
        for (const int y : d.labels) ones += y;
        return ones;
    };
    CHECK(parts.validation.size() == 10);
    CHECK(parts.test.size() == 10);
    CHECK(count_ones(parts.validation) == 5);
    CHECK(count_ones(parts.test) == 5);
    CHECK(count_ones(parts.train) == 40);

    // same seed, same partition; the split is a pure function of its inputs
    const auto again = dataio::split(data, spec);
    CHECK(again.train.timestamps_ms == parts.train.timestamps_ms);

    dataio::SplitSpec other = spec;
    other.seed = 10;
    const auto moved = dataio::split(data, other);
    CHECK(moved.train.timestamps_ms != parts.train.timestamps_ms);
}

TEST_CASE("split validation") {
    auto data = tiny_dataset(10);
    dataio::SplitSpec spec;
    spec.train_fraction = 0.5;
    CHECK_THROWS_AS(dataio::split(data, spec), std::invalid_argument);

    auto tiny = tiny_dataset(2);
    CHECK_THROWS_AS(dataio::split(tiny, dataio::SplitSpec{}),
                    std::invalid_argument);

    auto unlabeled = tiny_dataset(10, false);
    CHECK_THROWS_AS(dataio::split(unlabeled, dataio::SplitSpec{}),
                    std::invalid_argument);
    dataio::SplitSpec plain;
    plain.stratified = false;
    CHECK_NOTHROW(dataio::split(unlabeled, plain));
}

TEST_CASE("canonical csv round-trips data, meta, gaps and labels") {
    const auto dir = scratch("canonical");
    auto data = tiny_dataset(5);
    data.features.at(2, 1) = std::numeric_limits<double>::quiet_NaN();
    dataio::write_canonical_csv(dir / "c.csv", data);
    const auto back = dataio::read_canonical_csv(dir / "c.csv");
    CHECK(back.feature_names == data.feature_names);
    CHECK(back.timestamps_ms == data.timestamps_ms);
    CHECK(back.labels == data.labels);
    CHECK(back.meta[3].activity == "walk");
    CHECK(std::isnan(back.features.at(2, 1)));
    CHECK(back.features.at(4, 0) == 4.0);

    auto bare = tiny_dataset(3, false);
    dataio::write_canonical_csv(dir / "bare.csv", bare);
    const auto bare_back = dataio::read_canonical_csv(dir / "bare.csv");
    CHECK_FALSE(bare_back.has_labels());
}

TEST_CASE("select_columns projects and reorders") {
    const auto data = tiny_dataset(4);
    const auto picked = dataio::select_columns(data, {"b", "a"});
    CHECK(picked.feature_names == std::vector<std::string>{"b", "a"});
    CHECK(picked.features.at(0, 0) == 4.0);
    CHECK(picked.features.at(0, 1) == 0.0);
    CHECK(picked.labels == data.labels);

    CHECK_THROWS_AS(dataio::select_columns(data, {"a", "zzz"}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dataio::select_columns(data, {"a", "a"}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dataio::feature_index(data, "zzz"), std::invalid_argument);
}
