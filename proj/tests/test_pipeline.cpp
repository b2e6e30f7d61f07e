#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>

#include "falldet/classifiers.hpp"
#include "falldet/csv.hpp"
#include "falldet/dataset.hpp"
#include "falldet/pipeline.hpp"

using namespace falldet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path("scratch_pipeline") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(static_cast<bool>(in));
    json doc;
    in >> doc;
    return doc;
}

json masked_report(const fs::path& path) {
    json doc = read_json(path);
    for (auto& entry : doc.at("models")) {
        entry["training_time_seconds"] = 0.0;
    }
    return doc;
}

template <typename Fn>
std::string error_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "<no exception>";
}

bool mentions(const std::string& message, const std::string& needle) {
    return message.find(needle) != std::string::npos;
}

pipeline::PipelineConfig synth_config(const fs::path& out, std::uint64_t seed,
                                      int subjects = 1, int trials = 2) {
    pipeline::PipelineConfig config = pipeline::default_config();
    config.out_dir = out.string();
    config.seed = seed;
    pipeline::SynthSpec spec;
    spec.subjects = subjects;
    spec.trials = trials;
    config.synth = spec;
    return config;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "cli_stdout.txt";
    const fs::path err_file = dir / "cli_stderr.txt";
    const std::string command = std::string(FALLDET_BIN) + " " + args + " >" +
                                out_file.string() + " 2>" + err_file.string();
    const int status = std::system(command.c_str());
    CliResult result;
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    result.out = read_file(out_file);
    result.err = read_file(err_file);
    return result;
}

}  // namespace

TEST_CASE("the default config trains every model") {
    const auto config = pipeline::default_config();
    CHECK(config.models.size() == 8);
    CHECK(config.models.front() == "svm");
    CHECK(config.beta == 2.0);
    CHECK(config.top_k == 5);
    CHECK(config.split.train_fraction == 0.8);
    CHECK(config.split.val_fraction == 0.1);
    CHECK(config.split.test_fraction == 0.1);
    CHECK(config.split.stratified);
    CHECK_FALSE(config.synth.has_value());
}

TEST_CASE("config files load strictly") {
    const auto dir = scratch("config");

    SUBCASE("a full file populates every field") {
        const fs::path path = dir / "full.json";
        csv::write_text(path, R"({
            "schema_version": 1,
            "seed": 9,
            "out_dir": "workspace",
            "beta": 2.5,
            "refractory_ms": 250,
            "tolerance_ms": 5,
            "axes": ["belt_ax", "belt_ay", "belt_az"],
            "devices": [
                {"id": "belt", "path": "belt.csv",
                 "channels": ["ax", "ay", "az"]},
                {"id": "wrist", "path": "wrist.csv"}
            ],
            "reference_device": "belt",
            "meta": {"subject": "s07", "activity": "mixed", "trial": "t2"},
            "split": {"train": 0.7, "val": 0.15, "test": 0.15,
                      "stratified": false},
            "models": ["knn", "tree"],
            "top_k": 2,
            "rank": {"n_estimators": 10, "study": false,
                     "study_estimators": 5, "study_ks": [1, 2]},
            "review": "overrides.csv",
            "sweep_threshold": true,
            "unit_guard": false,
            "synth": {"subjects": 1, "trials": 1, "noise_std": 0.05}
        })");
        const auto config = pipeline::load_config(path);
        CHECK(config.seed == 9);
        CHECK(config.out_dir == "workspace");
        CHECK(config.beta == 2.5);
        CHECK(config.refractory_ms == 250);
        CHECK(config.tolerance_ms == 5);
        CHECK(config.axes[0] == "belt_ax");
        REQUIRE(config.devices.size() == 2);
        CHECK(config.devices[0].channels ==
              std::vector<std::string>{"ax", "ay", "az"});
        CHECK(config.devices[1].channels.empty());
        CHECK(config.reference_device == "belt");
        CHECK(config.meta.subject == "s07");
        CHECK(config.split.train_fraction == 0.7);
        CHECK_FALSE(config.split.stratified);
        CHECK(config.models == std::vector<std::string>{"knn", "tree"});
        CHECK(config.top_k == 2);
        CHECK(config.rank.n_estimators == 10);
        CHECK_FALSE(config.rank.study);
        CHECK(config.rank.study_ks == std::vector<std::size_t>{1, 2});
        CHECK(config.review_path == "overrides.csv");
        CHECK(config.sweep_threshold);
        CHECK_FALSE(config.unit_guard);
        REQUIRE(config.synth.has_value());
        CHECK(config.synth->subjects == 1);
        CHECK(config.synth->noise_std == 0.05);
        CHECK(config.synth->sample_rate_hz == 18.0);  // untouched default
        CHECK_NOTHROW(config.validate());
    }

    SUBCASE("unknown keys are named in the error") {
        const fs::path path = dir / "typo.json";
        csv::write_text(path, R"({"schema_version": 1, "betas": 2.0})");
        CHECK(mentions(error_message([&] { pipeline::load_config(path); }),
                       "betas"));
    }

    SUBCASE("schema_version is mandatory and pinned") {
        const fs::path missing = dir / "missing.json";
        csv::write_text(missing, R"({"seed": 1})");
        CHECK(mentions(error_message([&] { pipeline::load_config(missing); }),
                       "schema_version"));
        const fs::path wrong = dir / "wrong.json";
        csv::write_text(wrong, R"({"schema_version": 2})");
        CHECK_THROWS_AS(pipeline::load_config(wrong), std::invalid_argument);
    }

    SUBCASE("malformed documents and field types are rejected") {
        const fs::path broken = dir / "broken.json";
        csv::write_text(broken, "{ not json");
        CHECK_THROWS_AS(pipeline::load_config(broken), std::invalid_argument);
        const fs::path typed = dir / "typed.json";
        csv::write_text(typed, R"({"schema_version": 1, "seed": "twelve"})");
        CHECK_THROWS_AS(pipeline::load_config(typed), std::invalid_argument);
        const fs::path axes = dir / "axes.json";
        csv::write_text(axes, R"({"schema_version": 1, "axes": ["x", "y"]})");
        CHECK(mentions(error_message([&] { pipeline::load_config(axes); }),
                       "three"));
        CHECK_THROWS_AS(pipeline::load_config(dir / "absent.json"),
                        std::invalid_argument);
    }
}

TEST_CASE("config validation rejects bad combinations") {
    pipeline::PipelineConfig base = pipeline::default_config();
    base.out_dir = "w";
    CHECK_NOTHROW(base.validate());

    auto config = base;
    config.models = {"svm", "svm"};
    CHECK(mentions(error_message([&] { config.validate(); }), "duplicate"));

    config = base;
    config.models = {"perceptron"};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = base;
    config.top_k = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = base;
    config.beta = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = base;
    config.axes = {"x", "x", "z"};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = base;
    config.devices = {{"belt", "a.csv", {}}, {"belt", "b.csv", {}}};
    config.reference_device = "belt";
    CHECK(mentions(error_message([&] { config.validate(); }), "duplicate"));

    config = base;
    config.devices = {{"belt", "a.csv", {}}};
    config.reference_device = "wrist";
    CHECK(mentions(error_message([&] { config.validate(); }), "wrist"));

    config = base;
    config.rank.study_ks = {3, 3};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = base;
    config.out_dir.clear();
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    CHECK_THROWS_AS(
        pipeline::run_command("frobnicate", base, std::cout),
        std::invalid_argument);
    CHECK(pipeline::command_names().size() == 12);
}

TEST_CASE("run-all lays out the full artifact tree") {
    const auto dir = scratch("run_all");
    const auto config = synth_config(dir, 11);
    std::ostringstream log;
    pipeline::cmd_run_all(config, log);

    for (const std::string name :
         {"canonical.csv", "raw_synth.csv", "ground_truth.csv", "smv.csv",
          "labeled.csv", "reviewed.csv", "importances.csv", "topk_study.csv",
          "selected_features.txt", "models/times.json", "report.json",
          "roc_svm.csv", "confusion_gboost.csv", "report.txt"}) {
        INFO("artifact: " << name);
        CHECK(fs::exists(dir / name));
    }
    for (const auto& model : config.models) {
        CHECK(fs::exists(dir / ("models/" + model + ".json")));
    }

    // no review file configured, so review-apply is an identity copy
    CHECK(read_file(dir / "labeled.csv") == read_file(dir / "reviewed.csv"));

    std::istringstream selected(read_file(dir / "selected_features.txt"));
    std::vector<std::string> lines;
    for (std::string line; std::getline(selected, line);) lines.push_back(line);
    CHECK(lines.size() == config.top_k);

    const json report = read_json(dir / "report.json");
    CHECK(report.at("format") == "falldet-report");
    CHECK(report.at("schema_version") == 1);
    CHECK(report.at("seed") == 11);
    REQUIRE(report.at("models").size() == config.models.size());
    for (std::size_t i = 0; i < config.models.size(); ++i) {
        CHECK(report.at("models")[i].at("model") == config.models[i]);
        CHECK(report.at("models")[i].at("training_time_seconds")
                  .get<double>() >= 0.0);
    }
    CHECK(mentions(log.str(), "wrote"));

    SUBCASE("relabeling is idempotent") {
        const std::string before = read_file(dir / "labeled.csv");
        std::ostringstream relog;
        pipeline::cmd_label(config, relog);
        CHECK(read_file(dir / "labeled.csv") == before);
    }
}

TEST_CASE("running the stages one by one matches run-all") {
    const auto dir_a = scratch("chained");
    const auto dir_b = scratch("stepped");
    std::ostringstream log;
    pipeline::cmd_run_all(synth_config(dir_a, 21), log);

    const auto config = synth_config(dir_b, 21);
    pipeline::cmd_synth_gen(config, log);
    pipeline::cmd_smv(config, log);
    pipeline::cmd_label(config, log);
    pipeline::cmd_review_apply(config, log);
    pipeline::cmd_rank(config, log);
    pipeline::cmd_select(config, log);
    pipeline::cmd_train(config, log);
    pipeline::cmd_eval(config, log);
    pipeline::cmd_report(config, log);

    for (const std::string name :
         {"canonical.csv", "smv.csv", "labeled.csv", "reviewed.csv",
          "importances.csv", "selected_features.txt", "models/svm.json",
          "models/knn.json", "models/forest.json"}) {
        INFO("artifact: " << name);
        CHECK(read_file(dir_a / name) == read_file(dir_b / name));
    }
    CHECK(masked_report(dir_a / "report.json") ==
          masked_report(dir_b / "report.json"));
}

TEST_CASE("device csv files flow through ingest and sync") {
    const auto dir = scratch("devices");
    std::string belt = "timestamp_ms,ax,ay,az\n";
    std::string wrist = "timestamp_ms,w0\n";
    for (int i = 0; i < 12; ++i) {
        const std::string ts = std::to_string(i * 20);
        if (i == 6) {
            belt += ts + ",0.5,0.1,3.9\n";
        } else {
            belt += ts + ",0,0,1\n";
        }
        wrist += ts + ",0.25\n";
    }
    csv::write_text(dir / "belt.csv", belt);
    csv::write_text(dir / "wrist.csv", wrist);

    pipeline::PipelineConfig config = pipeline::default_config();
    config.out_dir = (dir / "work").string();
    config.devices = {{"belt", (dir / "belt.csv").string(), {}},
                      {"wrist", (dir / "wrist.csv").string(), {}}};
    config.reference_device = "belt";
    config.axes = {"belt_ax", "belt_ay", "belt_az"};

    std::ostringstream log;
    pipeline::cmd_ingest(config, log);
    CHECK(fs::exists(dir / "work/streams/belt.csv"));
    CHECK(fs::exists(dir / "work/streams/wrist.csv"));

    pipeline::cmd_sync(config, log);
    const auto canonical =
        dataio::read_canonical_csv(dir / "work/canonical.csv");
    CHECK(canonical.size() == 12);
    CHECK(canonical.feature_names ==
          std::vector<std::string>{"belt_ax", "belt_ay", "belt_az",
                                   "wrist_w0"});
    CHECK(canonical.meta.front().subject == config.meta.subject);

    pipeline::cmd_smv(config, log);
    pipeline::cmd_label(config, log);
    const auto labeled = dataio::read_canonical_csv(dir / "work/labeled.csv");
    REQUIRE(labeled.has_labels());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        CHECK(labeled.labels[i] == (i == 6 ? 1 : 0));
    }
}

TEST_CASE("review ranges override the thresholded labels") {
    const auto dir = scratch("review");
    auto config = synth_config(dir, 3, 1, 1);
    std::ostringstream log;
    pipeline::cmd_synth_gen(config, log);
    pipeline::cmd_smv(config, log);
    pipeline::cmd_label(config, log);

    const auto labeled = dataio::read_canonical_csv(dir / "labeled.csv");
    REQUIRE(labeled.labels[0] == 0);  // the corpus starts with a walk trace

    const fs::path review = dir / "overrides.csv";
    csv::write_text(review, "start_ms,end_ms,label\n0,0,1\n");
    config.review_path = review.string();
    pipeline::cmd_review_apply(config, log);

    const auto reviewed = dataio::read_canonical_csv(dir / "reviewed.csv");
    REQUIRE(reviewed.size() == labeled.size());
    CHECK(reviewed.labels[0] == 1);
    for (std::size_t i = 1; i < reviewed.size(); ++i) {
        CHECK(reviewed.labels[i] == labeled.labels[i]);
    }
}

TEST_CASE("model stages insist on the reviewed labels") {
    const auto dir = scratch("no_review");
    const auto config = synth_config(dir, 1);
    const auto message =
        error_message([&] { pipeline::prepare_splits(config); });
    CHECK(mentions(message, "review-apply"));
    CHECK(mentions(message, "reviewed.csv"));
}

TEST_CASE("command line entry point") {
    const auto dir = scratch("cli");
    const fs::path work = dir / "work";

    SUBCASE("run-all with a generated corpus succeeds") {
        const auto result = run_cli(
            "run-all --out " + work.string() + " --seed 3 --synth", dir);
        CHECK(result.exit_code == 0);
        CHECK(fs::exists(work / "report.json"));
        CHECK(mentions(result.out, "wrote"));

        // narrowing the selection re-freezes the feature list
        const auto narrowed = run_cli(
            "select --out " + work.string() + " --k 3", dir);
        CHECK(narrowed.exit_code == 0);
        std::istringstream selected(read_file(work / "selected_features.txt"));
        int lines = 0;
        for (std::string line; std::getline(selected, line);) ++lines;
        CHECK(lines == 3);
    }

    SUBCASE("stages explain which prerequisite is missing") {
        const fs::path empty = dir / "empty";
        fs::create_directories(empty);
        const auto result =
            run_cli("rank --out " + empty.string() + " --synth", dir);
        CHECK(result.exit_code == 1);
        CHECK(result.err.rfind("falldet rank:", 0) == 0);
        CHECK(mentions(result.err, "review-apply"));
    }

    SUBCASE("bad flags and missing config fail cleanly") {
        const auto bogus = run_cli(
            "train --out " + work.string() + " --models flux", dir);
        CHECK(bogus.exit_code == 1);
        CHECK(mentions(bogus.err, "flux"));

        const auto no_out = run_cli("smv", dir);
        CHECK(no_out.exit_code == 1);
        CHECK(mentions(no_out.err, "out_dir"));

        const auto unknown = run_cli("frobnicate", dir);
        CHECK(unknown.exit_code == 1);

        const auto help = run_cli("--help", dir);
        CHECK(help.exit_code == 0);
        CHECK(mentions(help.out, "run-all"));
    }
}
