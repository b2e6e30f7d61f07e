#include "falldet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "falldet/classifiers.hpp"
#include "falldet/csv.hpp"
#include "falldet/featsel.hpp"
#include "falldet/model_io.hpp"
#include "falldet/signal.hpp"
#include "falldet/synth.hpp"

namespace falldet::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path out_path(const PipelineConfig& config, const std::string& name) {
    return fs::path(config.out_dir) / name;
}

void require_artifact(const fs::path& path, const std::string& hint) {
    require(fs::exists(path),
            "missing " + path.string() + "; run " + hint + " first");
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        require(allowed.count(key) > 0,
                where + ": unknown key '" + key + "'");
    }
}

}  // namespace

PipelineConfig default_config() {
    PipelineConfig config;
    for (const auto kind : classifiers::all_model_kinds()) {
        config.models.push_back(classifiers::kind_name(kind));
    }
    return config;
}

void PipelineConfig::validate() const {
    require(!out_dir.empty(),
            "config: out_dir is not set (use --out or the config file)");
    require(std::isfinite(beta) && beta > 0.0,
            "config: beta must be a positive number of g");
    require(refractory_ms >= 0, "config: negative refractory_ms");
    require(tolerance_ms >= 0, "config: negative tolerance_ms");
    split.validate();
    require(!models.empty(), "config: empty model list");
    std::set<std::string> seen;
    for (const auto& name : models) {
        classifiers::kind_from_name(name);  // throws for unknown names
        require(seen.insert(name).second,
                "config: duplicate model '" + name + "'");
    }
    require(top_k >= 1, "config: top_k must be >= 1");
    require(rank.n_estimators >= 1 && rank.study_estimators >= 1,
            "config: forest sizes must be >= 1");
    for (std::size_t i = 0; i < rank.study_ks.size(); ++i) {
        require(rank.study_ks[i] >= 1, "config: study k values must be >= 1");
        require(i == 0 || rank.study_ks[i] > rank.study_ks[i - 1],
                "config: study k values must be strictly increasing");
    }
    std::set<std::string> device_ids;
    for (const auto& device : devices) {
        require(!device.id.empty() && !device.path.empty(),
                "config: devices need an id and a path");
        require(device_ids.insert(device.id).second,
                "config: duplicate device id '" + device.id + "'");
    }
    if (!devices.empty()) {
        require(device_ids.count(reference_device) > 0,
                "config: reference_device '" + reference_device +
                    "' is not a configured device");
    }
    require(axes[0] != axes[1] && axes[0] != axes[2] && axes[1] != axes[2],
            "config: axis columns must be three different names");
    for (const auto& axis : axes) {
        require(!axis.empty(), "config: empty axis column name");
    }
    if (synth) {
        require(synth->subjects >= 1 && synth->trials >= 1,
                "config: synth subjects and trials must be >= 1");
        require(synth->noise_features >= 0,
                "config: negative synth noise_features");
    }
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open config: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    require(doc.is_object(), path.string() + ": config must be a JSON object");

    PipelineConfig config = default_config();
    try {
        check_keys(doc, path.string(),
                   {"schema_version", "seed", "out_dir", "beta",
                    "refractory_ms", "tolerance_ms", "axes", "devices",
                    "reference_device", "meta", "split", "models", "top_k",
                    "rank", "review", "sweep_threshold", "unit_guard",
                    "synth"});
        require(doc.contains("schema_version"),
                path.string() + ": missing schema_version");
        require(doc.at("schema_version").is_number_integer() &&
                    doc.at("schema_version").get<int>() == 1,
                path.string() + ": unsupported schema_version, expected 1");

        if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("out_dir")) config.out_dir = doc.at("out_dir").get<std::string>();
        if (doc.contains("beta")) config.beta = doc.at("beta").get<double>();
        if (doc.contains("refractory_ms")) {
            config.refractory_ms = doc.at("refractory_ms").get<std::int64_t>();
        }
        if (doc.contains("tolerance_ms")) {
            config.tolerance_ms = doc.at("tolerance_ms").get<std::int64_t>();
        }
        if (doc.contains("axes")) {
            const auto axes = doc.at("axes").get<std::vector<std::string>>();
            require(axes.size() == 3,
                    path.string() + ": axes must list exactly three columns");
            std::copy(axes.begin(), axes.end(), config.axes.begin());
        }
        if (doc.contains("devices")) {
            config.devices.clear();
            for (const auto& entry : doc.at("devices")) {
                check_keys(entry, path.string() + ": devices",
                           {"id", "path", "channels"});
                DeviceSpec device;
                device.id = entry.at("id").get<std::string>();
                device.path = entry.at("path").get<std::string>();
                if (entry.contains("channels")) {
                    device.channels =
                        entry.at("channels").get<std::vector<std::string>>();
                }
                config.devices.push_back(std::move(device));
            }
        }
        if (doc.contains("reference_device")) {
            config.reference_device =
                doc.at("reference_device").get<std::string>();
        }
        if (doc.contains("meta")) {
            const json& meta = doc.at("meta");
            check_keys(meta, path.string() + ": meta",
                       {"subject", "activity", "trial"});
            if (meta.contains("subject")) {
                config.meta.subject = meta.at("subject").get<std::string>();
            }
            if (meta.contains("activity")) {
                config.meta.activity = meta.at("activity").get<std::string>();
            }
            if (meta.contains("trial")) {
                config.meta.trial = meta.at("trial").get<std::string>();
            }
        }
        if (doc.contains("split")) {
            const json& split = doc.at("split");
            check_keys(split, path.string() + ": split",
                       {"train", "val", "test", "stratified"});
            if (split.contains("train")) {
                config.split.train_fraction = split.at("train").get<double>();
            }
            if (split.contains("val")) {
                config.split.val_fraction = split.at("val").get<double>();
            }
            if (split.contains("test")) {
                config.split.test_fraction = split.at("test").get<double>();
            }
            if (split.contains("stratified")) {
                config.split.stratified = split.at("stratified").get<bool>();
            }
        }
        if (doc.contains("models")) {
            config.models = doc.at("models").get<std::vector<std::string>>();
        }
        if (doc.contains("top_k")) {
            config.top_k = doc.at("top_k").get<std::size_t>();
        }
        if (doc.contains("rank")) {
            const json& rank = doc.at("rank");
            check_keys(rank, path.string() + ": rank",
                       {"n_estimators", "study", "study_estimators",
                        "study_ks"});
            if (rank.contains("n_estimators")) {
                config.rank.n_estimators = rank.at("n_estimators").get<int>();
            }
            if (rank.contains("study")) {
                config.rank.study = rank.at("study").get<bool>();
            }
            if (rank.contains("study_estimators")) {
                config.rank.study_estimators =
                    rank.at("study_estimators").get<int>();
            }
            if (rank.contains("study_ks")) {
                config.rank.study_ks =
                    rank.at("study_ks").get<std::vector<std::size_t>>();
            }
        }
        if (doc.contains("review")) {
            config.review_path = doc.at("review").get<std::string>();
        }
        if (doc.contains("sweep_threshold")) {
            config.sweep_threshold = doc.at("sweep_threshold").get<bool>();
        }
        if (doc.contains("unit_guard")) {
            config.unit_guard = doc.at("unit_guard").get<bool>();
        }
        if (doc.contains("synth")) {
            const json& synth = doc.at("synth");
            check_keys(synth, path.string() + ": synth",
                       {"subjects", "trials", "duration_s", "sample_rate_hz",
                        "noise_std", "noise_features"});
            SynthSpec spec;
            if (synth.contains("subjects")) {
                spec.subjects = synth.at("subjects").get<int>();
            }
            if (synth.contains("trials")) {
                spec.trials = synth.at("trials").get<int>();
            }
            if (synth.contains("duration_s")) {
                spec.duration_s = synth.at("duration_s").get<double>();
            }
            if (synth.contains("sample_rate_hz")) {
                spec.sample_rate_hz = synth.at("sample_rate_hz").get<double>();
            }
            if (synth.contains("noise_std")) {
                spec.noise_std = synth.at("noise_std").get<double>();
            }
            if (synth.contains("noise_features")) {
                spec.noise_features = synth.at("noise_features").get<int>();
            }
            config.synth = spec;
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return config;
}

PreparedSplits prepare_splits(const PipelineConfig& config) {
    config.validate();
    const fs::path reviewed_path = out_path(config, "reviewed.csv");
    require_artifact(reviewed_path, "review-apply");
    const dataio::CanonicalDataset reviewed =
        dataio::read_canonical_csv(reviewed_path);
    require(reviewed.has_labels(),
            reviewed_path.string() + ": dataset has no label column");

    dataio::SplitSpec spec = config.split;
    spec.seed = config.seed;
    dataio::SplitResult parts = dataio::split(reviewed, spec);

    PreparedSplits out;
    out.train = dataio::impute_missing(parts.train, parts.train);
    out.validation = dataio::impute_missing(parts.validation, parts.train);
    out.test = dataio::impute_missing(parts.test, parts.train);

    const signal::NormParams norm = signal::zscore_fit(out.train);
    out.train = signal::zscore_apply(out.train, norm);
    out.validation = signal::zscore_apply(out.validation, norm);
    out.test = signal::zscore_apply(out.test, norm);
    return out;
}

namespace {

std::vector<std::string> read_selected_features(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open file: " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        const auto name = csv::trim(line);
        if (!name.empty()) names.emplace_back(name);
    }
    require(!names.empty(), path.string() + ": no feature names");
    return names;
}

eval::LabeledMatrix to_matrix(const dataio::CanonicalDataset& data) {
    return {data.features, data.labels};
}

classifiers::ModelConfig model_config_for(const PipelineConfig& config,
                                          const std::string& name) {
    classifiers::ModelConfig mc;
    mc.kind = classifiers::kind_from_name(name);
    mc.seed = config.seed;
    return mc;
}

}  // namespace

void cmd_ingest(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    require(!config.devices.empty(), "ingest: config lists no devices");
    for (const auto& device : config.devices) {
        const dataio::RawSensorStream stream =
            dataio::ingest_csv(device.path, {device.id, device.channels});
        const fs::path target =
            out_path(config, "streams/" + device.id + ".csv");
        dataio::write_stream_csv(target, stream);
        log << "ingested " << device.path << " -> " << target.string() << " ("
            << stream.size() << " samples)\n";
    }
}

void cmd_sync(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    require(!config.devices.empty(), "sync: config lists no devices");
    std::vector<dataio::RawSensorStream> streams;
    for (const auto& device : config.devices) {
        const fs::path source =
            out_path(config, "streams/" + device.id + ".csv");
        require_artifact(source, "ingest");
        streams.push_back(dataio::ingest_csv(source, {device.id, {}}));
    }
    const dataio::CanonicalDataset canonical = dataio::synchronize(
        streams, config.reference_device, config.tolerance_ms, config.meta);
    const fs::path target = out_path(config, "canonical.csv");
    dataio::write_canonical_csv(target, canonical);
    log << "synchronized " << streams.size() << " streams -> "
        << target.string() << " (" << canonical.size() << " rows)\n";
}

void cmd_smv(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const fs::path source = out_path(config, "canonical.csv");
    require_artifact(source, "sync or synth-gen");
    const dataio::CanonicalDataset canonical =
        dataio::read_canonical_csv(source);
    const signal::SmvSeries series =
        signal::smv_series(canonical, config.axes, {config.unit_guard});
    const fs::path target = out_path(config, "smv.csv");
    signal::write_smv_csv(target, series);
    log << "computed magnitudes -> " << target.string() << " ("
        << series.size() << " samples)\n";
}

void cmd_label(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const fs::path canonical_path = out_path(config, "canonical.csv");
    const fs::path smv_path = out_path(config, "smv.csv");
    require_artifact(canonical_path, "sync or synth-gen");
    require_artifact(smv_path, "smv");
    const dataio::CanonicalDataset canonical =
        dataio::read_canonical_csv(canonical_path);
    const signal::SmvSeries series = signal::read_smv_csv(smv_path);
    const signal::DetectorConfig detector{config.beta, config.refractory_ms};
    const dataio::CanonicalDataset labeled =
        signal::label_impacts(canonical, series, detector);
    const fs::path target = out_path(config, "labeled.csv");
    dataio::write_canonical_csv(target, labeled);
    std::int64_t positives = 0;
    for (const int label : labeled.labels) positives += label;
    log << "labeled " << labeled.size() << " rows (" << positives
        << " above threshold) -> " << target.string() << '\n';
}

void cmd_review_apply(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const fs::path source = out_path(config, "labeled.csv");
    require_artifact(source, "label");
    const dataio::CanonicalDataset labeled =
        dataio::read_canonical_csv(source);
    std::vector<signal::ReviewRange> review;
    if (!config.review_path.empty()) {
        review = signal::read_review_csv(config.review_path);
    }
    const dataio::CanonicalDataset reviewed =
        signal::apply_review(labeled, review);
    const fs::path target = out_path(config, "reviewed.csv");
    dataio::write_canonical_csv(target, reviewed);
    log << "applied " << review.size() << " review ranges -> "
        << target.string() << '\n';
}

void cmd_rank(const PipelineConfig& config, std::ostream& log) {
    const PreparedSplits splits = prepare_splits(config);

    trees::ForestConfig forest;
    forest.n_estimators = config.rank.n_estimators;
    const featsel::FeatureRanking ranking =
        featsel::rank_features(splits.train, forest, config.seed);
    const fs::path importances = out_path(config, "importances.csv");
    featsel::write_importances_csv(importances, ranking);
    log << "ranked " << ranking.size() << " features -> "
        << importances.string() << '\n';

    if (!config.rank.study) return;
    std::vector<std::size_t> ks = config.rank.study_ks;
    if (ks.empty()) {
        for (const std::size_t k : {std::size_t{3}, std::size_t{5},
                                    std::size_t{10}, std::size_t{20}}) {
            if (k < ranking.size()) ks.push_back(k);
        }
        ks.push_back(ranking.size());
    }
    trees::ForestConfig study_forest;
    study_forest.n_estimators = config.rank.study_estimators;
    const auto rows =
        featsel::topk_study(splits.train, ranking, ks, study_forest, config.seed);
    const fs::path study = out_path(config, "topk_study.csv");
    featsel::write_topk_csv(study, rows);
    log << "subset study over " << rows.size() << " sizes -> "
        << study.string() << '\n';
}

void cmd_select(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const fs::path source = out_path(config, "importances.csv");
    require_artifact(source, "rank");
    const featsel::FeatureRanking ranking =
        featsel::read_importances_csv(source);
    const auto names = featsel::select_top_k(ranking, config.top_k);
    std::string text;
    for (const auto& name : names) {
        text += name;
        text += '\n';
    }
    const fs::path target = out_path(config, "selected_features.txt");
    csv::write_text(target, text);
    log << "selected top " << names.size() << " features -> "
        << target.string() << '\n';
}

void cmd_train(const PipelineConfig& config, std::ostream& log) {
    const PreparedSplits splits = prepare_splits(config);
    const fs::path selected_path = out_path(config, "selected_features.txt");
    require_artifact(selected_path, "select");
    const auto names = read_selected_features(selected_path);
    const dataio::CanonicalDataset train =
        dataio::select_columns(splits.train, names);

    json times;
    times["format"] = "falldet-times";
    times["schema_version"] = 1;
    times["seconds"] = json::object();
    for (const auto& name : config.models) {
        const auto started = std::chrono::steady_clock::now();
        const classifiers::Model model = classifiers::fit_model(
            model_config_for(config, name), train.features, train.labels);
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - started;
        const fs::path target = out_path(config, "models/" + name + ".json");
        model_io::save_model(target, model);
        times["seconds"][name] = elapsed.count();
        log << "trained " << name << " in " << elapsed.count() << "s -> "
            << target.string() << '\n';
    }
    csv::write_text(out_path(config, "models/times.json"),
                    times.dump(2) + "\n");
}

void cmd_eval(const PipelineConfig& config, std::ostream& log) {
    const PreparedSplits splits = prepare_splits(config);
    const fs::path selected_path = out_path(config, "selected_features.txt");
    require_artifact(selected_path, "select");
    const auto names = read_selected_features(selected_path);
    const eval::LabeledMatrix val =
        to_matrix(dataio::select_columns(splits.validation, names));
    const eval::LabeledMatrix test =
        to_matrix(dataio::select_columns(splits.test, names));

    const fs::path times_path = out_path(config, "models/times.json");
    require_artifact(times_path, "train");
    json times;
    {
        std::ifstream in(times_path);
        try {
            in >> times;
        } catch (const json::exception& e) {
            throw std::invalid_argument(times_path.string() + ": " + e.what());
        }
    }

    std::vector<eval::ModelReport> reports;
    for (const auto& name : config.models) {
        const fs::path model_path = out_path(config, "models/" + name + ".json");
        require_artifact(model_path, "train");
        const classifiers::Model model = model_io::load_model(model_path);
        require(classifiers::feature_width(model) == names.size(),
                name + ": model width does not match selected_features.txt; "
                       "re-run train");

        double threshold =
            classifiers::decision_threshold(classifiers::kind_of(model));
        if (config.sweep_threshold) {
            threshold = eval::sweep_threshold(model, val);
        }
        eval::ModelReport report = eval::evaluate_model(model, test, threshold);
        try {
            report.metrics.training_time_seconds =
                times.at("seconds").at(name).get<double>();
        } catch (const json::exception&) {
            throw std::invalid_argument(times_path.string() +
                                        ": no training time for '" + name +
                                        "'; re-run train");
        }
        eval::write_roc_csv(out_path(config, "roc_" + name + ".csv"),
                            report.roc);
        eval::write_confusion_csv(
            out_path(config, "confusion_" + name + ".csv"), report.confusion);
        log << "evaluated " << name << ": accuracy "
            << report.metrics.accuracy << ", auc " << report.roc.auc << '\n';
        reports.push_back(std::move(report));
    }
    const fs::path target = out_path(config, "report.json");
    eval::write_report_json(target, reports, config.seed);
    log << "wrote " << target.string() << '\n';
}

void cmd_report(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const fs::path source = out_path(config, "report.json");
    require_artifact(source, "eval");
    std::ifstream in(source);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(source.string() + ": " + e.what());
    }

    std::vector<eval::ModelReport> reports;
    try {
        require(doc.at("format").get<std::string>() == "falldet-report",
                source.string() + ": not a report file");
        for (const auto& entry : doc.at("models")) {
            eval::ModelReport r;
            r.model = entry.at("model").get<std::string>();
            r.threshold = entry.at("threshold").get<double>();
            const json& cm = entry.at("confusion");
            r.confusion = {cm.at("tp").get<std::int64_t>(),
                           cm.at("fp").get<std::int64_t>(),
                           cm.at("tn").get<std::int64_t>(),
                           cm.at("fn").get<std::int64_t>()};
            const json& metrics = entry.at("metrics");
            r.metrics.accuracy = metrics.at("accuracy").get<double>();
            r.metrics.precision = metrics.at("precision").get<double>();
            r.metrics.recall = metrics.at("recall").get<double>();
            r.metrics.f1 = metrics.at("f1").get<double>();
            r.metrics.precision_weighted =
                metrics.at("precision_weighted").get<double>();
            r.metrics.recall_weighted =
                metrics.at("recall_weighted").get<double>();
            r.metrics.f1_weighted = metrics.at("f1_weighted").get<double>();
            r.metrics.training_time_seconds =
                entry.at("training_time_seconds").get<double>();
            r.roc.auc = metrics.at("auc").get<double>();
            reports.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(source.string() + ": " + e.what());
    }

    const std::string table = eval::format_report_table(reports);
    csv::write_text(out_path(config, "report.txt"), table);
    log << table;
}

void cmd_synth_gen(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const SynthSpec spec = config.synth.value_or(SynthSpec{});
    synth::SynthDatasetOptions options;
    options.n_subjects = spec.subjects;
    options.trials_per_activity = spec.trials;
    options.duration_s = spec.duration_s;
    options.sample_rate_hz = spec.sample_rate_hz;
    options.noise_std_g = spec.noise_std;
    options.n_noise_features = spec.noise_features;
    options.label_beta = config.beta;
    options.seed = config.seed;

    synth::GeneratedDataset generated = synth::gen_dataset(options);

    // The pipeline's own labeling stage reproduces the labels from the smv
    // column, so the canonical file ships without them.
    dataio::CanonicalDataset unlabeled = generated.dataset;
    unlabeled.labels.clear();
    const fs::path canonical = out_path(config, "canonical.csv");
    dataio::write_canonical_csv(canonical, unlabeled);

    dataio::RawSensorStream raw;
    raw.device_id = "synth";
    raw.channel_names = {"ax", "ay", "az"};
    raw.timestamps_ms = unlabeled.timestamps_ms;
    raw.values = Matrix(unlabeled.size(), 3);
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            raw.values.at(i, c) = unlabeled.features.at(i, c);
        }
    }
    dataio::write_stream_csv(out_path(config, "raw_synth.csv"), raw);
    synth::write_ground_truth_csv(out_path(config, "ground_truth.csv"),
                                  generated.truth);
    log << "generated " << unlabeled.size() << " rows over "
        << generated.truth.size() << " traces -> " << canonical.string()
        << '\n';
}

void cmd_run_all(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    if (config.synth) {
        cmd_synth_gen(config, log);
    } else {
        cmd_ingest(config, log);
        cmd_sync(config, log);
    }
    cmd_smv(config, log);
    cmd_label(config, log);
    cmd_review_apply(config, log);
    cmd_rank(config, log);
    cmd_select(config, log);
    cmd_train(config, log);
    cmd_eval(config, log);
    cmd_report(config, log);
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {
        "ingest", "sync",   "smv",   "label", "review-apply", "rank",
        "select", "train",  "eval",  "report", "synth-gen",   "run-all",
    };
    return names;
}

void run_command(const std::string& command, const PipelineConfig& config,
                 std::ostream& log) {
    if (command == "ingest") return cmd_ingest(config, log);
    if (command == "sync") return cmd_sync(config, log);
    if (command == "smv") return cmd_smv(config, log);
    if (command == "label") return cmd_label(config, log);
    if (command == "review-apply") return cmd_review_apply(config, log);
    if (command == "rank") return cmd_rank(config, log);
    if (command == "select") return cmd_select(config, log);
    if (command == "train") return cmd_train(config, log);
    if (command == "eval") return cmd_eval(config, log);
    if (command == "report") return cmd_report(config, log);
    if (command == "synth-gen") return cmd_synth_gen(config, log);
    if (command == "run-all") return cmd_run_all(config, log);
    throw std::invalid_argument("unknown command '" + command + "'");
}

}  // namespace falldet::pipeline
