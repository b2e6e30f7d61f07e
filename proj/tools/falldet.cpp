#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "falldet/csv.hpp"
#include "falldet/pipeline.hpp"

namespace {

std::vector<std::string> split_models(const std::string& arg) {
    std::vector<std::string> names;
    std::string current;
    for (const char c : arg) {
        if (c == ',') {
            const auto name = falldet::csv::trim(current);
            if (!name.empty()) names.emplace_back(name);
            current.clear();
        } else {
            current += c;
        }
    }
    const auto name = falldet::csv::trim(current);
    if (!name.empty()) names.emplace_back(name);
    return names;
}

const std::map<std::string, std::string>& command_help() {
    static const std::map<std::string, std::string> help = {
        {"ingest", "Validate each device CSV and copy it into the workspace"},
        {"sync", "Align ingested streams on the reference device clock"},
        {"smv", "Compute the acceleration magnitude series"},
        {"label", "Threshold the magnitude series into binary impact labels"},
        {"review-apply", "Overlay manual review ranges onto the labels"},
        {"rank", "Rank features by forest importance and study subset sizes"},
        {"select", "Freeze the top-k feature list"},
        {"train", "Fit the configured models on the training split"},
        {"eval", "Score the trained models on the held-out test split"},
        {"report", "Render the metrics table from report.json"},
        {"synth-gen", "Generate a synthetic labeled corpus"},
        {"run-all", "Run every stage in order"},
    };
    return help;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wearable-accelerometer fall detection pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::string models_arg;
    std::string review_path;
    std::uint64_t seed = 0;
    double beta = 2.0;
    std::size_t top_k = 5;
    bool sweep = false;

    app.add_option("--config", config_path, "JSON config file");
    const auto* out_opt =
        app.add_option("--out", out_dir, "Workspace directory for artifacts");
    const auto* seed_opt = app.add_option("--seed", seed, "Master RNG seed");
    const auto* beta_opt =
        app.add_option("--beta", beta, "Impact threshold in g");
    const auto* models_opt = app.add_option(
        "--models", models_arg,
        "Comma-separated model list (svm,logreg,sgd,knn,gnb,tree,forest,"
        "gboost)");
    const auto* k_opt =
        app.add_option("--k", top_k, "How many top-ranked features to keep");
    const auto* review_opt = app.add_option(
        "--review", review_path, "Manual review CSV (start_ms,end_ms,label)");
    const auto* sweep_opt = app.add_flag(
        "--sweep-threshold", sweep,
        "Pick each model's decision threshold by F1 on the validation split");
    bool synth = false;
    const auto* synth_opt = app.add_flag(
        "--synth", synth,
        "Use a generated corpus (default parameters) instead of device files");

    for (const auto& name : falldet::pipeline::command_names()) {
        app.add_subcommand(name, command_help().at(name));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        falldet::pipeline::PipelineConfig config =
            config_path.empty() ? falldet::pipeline::default_config()
                                : falldet::pipeline::load_config(config_path);
        if (out_opt->count() > 0) config.out_dir = out_dir;
        if (seed_opt->count() > 0) config.seed = seed;
        if (beta_opt->count() > 0) config.beta = beta;
        if (models_opt->count() > 0) config.models = split_models(models_arg);
        if (k_opt->count() > 0) config.top_k = top_k;
        if (review_opt->count() > 0) config.review_path = review_path;
        if (sweep_opt->count() > 0) config.sweep_threshold = sweep;
        if (synth_opt->count() > 0 && synth && !config.synth) {
            config.synth = falldet::pipeline::SynthSpec{};
        }

        falldet::pipeline::run_command(command, config, std::cout);
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "falldet " << command << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "falldet " << command << ": " << e.what() << '\n';
        return 2;
    }
}
