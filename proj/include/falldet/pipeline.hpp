#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "falldet/dataset.hpp"
#include "falldet/eval.hpp"

namespace falldet::pipeline {

struct DeviceSpec {
    std::string id;
    std::string path;
    std::vector<std::string> channels;  // empty = accept the file header
};

struct RankSpec {
    int n_estimators = 100;        // forest size for the ranking itself
    bool study = true;             // also run the top-k subset study
    int study_estimators = 30;     // smaller forests for the timed refits
    std::vector<std::size_t> study_ks;  // empty = 3,5,10,20,<all>
};

struct SynthSpec {
    int subjects = 2;
    int trials = 3;
    double duration_s = 4.0;
    double sample_rate_hz = 18.0;
    double noise_std = 0.08;
    int noise_features = 4;
};

/// Everything the command-line stages need. Loaded from a strict JSON file
/// (unknown keys are rejected) and then overridden by CLI flags.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string out_dir;
    double beta = 2.0;            // impact threshold in g
    std::int64_t refractory_ms = 500;
    std::int64_t tolerance_ms = 10;  // sync matching window
    std::array<std::string, 3> axes{"ax", "ay", "az"};
    std::vector<DeviceSpec> devices;
    std::string reference_device;
    dataio::RowMeta meta{"s01", "unknown", "t1"};
    dataio::SplitSpec split;
    std::vector<std::string> models;  // defaults to all eight kinds
    std::size_t top_k = 5;
    RankSpec rank;
    std::string review_path;          // empty = no manual overrides
    bool sweep_threshold = false;
    bool unit_guard = true;
    std::optional<SynthSpec> synth;

    void validate() const;
};

PipelineConfig default_config();
PipelineConfig load_config(const std::filesystem::path& path);

/// The stages, in run-all order. Every stage reads its inputs from and
/// writes its outputs under config.out_dir, so they can be run one at a
/// time or chained.
void cmd_ingest(const PipelineConfig& config, std::ostream& log);
void cmd_sync(const PipelineConfig& config, std::ostream& log);
void cmd_smv(const PipelineConfig& config, std::ostream& log);
void cmd_label(const PipelineConfig& config, std::ostream& log);
void cmd_review_apply(const PipelineConfig& config, std::ostream& log);
void cmd_rank(const PipelineConfig& config, std::ostream& log);
void cmd_select(const PipelineConfig& config, std::ostream& log);
void cmd_train(const PipelineConfig& config, std::ostream& log);
void cmd_eval(const PipelineConfig& config, std::ostream& log);
void cmd_report(const PipelineConfig& config, std::ostream& log);
void cmd_synth_gen(const PipelineConfig& config, std::ostream& log);

/// synth-gen (or ingest + sync) followed by smv, label, review-apply, rank,
/// select, train, eval, report.
void cmd_run_all(const PipelineConfig& config, std::ostream& log);

/// Dispatch by command name; throws std::invalid_argument for unknown ones.
void run_command(const std::string& command, const PipelineConfig& config,
                 std::ostream& log);

const std::vector<std::string>& command_names();

/// The train/val/test splits the model stages work on: reviewed labels,
/// split, imputed from the training split, then z-scored with training
/// statistics.
struct PreparedSplits {
    dataio::CanonicalDataset train;
    dataio::CanonicalDataset validation;
    dataio::CanonicalDataset test;
};

PreparedSplits prepare_splits(const PipelineConfig& config);

}  // namespace falldet::pipeline
