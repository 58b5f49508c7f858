#pragma once

#include "balance_sheets.hpp"
#include "dataset.hpp"
#include "debtrank.hpp"
#include "logit.hpp"
#include "mlp.hpp"
#include "synthetic.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace ibnet::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

struct ReconstructStage {
    fs::path panel;
    std::string quarter;
    double tolerance = 1e-8;
    int max_iter = 10000;
    std::optional<fs::path> dump_matrix;
};

struct ReconstructSummary {
    RasReport report;
    double closure_factor = 1.0;
    std::size_t banks = 0;
    std::vector<std::string> excluded;
    std::size_t rejected_rows = 0;
};

ReconstructSummary reconstruct_stage(const ReconstructStage& opts);

struct SimulateStage {
    fs::path panel;
    std::string quarter;
    double shock_fraction = 0.1;
    double beta = 1.0;
    double alpha = 1e-6;
    int max_periods = 10000;
    double tolerance = 1e-8;
    int max_iter = 10000;
    std::optional<fs::path> trajectory;
    fs::path out;
};

QuarterProxies simulate_stage(const SimulateStage& opts);

struct BuildDatasetStage {
    std::array<fs::path, kQuarters> quarters;
    fs::path proxies_dir;
    fs::path labels;
    std::size_t total = 1000;
    std::uint64_t seed = 0;
    bool rebalance_after_split = false;
    fs::path out;
};

Dataset build_dataset_stage(const BuildDatasetStage& opts);

/// Builds the balanced, scaled, split dataset from in-memory inputs.
Dataset assemble_dataset(const FeaturePanel& assembled, std::size_t total, std::uint64_t seed,
                         bool rebalance_after_split);

struct TrainMlpStage {
    fs::path data;
    std::string grid = "default";
    std::uint64_t seed = 0;
    int epochs = 300;
    int batch_size = 32;
    double dropout = 0.1;
    fs::path out;
};

struct MlpSummary {
    mlp::MlpModel model;
    double oos_accuracy = 0.0;
};

MlpSummary train_mlp_stage(const TrainMlpStage& opts);

struct SensitivityStage {
    fs::path model;
    fs::path data;
    fs::path out;
};

mlp::SensitivityReport sensitivity_stage(const SensitivityStage& opts);

struct LogitStage {
    fs::path data;
    std::string lambda = "auto";
    fs::path out;
};

logit::LogitFit logit_stage(const LogitStage& opts);

struct ReportStage {
    fs::path data;
    fs::path out;  // directory
};

CorrelationReport report_stage(const ReportStage& opts);

/// Flat "section.key" -> value map, the resolved form of a pipeline config.
using Config = std::map<std::string, std::string>;

Config load_config(const fs::path& path);
// Fills every parameter the run uses, resolving relative input paths against `base`.
Config resolve_config(Config cfg, const fs::path& base);

struct RunResult {
    nlohmann::json manifest;
    nlohmann::json report;
};

/// Full pipeline; every stage reads the previous stage's files under `out`.
RunResult run_pipeline(const Config& resolved, const fs::path& out, const std::string& command_line);
RunResult run_from_config(const fs::path& config, const fs::path& out, const std::string& command_line);
RunResult run_from_manifest(const fs::path& manifest, const fs::path& out, const std::string& command_line);

std::string sha256_file(const fs::path& path);

}  // namespace ibnet::pipeline
