#pragma once

#include "balance_sheets.hpp"
#include "common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ibnet {

inline constexpr int kQuarters = 4;
inline constexpr int kMetrics = 6;
inline constexpr int kFeatureCount = kQuarters * kMetrics;

/// Fixed 24-column layout: metric-major, then quarter.
const std::vector<std::string>& feature_column_names();

// Column index of `metric` (0..5) in quarter `q` (0..3).
constexpr int feature_column(int metric, int q) { return metric * kQuarters + q; }
inline constexpr int kContagionMetric = 5;

struct FeaturePanel {
    std::vector<std::string> bank_ids;
    Matrix x;               // rows x 24
    std::vector<int> y;     // 0 = failed, 1 = solvent
    std::vector<std::string> column_names = feature_column_names();
    std::vector<std::string> excluded;  // banks dropped during assembly

    Index rows() const { return x.rows(); }
    FeaturePanel subset(std::span<const std::size_t> idx) const;
};

/// Classifier response: 1 marks a default, the event whose odds the models describe.
Vector default_indicator(const std::vector<int>& labels);

struct SplitAssignment {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t rng_seed = 0;
};

struct RobustScalerParams {
    std::vector<double> median;
    std::vector<double> iqr;
};

FeaturePanel build_panel(std::span<const QuarterlyPanel> quarters,
                         std::span<const std::map<std::string, double>> proxies, const DefaultLabelSet& labels);

FeaturePanel rebalance(const FeaturePanel& panel, std::size_t target_total, std::uint64_t seed);

SplitAssignment split(const FeaturePanel& panel, std::uint64_t seed);

// Linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

RobustScalerParams fit_scaler(const FeaturePanel& panel, std::span<const std::size_t> train_idx);
FeaturePanel apply_scaler(const RobustScalerParams& params, const FeaturePanel& panel);

/// Pearson correlations between panel columns; constant columns correlate 0
/// with everything else and are listed in `constant_columns`.
struct CorrelationReport {
    Matrix r;
    std::vector<std::size_t> constant_columns;
};
CorrelationReport report_correlations(const FeaturePanel& panel);
std::string correlations_to_csv(const CorrelationReport& report, const std::vector<std::string>& names);

// Dataset directory: panel.csv (scaled features + label), panel_raw.csv and
// dataset.json (column names, seed, scaler, split indices).
struct Dataset {
    FeaturePanel raw;
    FeaturePanel scaled;
    SplitAssignment splits;
    RobustScalerParams scaler;
    std::uint64_t seed = 0;
    std::size_t target_total = 0;
    bool rebalance_after_split = false;
};

std::string feature_panel_to_csv(const FeaturePanel& panel);
// Unbalanced, unscaled panel with a leading bank_id column.
void write_assembled(const std::filesystem::path& path, const FeaturePanel& panel);
FeaturePanel feature_panel_from_csv(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace ibnet
