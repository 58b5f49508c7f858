#pragma once

#include "balance_sheets.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ibnet {

struct SyntheticSpec {
    int n_banks = 1000;
    int quarters = 4;
    double default_rate = 0.02;
    double contagion_signal_strength = 2.0;
    std::uint64_t rng_seed = 1;
    // Scenario used to measure each bank's true exposure on the hidden network.
    double shock_fraction = 0.1;
    double mean_degree = 8.0;
};

struct SyntheticData {
    std::vector<QuarterlyPanel> quarters;
    std::vector<std::string> failed_ids;
    std::vector<std::string> failure_dates;
    DefaultLabelSet labels;
    nlohmann::json ground_truth;
};

/// Log-normal balance sheets on a hidden Erdos-Renyi lending network. Default
/// log-odds load on tier 1 leverage, ROE and each bank's contagion loss on
/// the hidden network; the intercept is calibrated to `default_rate`.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// <dir>/<quarter>.csv per quarter, failed.csv and truth.json.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace ibnet
