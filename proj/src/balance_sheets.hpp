#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ibnet {

/// One bank-quarter of balance-sheet aggregates and financial ratios.
/// Currency fields keep whatever unit the input used.
struct BankRecord {
    std::string bank_id;
    std::string quarter;
    double total_assets = 0.0;
    double total_liabilities = 0.0;
    double interbank_assets = 0.0;
    double interbank_liabilities = 0.0;
    double roa = 0.0;
    double roe = 0.0;
    double short_term_past_due_ratio = 0.0;
    double tier1_capital_ratio = 0.0;   // RCON7206
    double tier1_leverage_ratio = 0.0;  // RCON7204

    double equity() const { return total_assets - total_liabilities; }
    double external_assets() const { return total_assets - interbank_assets; }
    double external_liabilities() const { return total_liabilities - interbank_liabilities; }
};

// Empty string when the record satisfies every invariant, otherwise the reason.
std::string validate(const BankRecord& record);

struct RejectedRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
    std::string reason;
};

/// Validated records of one quarter, sorted by bank_id.
struct QuarterlyPanel {
    std::string quarter;
    std::vector<BankRecord> records;
    std::vector<std::string> source_header;
    std::vector<RejectedRow> rejected;
    double closure_factor = 1.0;  // applied by close_system

    std::size_t size() const { return records.size(); }
    std::vector<std::string> bank_ids() const;
    const BankRecord* find(const std::string& bank_id) const;
};

struct DefaultLabelSet {
    std::string horizon;
    std::map<std::string, int> labels;          // 0 = failed, 1 = solvent
    std::vector<std::string> unmatched_failed;  // failed-list ids outside the universe
};

inline constexpr int kLabelFailed = 0;
inline constexpr int kLabelSolvent = 1;

extern const std::vector<std::string> kPanelColumns;

/// Loads a panel CSV. `quarter` filters rows by their quarter column; an empty
/// tag accepts every row and takes the tag from the data.
QuarterlyPanel load_panel(const std::filesystem::path& path, const std::string& quarter = {});
QuarterlyPanel parse_panel(const std::string& text, const std::string& quarter = {});

void write_panel(const std::filesystem::path& path, const QuarterlyPanel& panel);
std::string panel_to_csv(const QuarterlyPanel& panel);
void write_rejections(const std::filesystem::path& path, const QuarterlyPanel& panel);

/// Rescales interbank liabilities so total interbank assets and liabilities agree.
QuarterlyPanel close_system(const QuarterlyPanel& panel);

/// Splits off banks whose equity is not strictly positive.
QuarterlyPanel solvent_subset(const QuarterlyPanel& panel, std::vector<std::string>* excluded = nullptr);

DefaultLabelSet derive_labels(const QuarterlyPanel& universe, const std::filesystem::path& failed_list,
                              const std::string& horizon = "2010Q1");
DefaultLabelSet derive_labels(const std::vector<std::string>& universe, const std::vector<std::string>& failed_ids,
                              const std::string& horizon = "2010Q1");

std::vector<std::string> read_failed_list(const std::filesystem::path& path);

}  // namespace ibnet
