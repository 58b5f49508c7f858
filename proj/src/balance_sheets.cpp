#include "balance_sheets.hpp"

#include "common.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ibnet {

const std::vector<std::string> kPanelColumns = {
    "bank_id",   "quarter", "total_assets", "total_liabilities", "interbank_assets", "interbank_liabilities",
    "roa",       "roe",     "stpd_ratio",   "tier1_ratio",       "tier1_leverage_ratio",
};

std::string validate(const BankRecord& r) {
    if (r.bank_id.empty()) return "empty bank_id";
    if (r.interbank_assets < 0.0) return "interbank_assets < 0";
    if (r.interbank_liabilities < 0.0) return "interbank_liabilities < 0";
    if (r.interbank_assets > r.total_assets) return "interbank_assets > total_assets";
    if (r.interbank_liabilities > r.total_liabilities) return "interbank_liabilities > total_liabilities";
    if (!std::isfinite(r.equity())) return "equity not finite";
    return {};
}

std::vector<std::string> QuarterlyPanel::bank_ids() const {
    std::vector<std::string> ids;
    ids.reserve(records.size());
    for (const auto& r : records) ids.push_back(r.bank_id);
    return ids;
}

const BankRecord* QuarterlyPanel::find(const std::string& bank_id) const {
    auto it = std::lower_bound(records.begin(), records.end(), bank_id,
                               [](const BankRecord& r, const std::string& id) { return r.bank_id < id; });
    if (it == records.end() || it->bank_id != bank_id) return nullptr;
    return &*it;
}

QuarterlyPanel parse_panel(const std::string& text, const std::string& quarter) {
    const auto table = csv::parse(text);
    std::vector<std::size_t> col;
    for (const auto& name : kPanelColumns) col.push_back(table.require_column(name));

    QuarterlyPanel panel;
    panel.quarter = quarter;
    panel.source_header = table.header;

    std::map<std::string, int> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        if (row.size() != table.header.size()) {
            throw Error(ErrorCode::parse, "row " + std::to_string(line) + ": expected " +
                                              std::to_string(table.header.size()) + " fields, found " +
                                              std::to_string(row.size()));
        }
        BankRecord rec;
        rec.bank_id = row[col[0]];
        rec.quarter = row[col[1]];
        if (!quarter.empty() && rec.quarter != quarter) continue;
        auto num = [&](std::size_t k) { return csv::parse_number(row[col[k]], line, kPanelColumns[k]); };
        rec.total_assets = num(2);
        rec.total_liabilities = num(3);
        rec.interbank_assets = num(4);
        rec.interbank_liabilities = num(5);
        rec.roa = num(6);
        rec.roe = num(7);
        rec.short_term_past_due_ratio = num(8);
        rec.tier1_capital_ratio = num(9);
        rec.tier1_leverage_ratio = num(10);

        ++seen[rec.bank_id];
        if (auto reason = validate(rec); !reason.empty()) {
            panel.rejected.push_back({line, row, reason});
            continue;
        }
        if (panel.quarter.empty()) panel.quarter = rec.quarter;
        panel.records.push_back(std::move(rec));
    }

    std::vector<std::string> dups;
    for (const auto& [id, count] : seen)
        if (count > 1) dups.push_back(id);
    if (!dups.empty()) {
        std::string list;
        for (const auto& id : dups) list += (list.empty() ? "" : ", ") + id;
        throw Error(ErrorCode::integrity, "duplicate bank_id: " + list);
    }

    std::sort(panel.records.begin(), panel.records.end(),
              [](const BankRecord& a, const BankRecord& b) { return a.bank_id < b.bank_id; });
    return panel;
}

QuarterlyPanel load_panel(const std::filesystem::path& path, const std::string& quarter) {
    return parse_panel(csv::read_file(path), quarter);
}

std::string panel_to_csv(const QuarterlyPanel& panel) {
    std::string out = csv::join_line(kPanelColumns) + "\n";
    for (const auto& r : panel.records) {
        out += csv::join_line({r.bank_id, r.quarter, format_double(r.total_assets),
                               format_double(r.total_liabilities), format_double(r.interbank_assets),
                               format_double(r.interbank_liabilities), format_double(r.roa), format_double(r.roe),
                               format_double(r.short_term_past_due_ratio), format_double(r.tier1_capital_ratio),
                               format_double(r.tier1_leverage_ratio)});
        out += "\n";
    }
    return out;
}

void write_panel(const std::filesystem::path& path, const QuarterlyPanel& panel) {
    csv::write_file(path, panel_to_csv(panel));
}

void write_rejections(const std::filesystem::path& path, const QuarterlyPanel& panel) {
    auto header = panel.source_header.empty() ? kPanelColumns : panel.source_header;
    header.push_back("reason");
    std::string out = csv::join_line(header) + "\n";
    for (const auto& rej : panel.rejected) {
        auto fields = rej.fields;
        fields.push_back(rej.reason);
        out += csv::join_line(fields) + "\n";
    }
    csv::write_file(path, out);
}

QuarterlyPanel close_system(const QuarterlyPanel& panel) {
    double sum_ia = 0.0;
    double sum_il = 0.0;
    for (const auto& r : panel.records) {
        sum_ia += r.interbank_assets;
        sum_il += r.interbank_liabilities;
    }
    QuarterlyPanel out = panel;
    if (sum_ia == 0.0 && sum_il == 0.0) {
        out.closure_factor = 1.0;
        return out;
    }
    if (sum_il == 0.0) {
        throw Error(ErrorCode::infeasible, "quarter " + panel.quarter +
                                               ": interbank liabilities sum to zero while assets are positive");
    }
    const double factor = sum_ia / sum_il;
    for (auto& r : out.records) {
        r.interbank_liabilities *= factor;
        // a bank whose rescaled liabilities exceed its balance sheet keeps the sheet consistent
        r.total_liabilities = std::max(r.total_liabilities, r.interbank_liabilities);
    }
    out.closure_factor = panel.closure_factor * factor;
    return out;
}

QuarterlyPanel solvent_subset(const QuarterlyPanel& panel, std::vector<std::string>* excluded) {
    QuarterlyPanel out = panel;
    out.records.clear();
    for (const auto& r : panel.records) {
        if (r.equity() > 0.0) {
            out.records.push_back(r);
        } else if (excluded) {
            excluded->push_back(r.bank_id);
        }
    }
    return out;
}

std::vector<std::string> read_failed_list(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto id_col = table.require_column("bank_id");
    table.require_column("failure_date");
    std::vector<std::string> ids;
    for (const auto& row : table.rows)
        if (id_col < row.size()) ids.push_back(row[id_col]);
    return ids;
}

DefaultLabelSet derive_labels(const std::vector<std::string>& universe, const std::vector<std::string>& failed_ids,
                              const std::string& horizon) {
    DefaultLabelSet out;
    out.horizon = horizon;
    for (const auto& id : universe) out.labels[id] = kLabelSolvent;
    std::set<std::string> unmatched;
    for (const auto& id : failed_ids) {
        auto it = out.labels.find(id);
        if (it == out.labels.end()) {
            unmatched.insert(id);
        } else {
            it->second = kLabelFailed;
        }
    }
    out.unmatched_failed.assign(unmatched.begin(), unmatched.end());
    return out;
}

DefaultLabelSet derive_labels(const QuarterlyPanel& universe, const std::filesystem::path& failed_list,
                              const std::string& horizon) {
    return derive_labels(universe.bank_ids(), read_failed_list(failed_list), horizon);
}

}  // namespace ibnet
