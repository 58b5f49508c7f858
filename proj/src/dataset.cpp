#include "dataset.hpp"

#include "csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace ibnet {

using nlohmann::json;

const std::vector<std::string>& feature_column_names() {
    static const std::vector<std::string> names = [] {
        const char* metrics[kMetrics] = {"stpd", "roe", "roa", "rcon7206", "rcon7204", "contagion"};
        std::vector<std::string> out;
        for (const char* m : metrics)
            for (int q = 1; q <= kQuarters; ++q) out.push_back(std::string(m) + "_q" + std::to_string(q));
        return out;
    }();
    return names;
}

FeaturePanel FeaturePanel::subset(std::span<const std::size_t> idx) const {
    FeaturePanel out;
    out.column_names = column_names;
    out.x.resize(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.x.row(static_cast<Index>(r)) = x.row(static_cast<Index>(idx[r]));
        out.y.push_back(y[idx[r]]);
        if (!bank_ids.empty()) out.bank_ids.push_back(bank_ids[idx[r]]);
    }
    return out;
}

Vector default_indicator(const std::vector<int>& labels) {
    Vector d(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) d[static_cast<Index>(i)] = labels[i] == kLabelFailed ? 1.0 : 0.0;
    return d;
}

FeaturePanel build_panel(std::span<const QuarterlyPanel> quarters,
                         std::span<const std::map<std::string, double>> proxies, const DefaultLabelSet& labels) {
    if (quarters.size() != kQuarters || proxies.size() != kQuarters)
        throw Error(ErrorCode::arity, "need exactly 4 quarters of panels and proxies, got " +
                                          std::to_string(quarters.size()) + " and " + std::to_string(proxies.size()));

    std::set<std::string> candidates;
    for (const auto& q : quarters)
        for (const auto& r : q.records) candidates.insert(r.bank_id);
    for (const auto& [id, label] : labels.labels) candidates.insert(id);

    FeaturePanel panel;
    std::vector<std::array<double, kFeatureCount>> rows;
    for (const auto& id : candidates) {
        auto label = labels.labels.find(id);
        bool complete = label != labels.labels.end();
        std::array<double, kFeatureCount> row{};
        for (int q = 0; complete && q < kQuarters; ++q) {
            const BankRecord* rec = quarters[q].find(id);
            auto proxy = proxies[q].find(id);
            if (!rec || proxy == proxies[q].end()) {
                complete = false;
                break;
            }
            row[feature_column(0, q)] = rec->short_term_past_due_ratio;
            row[feature_column(1, q)] = rec->roe;
            row[feature_column(2, q)] = rec->roa;
            row[feature_column(3, q)] = rec->tier1_capital_ratio;
            row[feature_column(4, q)] = rec->tier1_leverage_ratio;
            row[feature_column(5, q)] = proxy->second;
        }
        if (!complete) {
            panel.excluded.push_back(id);
            continue;
        }
        panel.bank_ids.push_back(id);
        panel.y.push_back(label->second);
        rows.push_back(row);
    }
    panel.x.resize(static_cast<Index>(rows.size()), kFeatureCount);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < kFeatureCount; ++c) panel.x(static_cast<Index>(r), c) = rows[r][c];
    return panel;
}

FeaturePanel rebalance(const FeaturePanel& panel, std::size_t target_total, std::uint64_t seed) {
    if (target_total % 2 != 0) throw Error(ErrorCode::usage, "rebalance target must be even");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < panel.y.size(); ++i) by_class[panel.y[i]].push_back(i);
    if (by_class[0].empty() || by_class[1].empty())
        throw Error(ErrorCode::class_empty, std::string("no ") + (by_class[0].empty() ? "failed" : "solvent") +
                                                " banks to rebalance");

    std::mt19937_64 rng(seed);
    const std::size_t half = target_total / 2;
    std::vector<std::size_t> chosen;
    chosen.reserve(target_total);
    for (auto& members : by_class) {
        if (members.size() >= half) {
            // subsample without replacement
            std::shuffle(members.begin(), members.end(), rng);
            chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(half));
        } else {
            // keep every original, top up with draws with replacement
            chosen.insert(chosen.end(), members.begin(), members.end());
            std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
            for (std::size_t k = members.size(); k < half; ++k) chosen.push_back(members[pick(rng)]);
        }
    }
    std::shuffle(chosen.begin(), chosen.end(), rng);
    FeaturePanel out = panel.subset(chosen);
    out.excluded = panel.excluded;
    return out;
}

SplitAssignment split(const FeaturePanel& panel, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(panel.rows());
    if (n < 3) throw Error(ErrorCode::size, "need at least 3 rows to split, got " + std::to_string(n));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (panel.y[i] == cls) members.push_back(i);
        std::shuffle(members.begin(), members.end(), rng);
        order.insert(order.end(), members.begin(), members.end());
    }
    // Dealing the class-grouped permutation round-robin keeps each part's size
    // and class counts within one row of an exact third.
    SplitAssignment s;
    s.rng_seed = seed;
    std::vector<std::size_t>* parts[3] = {&s.train, &s.validation, &s.test};
    for (std::size_t k = 0; k < order.size(); ++k) parts[k % 3]->push_back(order[k]);
    for (auto* p : parts) std::sort(p->begin(), p->end());
    return s;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RobustScalerParams fit_scaler(const FeaturePanel& panel, std::span<const std::size_t> train_idx) {
    if (train_idx.empty()) throw Error(ErrorCode::size, "scaler needs at least one training row");
    RobustScalerParams p;
    const Index cols = panel.x.cols();
    std::vector<double> column(train_idx.size());
    for (Index c = 0; c < cols; ++c) {
        for (std::size_t k = 0; k < train_idx.size(); ++k) column[k] = panel.x(static_cast<Index>(train_idx[k]), c);
        p.median.push_back(quantile(column, 0.5));
        p.iqr.push_back(quantile(column, 0.75) - quantile(column, 0.25));
    }
    return p;
}

FeaturePanel apply_scaler(const RobustScalerParams& params, const FeaturePanel& panel) {
    if (static_cast<Index>(params.median.size()) != panel.x.cols())
        throw Error(ErrorCode::dimension, "scaler fitted on a different column count");
    FeaturePanel out = panel;
    for (Index c = 0; c < out.x.cols(); ++c) {
        const double divisor = params.iqr[c] > 0.0 ? params.iqr[c] : 1.0;
        for (Index r = 0; r < out.x.rows(); ++r) out.x(r, c) = (out.x(r, c) - params.median[c]) / divisor;
    }
    return out;
}

CorrelationReport report_correlations(const FeaturePanel& panel) {
    const Index n = panel.x.rows();
    const Index p = panel.x.cols();
    if (n == 0) throw Error(ErrorCode::size, "cannot correlate an empty panel");
    Matrix centered = panel.x.rowwise() - panel.x.colwise().mean();
    Vector norms = centered.colwise().norm();
    CorrelationReport rep;
    rep.r = Matrix::Zero(p, p);
    for (Index c = 0; c < p; ++c)
        if (norms[c] == 0.0) rep.constant_columns.push_back(static_cast<std::size_t>(c));
    for (Index a = 0; a < p; ++a) {
        rep.r(a, a) = 1.0;
        for (Index b = a + 1; b < p; ++b) {
            double r = 0.0;
            if (norms[a] > 0.0 && norms[b] > 0.0)
                r = std::clamp(centered.col(a).dot(centered.col(b)) / (norms[a] * norms[b]), -1.0, 1.0);
            rep.r(a, b) = rep.r(b, a) = r;
        }
    }
    return rep;
}

std::string correlations_to_csv(const CorrelationReport& report, const std::vector<std::string>& names) {
    std::vector<std::string> header = {"column"};
    header.insert(header.end(), names.begin(), names.end());
    header.push_back("constant");
    std::string out = csv::join_line(header) + "\n";
    for (Index a = 0; a < report.r.rows(); ++a) {
        std::vector<std::string> row = {names[a]};
        for (Index b = 0; b < report.r.cols(); ++b) row.push_back(format_double(report.r(a, b)));
        const bool constant = std::find(report.constant_columns.begin(), report.constant_columns.end(),
                                        static_cast<std::size_t>(a)) != report.constant_columns.end();
        row.push_back(constant ? "1" : "0");
        out += csv::join_line(row) + "\n";
    }
    return out;
}

std::string feature_panel_to_csv(const FeaturePanel& panel) {
    auto header = panel.column_names;
    header.push_back("label");
    std::string out = csv::join_line(header) + "\n";
    for (Index r = 0; r < panel.x.rows(); ++r) {
        std::vector<std::string> row;
        for (Index c = 0; c < panel.x.cols(); ++c) row.push_back(format_double(panel.x(r, c)));
        row.push_back(std::to_string(panel.y[r]));
        out += csv::join_line(row) + "\n";
    }
    return out;
}

FeaturePanel feature_panel_from_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto label_col = table.require_column("label");
    FeaturePanel panel;
    panel.column_names.clear();
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == label_col || table.header[c] == "bank_id") continue;
        cols.push_back(c);
        panel.column_names.push_back(table.header[c]);
    }
    const auto id_col = table.column("bank_id");
    panel.x.resize(static_cast<Index>(table.rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size())
            throw Error(ErrorCode::parse, path.string() + " row " + std::to_string(table.line_numbers[r]) +
                                              ": wrong field count");
        for (std::size_t k = 0; k < cols.size(); ++k)
            panel.x(static_cast<Index>(r), static_cast<Index>(k)) =
                csv::parse_number(row[cols[k]], table.line_numbers[r], table.header[cols[k]]);
        const double label = csv::parse_number(row[label_col], table.line_numbers[r], "label");
        if (label != 0.0 && label != 1.0)
            throw Error(ErrorCode::parse, "row " + std::to_string(table.line_numbers[r]) + ": label must be 0 or 1");
        panel.y.push_back(static_cast<int>(label));
        if (id_col) panel.bank_ids.push_back(row[*id_col]);
    }
    return panel;
}

namespace {

std::string assembled_to_csv(const FeaturePanel& panel) {
    std::vector<std::string> header = {"bank_id"};
    header.insert(header.end(), panel.column_names.begin(), panel.column_names.end());
    header.push_back("label");
    std::string out = csv::join_line(header) + "\n";
    for (Index r = 0; r < panel.x.rows(); ++r) {
        std::vector<std::string> row = {panel.bank_ids[r]};
        for (Index c = 0; c < panel.x.cols(); ++c) row.push_back(format_double(panel.x(r, c)));
        row.push_back(std::to_string(panel.y[r]));
        out += csv::join_line(row) + "\n";
    }
    return out;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    csv::write_file(dir / "panel.csv", feature_panel_to_csv(ds.scaled));
    csv::write_file(dir / "panel_raw.csv", feature_panel_to_csv(ds.raw));

    json meta;
    meta["column_names"] = ds.scaled.column_names;
    meta["seed"] = ds.seed;
    meta["target_total"] = ds.target_total;
    meta["rebalance_after_split"] = ds.rebalance_after_split;
    meta["label_coding"] = {{"failed", kLabelFailed}, {"solvent", kLabelSolvent}};
    meta["row_bank_ids"] = ds.raw.bank_ids;
    meta["excluded_banks"] = ds.raw.excluded;
    meta["scaler"] = {{"median", ds.scaler.median}, {"iqr", ds.scaler.iqr}};
    meta["split"] = {{"seed", ds.splits.rng_seed},
                     {"train", ds.splits.train},
                     {"validation", ds.splits.validation},
                     {"test", ds.splits.test}};
    csv::write_file(dir / "dataset.json", meta.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    const auto meta_path = dir / "dataset.json";
    json meta;
    try {
        meta = json::parse(csv::read_file(meta_path));
        ds.scaled = feature_panel_from_csv(dir / "panel.csv");
        ds.raw = feature_panel_from_csv(dir / "panel_raw.csv");
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.target_total = meta.at("target_total").get<std::size_t>();
        ds.rebalance_after_split = meta.at("rebalance_after_split").get<bool>();
        ds.scaler.median = meta.at("scaler").at("median").get<std::vector<double>>();
        ds.scaler.iqr = meta.at("scaler").at("iqr").get<std::vector<double>>();
        const auto& s = meta.at("split");
        ds.splits.rng_seed = s.at("seed").get<std::uint64_t>();
        ds.splits.train = s.at("train").get<std::vector<std::size_t>>();
        ds.splits.validation = s.at("validation").get<std::vector<std::size_t>>();
        ds.splits.test = s.at("test").get<std::vector<std::size_t>>();
        ds.raw.bank_ids = meta.at("row_bank_ids").get<std::vector<std::string>>();
        ds.scaled.bank_ids = ds.raw.bank_ids;
        const auto names = meta.at("column_names").get<std::vector<std::string>>();
        if (names != ds.scaled.column_names)
            throw Error(ErrorCode::schema, "panel.csv columns disagree with dataset.json");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, meta_path.string() + ": " + e.what());
    }
    const std::size_t n = static_cast<std::size_t>(ds.scaled.rows());
    for (const auto* part : {&ds.splits.train, &ds.splits.validation, &ds.splits.test})
        for (auto i : *part)
            if (i >= n) throw Error(ErrorCode::integrity, "split index " + std::to_string(i) + " out of range");
    return ds;
}

void write_assembled(const std::filesystem::path& path, const FeaturePanel& panel) {
    csv::write_file(path, assembled_to_csv(panel));
}

}  // namespace ibnet
