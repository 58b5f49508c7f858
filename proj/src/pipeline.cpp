#include "pipeline.hpp"

#include "csv.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

namespace ibnet::pipeline {

using nlohmann::json;

namespace {

// Re-throws any library error with the failing stage's name prefixed, keeping its code.
template <class F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        std::string detail = e.what();
        const std::string code_prefix = std::string(to_string(e.code())) + ": ";
        if (detail.rfind(code_prefix, 0) == 0) detail.erase(0, code_prefix.size());
        throw Error(e.code(), std::string("stage ") + stage + ": " + detail);
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(ErrorCode::io, std::string("stage ") + stage + ": " + e.what());
    }
}

std::vector<std::size_t> concat_sorted(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out(a);
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
}

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = x.row(static_cast<Index>(idx[r]));
    return out;
}

Vector take(const Vector& y, const std::vector<std::size_t>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = y[static_cast<Index>(idx[r])];
    return out;
}

QuarterlyPanel load_existing(const fs::path& path, const std::string& quarter) {
    if (!fs::exists(path)) throw Error(ErrorCode::io, "panel file '" + path.string() + "' does not exist");
    auto panel = load_panel(path, quarter);
    if (panel.records.empty() && panel.rejected.empty())
        throw Error(ErrorCode::integrity, "panel '" + path.string() + "' has no rows" +
                                              (quarter.empty() ? std::string() : " for quarter " + quarter));
    return panel;
}

void write_rejections_if_any(const fs::path& out, const QuarterlyPanel& panel) {
    if (!panel.rejected.empty()) write_rejections(fs::path(out.string() + ".rejected.csv"), panel);
}

json ras_json(const RasReport& r) {
    return {{"iterations", r.iterations}, {"max_marginal_error", r.max_marginal_error}, {"converged", r.converged}};
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ReconstructSummary reconstruct_stage(const ReconstructStage& opts) {
    const auto panel = load_existing(opts.panel, opts.quarter);
    ReconstructSummary s;
    s.rejected_rows = panel.rejected.size();
    const auto closed = close_system(solvent_subset(panel, &s.excluded));
    s.closure_factor = closed.closure_factor;
    s.banks = closed.size();
    std::vector<double> ia, il;
    for (const auto& r : closed.records) {
        ia.push_back(r.interbank_assets);
        il.push_back(r.interbank_liabilities);
    }
    RasOptions ras;
    ras.tolerance = opts.tolerance;
    ras.max_iter = opts.max_iter;
    auto [w, report] = reconstruct(ia, il, ras);
    w.bank_ids = closed.bank_ids();
    s.report = report;
    if (opts.dump_matrix) write_matrix_dump(*opts.dump_matrix, w);
    return s;
}

QuarterProxies simulate_stage(const SimulateStage& opts) {
    const auto panel = load_existing(opts.panel, opts.quarter);
    QuarterSimulationOptions sim;
    sim.ras.tolerance = opts.tolerance;
    sim.ras.max_iter = opts.max_iter;
    sim.propagate.beta = opts.beta;
    sim.propagate.alpha = opts.alpha;
    sim.propagate.max_periods = opts.max_periods;
    sim.propagate.keep_trajectory = opts.trajectory.has_value();
    sim.uniform_shock = opts.shock_fraction;
    auto q = quarterly_proxies(panel, sim);
    write_proxies(opts.out, q);
    write_rejections_if_any(opts.out, panel);
    if (opts.trajectory) write_trajectory(*opts.trajectory, q);
    return q;
}

Dataset assemble_dataset(const FeaturePanel& assembled, std::size_t total, std::uint64_t seed,
                         bool rebalance_after_split) {
    Dataset ds;
    ds.seed = seed;
    ds.target_total = total;
    ds.rebalance_after_split = rebalance_after_split;
    if (!rebalance_after_split) {
        ds.raw = rebalance(assembled, total, seed);
        ds.splits = split(ds.raw, seed + 1);
    } else {
        // split the distinct banks first so duplicated minority rows never cross partitions
        const auto parts = split(assembled, seed + 1);
        const std::size_t third = 2 * ((total + 3) / 6);
        const std::size_t sizes[3] = {third, third, total - 2 * third};
        const std::vector<std::size_t>* idx[3] = {&parts.train, &parts.validation, &parts.test};
        std::vector<std::size_t>* dst[3] = {&ds.splits.train, &ds.splits.validation, &ds.splits.test};
        FeaturePanel combined;
        combined.x.resize(0, assembled.x.cols());
        std::vector<FeaturePanel> balanced;
        for (int k = 0; k < 3; ++k)
            balanced.push_back(rebalance(assembled.subset(*idx[k]), sizes[k], seed + 2 + static_cast<std::uint64_t>(k)));
        Index rows = 0;
        for (const auto& b : balanced) rows += b.rows();
        combined.x.resize(rows, assembled.x.cols());
        Index at = 0;
        for (int k = 0; k < 3; ++k) {
            combined.x.middleRows(at, balanced[k].rows()) = balanced[k].x;
            for (Index r = 0; r < balanced[k].rows(); ++r) {
                dst[k]->push_back(static_cast<std::size_t>(at + r));
                combined.y.push_back(balanced[k].y[static_cast<std::size_t>(r)]);
                combined.bank_ids.push_back(balanced[k].bank_ids[static_cast<std::size_t>(r)]);
            }
            at += balanced[k].rows();
        }
        combined.excluded = assembled.excluded;
        ds.raw = std::move(combined);
        ds.splits.rng_seed = seed + 1;
    }
    ds.scaler = fit_scaler(ds.raw, ds.splits.train);
    ds.scaled = apply_scaler(ds.scaler, ds.raw);
    return ds;
}

Dataset build_dataset_stage(const BuildDatasetStage& opts) {
    std::vector<QuarterlyPanel> panels;
    std::vector<std::map<std::string, double>> proxies;
    json report;
    for (int q = 0; q < kQuarters; ++q) {
        if (opts.quarters[q].empty())
            throw Error(ErrorCode::arity, fmt::format("no panel file given for quarter {}", q + 1));
        auto panel = load_existing(opts.quarters[q], {});
        const auto proxy_path = opts.proxies_dir / (panel.quarter + ".csv");
        if (!fs::exists(proxy_path))
            throw Error(ErrorCode::io, "proxy file '" + proxy_path.string() + "' does not exist");
        proxies.push_back(read_proxies(proxy_path));
        report["quarters"].push_back({{"file", opts.quarters[q].filename().string()},
                                      {"quarter", panel.quarter},
                                      {"banks", panel.size()},
                                      {"rejected_rows", panel.rejected.size()}});
        panels.push_back(std::move(panel));
    }
    const auto labels = derive_labels(panels.back(), opts.labels);
    const auto assembled = build_panel(panels, proxies, labels);
    report["assembled_rows"] = assembled.rows();
    report["excluded_banks"] = assembled.excluded;
    report["unmatched_failed_ids"] = labels.unmatched_failed;
    std::size_t failed = 0;
    for (int y : assembled.y) failed += y == kLabelFailed ? 1 : 0;
    report["failed_banks"] = failed;
    report["solvent_banks"] = assembled.y.size() - failed;
    if (assembled.rows() == 0) std::cerr << "warning: no bank is present in every quarter with a label\n";
    for (const auto& id : labels.unmatched_failed)
        std::cerr << "warning: failed bank " << id << " is not in the study universe\n";

    Dataset ds = assemble_dataset(assembled, opts.total, opts.seed, opts.rebalance_after_split);
    write_dataset(opts.out, ds);
    write_assembled(opts.out / "assembled.csv", assembled);
    csv::write_file(opts.out / "build_report.json", report.dump(2) + "\n");
    return ds;
}

MlpSummary train_mlp_stage(const TrainMlpStage& opts) {
    const Dataset ds = read_dataset(opts.data);
    const Vector y = default_indicator(ds.scaled.y);
    mlp::MlpConfig base;
    base.rng_seed = opts.seed;
    base.epochs = opts.epochs;
    base.batch_size = opts.batch_size;
    base.dropout_prob = opts.dropout;
    const auto grid = mlp::parse_grid(opts.grid);
    MlpSummary s;
    s.model = mlp::tune({ds.scaled.x, y, ds.splits.train, ds.splits.validation}, grid, base);
    s.oos_accuracy = mlp::accuracy(mlp::classify(s.model, take_rows(ds.scaled.x, ds.splits.test)),
                                   take(y, ds.splits.test));
    json j = mlp::to_json(s.model);
    j["target"] = "default (1 = failed bank)";
    j["column_names"] = ds.scaled.column_names;
    j["oos_accuracy"] = s.oos_accuracy;
    j["grid"] = opts.grid;
    csv::write_file(opts.out, j.dump(2) + "\n");
    return s;
}

mlp::SensitivityReport sensitivity_stage(const SensitivityStage& opts) {
    json j;
    try {
        j = json::parse(csv::read_file(opts.model));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, opts.model.string() + ": " + e.what());
    }
    const auto model = mlp::from_json(j);
    const Dataset ds = read_dataset(opts.data);
    const auto report = mlp::input_sensitivity(model, take_rows(ds.scaled.x, ds.splits.test));
    std::string out = "column_name,gradient\n";
    for (Index c = 0; c < report.mean.size(); ++c)
        out += csv::join_line({ds.scaled.column_names[c], format_double(report.mean[c])}) + "\n";
    csv::write_file(opts.out, out);
    return report;
}

logit::LogitFit logit_stage(const LogitStage& opts) {
    std::optional<double> fixed;
    if (opts.lambda != "auto") {
        try {
            std::size_t used = 0;
            fixed = std::stod(opts.lambda, &used);
            if (used != opts.lambda.size() || !(*fixed >= 0.0)) throw std::invalid_argument("bad lambda");
        } catch (const std::exception&) {
            throw Error(ErrorCode::usage, "--lambda must be 'auto' or a non-negative number, got '" + opts.lambda + "'");
        }
    }
    const Dataset ds = read_dataset(opts.data);
    const Vector y = default_indicator(ds.scaled.y);
    json selection;
    double lambda = 0.0;
    if (!fixed) {
        const auto sel = logit::select_lambda(ds.scaled.x, y, ds.splits.train, ds.splits.validation);
        lambda = sel.lambda;
        selection = {{"method", "validation accuracy over a 50-point log grid, warm-started from lambda_max; accuracies within one standard error of the best tie, ties go to the larger lambda"},
                     {"best_accuracy", sel.best_accuracy},
                     {"tie_margin", sel.tie_margin},
                     {"lambda_max", sel.lambda_max},
                     {"grid", sel.grid},
                     {"validation_accuracy", sel.validation_accuracy},
                     {"active_sizes", sel.active_sizes},
                     {"sparsity_violations", sel.sparsity_violations}};
        if (sel.truncated_at) {
            selection["path_truncated_at"] = *sel.truncated_at;
            selection["path_truncation_reason"] = sel.truncation_reason;
        }
    } else {
        lambda = *fixed;
        selection = {{"method", "fixed"}};
    }
    const auto fit_rows = concat_sorted(ds.splits.train, ds.splits.validation);
    const Matrix xf = take_rows(ds.scaled.x, fit_rows);
    const Vector yf = take(y, fit_rows);
    auto fit = logit::fit_lasso_path(xf, yf, lambda);
    std::string refit_note;
    try {
        logit::attach_refit(fit, xf, yf);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::separation) throw;
        refit_note = e.what();
        std::cerr << "warning: " << e.what() << "; p-values omitted\n";
    }
    const Vector yt = take(y, ds.splits.test);
    const auto pred = logit::classify(fit, take_rows(ds.scaled.x, ds.splits.test));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += static_cast<double>(pred[i]) == yt[static_cast<Index>(i)];
    fit.oos_accuracy = pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());

    json j = logit::to_json(fit, ds.scaled.column_names);
    j["target"] = "default (1 = failed bank)";
    j["lambda_selection"] = selection;
    if (!refit_note.empty()) j["refit_error"] = refit_note;
    csv::write_file(opts.out, j.dump(2) + "\n");
    return fit;
}

CorrelationReport report_stage(const ReportStage& opts) {
    const fs::path assembled = opts.data / "assembled.csv";
    const FeaturePanel panel =
        feature_panel_from_csv(fs::exists(assembled) ? assembled : opts.data / "panel_raw.csv");
    const auto rep = report_correlations(panel);
    csv::write_file(opts.out / "correlations.csv", correlations_to_csv(rep, panel.column_names));
    return rep;
}

// ---------------------------------------------------------------------------
// configuration and full runs

Config load_config(const fs::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        if (!fs::exists(path)) throw Error(ErrorCode::io, "cannot open config '" + path.string() + "'");
        throw Error(ErrorCode::parse, e.what());
    }
    Config cfg;
    for (const auto& [section, keys] : tree)
        for (const auto& [key, value] : keys) cfg[section + "." + key] = value.get_value<std::string>();
    return cfg;
}

namespace {

const std::vector<std::pair<std::string, std::string>> kDefaults = {
    {"run.seed", "1"},
    {"reconstruct.tolerance", "1e-8"},
    {"reconstruct.max_iter", "10000"},
    {"reconstruct.dump_matrix", "false"},
    {"simulate.shock_fraction", "0.1"},
    {"simulate.beta", "1"},
    {"simulate.alpha", "1e-6"},
    {"simulate.max_periods", "10000"},
    {"dataset.total", "1000"},
    {"dataset.rebalance_after_split", "false"},
    {"mlp.grid", "default"},
    {"mlp.epochs", "300"},
    {"mlp.batch_size", "32"},
    {"mlp.dropout", "0.1"},
    {"logit.lambda", "auto"},
};

const std::vector<std::pair<std::string, std::string>> kSyntheticDefaults = {
    {"synthetic.n_banks", "1000"},
    {"synthetic.quarters", "4"},
    {"synthetic.default_rate", "0.02"},
    {"synthetic.contagion_signal_strength", "2"},
};

const std::string& get(const Config& c, const std::string& key) {
    auto it = c.find(key);
    if (it == c.end()) throw Error(ErrorCode::usage, "config key '" + key + "' is missing");
    return it->second;
}

double get_double(const Config& c, const std::string& key) {
    const auto& v = get(c, key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorCode::usage, "config key '" + key + "' is not a number: '" + v + "'");
    }
}

long long get_int(const Config& c, const std::string& key) {
    const double d = get_double(c, key);
    if (d != std::floor(d)) throw Error(ErrorCode::usage, "config key '" + key + "' must be an integer");
    return static_cast<long long>(d);
}

bool get_bool(const Config& c, const std::string& key) {
    const auto& v = get(c, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::usage, "config key '" + key + "' must be true or false");
}

bool has_synthetic(const Config& c) {
    return std::any_of(c.begin(), c.end(), [](const auto& kv) { return kv.first.rfind("synthetic.", 0) == 0; });
}

}  // namespace

Config resolve_config(Config cfg, const fs::path& base) {
    for (const auto& [k, v] : kDefaults) cfg.try_emplace(k, v);
    const std::string seed = cfg.at("run.seed");
    cfg.try_emplace("dataset.seed", seed);
    cfg.try_emplace("mlp.seed", seed);
    if (has_synthetic(cfg)) {
        for (const auto& [k, v] : kSyntheticDefaults) cfg.try_emplace(k, v);
        cfg.try_emplace("synthetic.seed", seed);
    } else {
        for (const char* key : {"inputs.q1", "inputs.q2", "inputs.q3", "inputs.q4", "inputs.failed"}) {
            auto it = cfg.find(key);
            if (it != cfg.end() && !it->second.empty() && fs::path(it->second).is_relative())
                it->second = fs::weakly_canonical(base / it->second).string();
        }
    }
    return cfg;
}

std::string sha256_file(const fs::path& path) {
    const std::string bytes = csv::read_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::io, "cannot hash '" + path.string() + "'");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

RunResult run_pipeline(const Config& cfg, const fs::path& out, const std::string& command_line) {
    RunResult result;
    json& manifest = result.manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["command_line"] = command_line;
    manifest["config"] = cfg;
    manifest["timestamps"]["started"] = utc_now();
    manifest["shock_scenario"] = fmt::format(
        "uniform equity_fraction shock of {} applied to every bank simultaneously", get(cfg, "simulate.shock_fraction"));
    fs::create_directories(out);

    // inputs
    std::array<fs::path, kQuarters> quarter_files;
    fs::path failed_file;
    if (has_synthetic(cfg)) {
        in_stage("generate-synthetic", [&] {
            SyntheticSpec spec;
            spec.n_banks = static_cast<int>(get_int(cfg, "synthetic.n_banks"));
            spec.quarters = static_cast<int>(get_int(cfg, "synthetic.quarters"));
            spec.default_rate = get_double(cfg, "synthetic.default_rate");
            spec.contagion_signal_strength = get_double(cfg, "synthetic.contagion_signal_strength");
            spec.rng_seed = static_cast<std::uint64_t>(get_int(cfg, "synthetic.seed"));
            spec.shock_fraction = get_double(cfg, "simulate.shock_fraction");
            const auto data = generate_synthetic(spec);
            write_synthetic(out / "inputs", data);
            for (int q = 0; q < kQuarters && q < static_cast<int>(data.quarters.size()); ++q)
                quarter_files[q] = out / "inputs" / (data.quarters[q].quarter + ".csv");
            failed_file = out / "inputs" / "failed.csv";
            return 0;
        });
    } else {
        for (int q = 0; q < kQuarters; ++q) {
            auto it = cfg.find(fmt::format("inputs.q{}", q + 1));
            if (it != cfg.end()) quarter_files[q] = it->second;
        }
        failed_file = get(cfg, "inputs.failed");
    }
    json digests;
    for (const auto& f : quarter_files)
        if (!f.empty() && fs::exists(f)) digests[f.filename().string()] = sha256_file(f);
    if (fs::exists(failed_file)) digests[failed_file.filename().string()] = sha256_file(failed_file);
    manifest["input_digests"] = digests;
    manifest["seeds"] = {{"dataset", get(cfg, "dataset.seed")}, {"mlp", get(cfg, "mlp.seed")}};
    if (has_synthetic(cfg)) manifest["seeds"]["synthetic"] = get(cfg, "synthetic.seed");

    json& report = result.report;
    report["tool_version"] = kToolVersion;
    report["shock_scenario"] = manifest["shock_scenario"];

    // reconstruct + simulate per quarter
    for (int q = 0; q < kQuarters; ++q) {
        if (quarter_files[q].empty()) continue;  // build-dataset reports the gap
        const auto proxies = in_stage("simulate", [&] {
            SimulateStage s;
            s.panel = quarter_files[q];
            s.shock_fraction = get_double(cfg, "simulate.shock_fraction");
            s.beta = get_double(cfg, "simulate.beta");
            s.alpha = get_double(cfg, "simulate.alpha");
            s.max_periods = static_cast<int>(get_int(cfg, "simulate.max_periods"));
            s.tolerance = get_double(cfg, "reconstruct.tolerance");
            s.max_iter = static_cast<int>(get_int(cfg, "reconstruct.max_iter"));
            const auto panel_quarter = load_existing(s.panel, {}).quarter;
            s.out = out / "proxies" / (panel_quarter + ".csv");
            if (get_bool(cfg, "reconstruct.dump_matrix")) {
                in_stage("reconstruct", [&] {
                    ReconstructStage r;
                    r.panel = s.panel;
                    r.tolerance = s.tolerance;
                    r.max_iter = s.max_iter;
                    r.dump_matrix = out / "network" / (panel_quarter + ".ibnw");
                    return reconstruct_stage(r);
                });
            }
            return simulate_stage(s);
        });
        if (!proxies.ras.converged)
            std::cerr << "warning: reconstruction for " << proxies.quarter << " did not converge\n";
        report["simulation"].push_back({{"quarter", proxies.quarter},
                                        {"banks", proxies.bank_ids.size()},
                                        {"excluded_nonpositive_equity", proxies.excluded},
                                        {"closure_factor", proxies.closure_factor},
                                        {"reconstruction", ras_json(proxies.ras)},
                                        {"periods", proxies.run.periods},
                                        {"converged", proxies.run.converged},
                                        {"cascade_defaults", proxies.run.defaults_cascaded}});
    }

    const fs::path data_dir = out / "dataset";
    in_stage("build-dataset", [&] {
        BuildDatasetStage b;
        for (int q = 0; q < kQuarters; ++q) {
            if (quarter_files[q].empty())
                throw Error(ErrorCode::arity, fmt::format("config has no file for quarter q{}", q + 1));
            b.quarters[q] = quarter_files[q];
        }
        b.proxies_dir = out / "proxies";
        b.labels = failed_file;
        b.total = static_cast<std::size_t>(get_int(cfg, "dataset.total"));
        b.seed = static_cast<std::uint64_t>(get_int(cfg, "dataset.seed"));
        b.rebalance_after_split = get_bool(cfg, "dataset.rebalance_after_split");
        b.out = data_dir;
        return build_dataset_stage(b);
    });

    const auto mlp_summary = in_stage("train-mlp", [&] {
        TrainMlpStage t;
        t.data = data_dir;
        t.grid = get(cfg, "mlp.grid");
        t.seed = static_cast<std::uint64_t>(get_int(cfg, "mlp.seed"));
        t.epochs = static_cast<int>(get_int(cfg, "mlp.epochs"));
        t.batch_size = static_cast<int>(get_int(cfg, "mlp.batch_size"));
        t.dropout = get_double(cfg, "mlp.dropout");
        t.out = out / "model.json";
        return train_mlp_stage(t);
    });
    const auto sens = in_stage("sensitivity", [&] {
        return sensitivity_stage({out / "model.json", data_dir, out / "sensitivity.csv"});
    });
    const auto fit = in_stage("logit", [&] { return logit_stage({data_dir, get(cfg, "logit.lambda"), out / "fit.json"}); });
    in_stage("report", [&] { return report_stage({data_dir, out}); });

    const auto& names = feature_column_names();
    const auto& best = mlp_summary.model.config;
    report["mlp"] = {{"oos_accuracy", mlp_summary.oos_accuracy},
                     {"hidden", best.hidden},
                     {"solver", mlp::to_string(best.solver)},
                     {"learning_rate", best.learning_rate}};
    json grads = json::array();
    for (Index c = 0; c < sens.mean.size(); ++c) grads.push_back({{"column", names[c]}, {"gradient", sens.mean[c]}});
    report["sensitivity"] = grads;
    report["sensitivity_samples"] = sens.sample_count;
    report["logit"] = logit::to_json(fit, names);
    report["correlations"] = "correlations.csv";
    csv::write_file(out / "report.json", report.dump(2) + "\n");

    manifest["timestamps"]["finished"] = utc_now();
    csv::write_file(out / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

RunResult run_from_config(const fs::path& config, const fs::path& out, const std::string& command_line) {
    const auto base = config.has_parent_path() ? config.parent_path() : fs::current_path();
    return run_pipeline(resolve_config(load_config(config), base), out, command_line);
}

RunResult run_from_manifest(const fs::path& manifest, const fs::path& out, const std::string& command_line) {
    json m;
    try {
        m = json::parse(csv::read_file(manifest));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, manifest.string() + ": " + e.what());
    }
    if (!m.contains("config")) throw Error(ErrorCode::schema, "manifest has no config section");
    const auto cfg = m.at("config").get<Config>();
    auto result = run_pipeline(cfg, out, command_line);
    if (m.contains("input_digests") && m["input_digests"] != result.manifest["input_digests"])
        std::cerr << "warning: input digests differ from the manifest being replayed\n";
    return result;
}

}  // namespace ibnet::pipeline
