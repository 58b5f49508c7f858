#include "csv.hpp"
#include "pipeline.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>

using namespace ibnet;
namespace fs = std::filesystem;
namespace pl = ibnet::pipeline;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ibnet_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Mean over quarters of the proxies the pipeline itself would compute.
std::vector<double> pipeline_proxies(const SyntheticData& d) {
    std::vector<double> mean(d.quarters.front().size(), 0.0);
    for (const auto& q : d.quarters) {
        QuarterSimulationOptions o;
        o.uniform_shock = 0.1;
        const auto r = quarterly_proxies(q, o);
        for (std::size_t i = 0; i < r.proxy.size(); ++i) mean[i] += r.proxy[i] / d.quarters.size();
    }
    return mean;
}

std::vector<double> label_vector(const SyntheticData& d) {
    std::vector<double> y;
    for (const auto& [id, label] : d.labels.labels) y.push_back(label);
    return y;
}

void write_config(const fs::path& path, const std::string& text) { csv::write_file(path, text); }

std::string read(const fs::path& p) { return csv::read_file(p); }

}  // namespace

TEST_CASE("synthetic panels satisfy record invariants and are closable") {
    SyntheticSpec s;
    s.n_banks = 120;
    s.rng_seed = 3;
    const auto d = generate_synthetic(s);
    REQUIRE(d.quarters.size() == 4);
    CHECK(d.quarters[0].quarter == "2009Q1");
    CHECK(d.quarters[3].quarter == "2009Q4");
    CHECK(d.labels.horizon == "2010Q1");
    CHECK(d.labels.labels.size() == 120);
    for (const auto& q : d.quarters) {
        // round trip through the validating loader: nothing rejected
        const auto back = parse_panel(panel_to_csv(q));
        CHECK(back.rejected.empty());
        CHECK(back.size() == 120);
        const auto closed = close_system(back);
        CHECK(closed.closure_factor == doctest::Approx(1.0).epsilon(1e-9));
        for (const auto& r : q.records) CHECK(r.equity() > 0.0);
    }
}

TEST_CASE("synthetic output is byte-identical for a fixed seed") {
    SyntheticSpec s;
    s.n_banks = 60;
    s.rng_seed = 9;
    const auto a = scratch("syn_a"), b = scratch("syn_b");
    write_synthetic(a, generate_synthetic(s));
    write_synthetic(b, generate_synthetic(s));
    for (const auto& e : fs::directory_iterator(a)) CHECK(read(e.path()) == read(b / e.path().filename()));
}

TEST_CASE("synthetic edge cases") {
    SyntheticSpec s;
    s.n_banks = 9;
    try {
        generate_synthetic(s);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::usage);
    }
    s.n_banks = 50;
    s.default_rate = 0.0;
    const auto d = generate_synthetic(s);
    for (const auto& [id, label] : d.labels.labels) CHECK(label == kLabelSolvent);
    CHECK(d.failed_ids.empty());
}

TEST_CASE("default count is binomial around n * rate") {
    // n = 1000, rate 0.02: mean 20, sd sqrt(1000 * 0.02 * 0.98) = 4.43
    const double sd = std::sqrt(1000 * 0.02 * 0.98);
    for (std::uint64_t seed : {1, 2, 3}) {
        SyntheticSpec s;
        s.rng_seed = seed;
        const auto d = generate_synthetic(s);
        const double failed = static_cast<double>(d.failed_ids.size());
        CHECK(std::abs(failed - 20.0) <= 3.0 * sd);
    }
}

TEST_CASE("zero signal strength: contagion exposure is uncorrelated with labels") {
    SyntheticSpec s;
    s.contagion_signal_strength = 0.0;
    s.rng_seed = 4;
    const auto d = generate_synthetic(s);
    const auto y = label_vector(d);
    std::vector<double> truth = d.ground_truth["mean_true_proxy"].get<std::vector<double>>();
    CHECK(std::abs(pearson(truth, y)) < 0.1);
    CHECK(std::abs(pearson(pipeline_proxies(d), y)) < 0.1);
}

TEST_CASE("strong signal: failed banks carry larger contagion losses") {
    SyntheticSpec s;
    s.contagion_signal_strength = 3.0;
    s.rng_seed = 4;
    const auto d = generate_synthetic(s);
    // label 1 = solvent, proxy is a (negative) loss, so solvent banks sit higher
    CHECK(pearson(pipeline_proxies(d), label_vector(d)) > 0.1);
}

TEST_CASE("pipeline: small synthetic run produces every artifact and reruns identically") {
    const auto dir = scratch("run_small");
    write_config(dir / "run.ini", "[run]\nseed = 5\n[synthetic]\nn_banks = 200\ncontagion_signal_strength = 3\n"
                                  "[mlp]\nepochs = 20\ngrid = 8-16-8:adam:0.05;16-8-4:rmsprop:0.001\n"
                                  "[reconstruct]\ndump_matrix = true\n");
    const auto result = pl::run_from_config(dir / "run.ini", dir / "out", "test");
    for (const char* f : {"manifest.json", "report.json", "model.json", "sensitivity.csv", "fit.json",
                          "correlations.csv", "dataset/panel.csv", "dataset/panel_raw.csv", "dataset/dataset.json",
                          "dataset/assembled.csv", "proxies/2009Q1.csv", "proxies/2009Q4.csv",
                          "network/2009Q2.ibnw", "inputs/failed.csv"})
        CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
    const auto manifest = nlohmann::json::parse(read(dir / "out/manifest.json"));
    CHECK(manifest["config"]["simulate.alpha"] == "1e-6");
    CHECK(manifest["config"]["logit.lambda"] == "auto");
    CHECK(manifest["input_digests"].size() == 5);
    CHECK(manifest["timestamps"].contains("started"));
    CHECK(manifest["shock_scenario"].get<std::string>().find("0.1") != std::string::npos);

    pl::run_from_manifest(dir / "out/manifest.json", dir / "again", "test");
    for (const auto& e : fs::recursive_directory_iterator(dir / "out")) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        const auto rel = fs::relative(e.path(), dir / "out");
        CHECK_MESSAGE(read(e.path()) == read(dir / "again" / rel), rel.string());
    }

    const auto sens = csv::read(dir / "out/sensitivity.csv");
    CHECK(sens.header == std::vector<std::string>{"column_name", "gradient"});
    CHECK(sens.rows.size() == 24);
    const auto corr = csv::read(dir / "out/correlations.csv");
    CHECK(corr.rows.size() == 24);
    (void)result;
}

TEST_CASE("pipeline: a config missing a quarter fails at build-dataset naming it") {
    const auto dir = scratch("missing_q");
    SyntheticSpec s;
    s.n_banks = 30;
    write_synthetic(dir / "in", generate_synthetic(s));
    write_config(dir / "run.ini", "[inputs]\nq1 = in/2009Q1.csv\nq2 = in/2009Q2.csv\nq4 = in/2009Q4.csv\n"
                                  "failed = in/failed.csv\n");
    try {
        pl::run_from_config(dir / "run.ini", dir / "out", "test");
        FAIL("no error");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(e.code() == ErrorCode::arity);
        CHECK(what.find("build-dataset") != std::string::npos);
        CHECK(what.find("q3") != std::string::npos);
    }
    // stages before the failure keep their artifacts
    CHECK(fs::exists(dir / "out/proxies/2009Q1.csv"));
}

TEST_CASE("pipeline: a nonexistent quarter file is an I/O error naming the file") {
    const auto dir = scratch("missing_file");
    write_config(dir / "run.ini", "[inputs]\nq1 = nowhere.csv\nq2 = a.csv\nq3 = b.csv\nq4 = c.csv\nfailed = f.csv\n");
    try {
        pl::run_from_config(dir / "run.ini", dir / "out", "test");
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::io);
        CHECK(std::string(e.what()).find("nowhere.csv") != std::string::npos);
    }
}

TEST_CASE("stage isolation: build-dataset reruns alone from files") {
    const auto dir = scratch("isolation");
    SyntheticSpec s;
    s.n_banks = 80;
    s.default_rate = 0.1;
    write_synthetic(dir / "in", generate_synthetic(s));
    pl::BuildDatasetStage b;
    for (int q = 0; q < 4; ++q) {
        const auto panel = dir / "in" / ("2009Q" + std::to_string(q + 1) + ".csv");
        b.quarters[q] = panel;
        pl::SimulateStage sim;
        sim.panel = panel;
        sim.out = dir / "proxies" / ("2009Q" + std::to_string(q + 1) + ".csv");
        pl::simulate_stage(sim);
    }
    b.proxies_dir = dir / "proxies";
    b.labels = dir / "in/failed.csv";
    b.total = 200;
    b.seed = 3;
    b.out = dir / "ds1";
    pl::build_dataset_stage(b);
    b.out = dir / "ds2";
    pl::build_dataset_stage(b);
    CHECK(read(dir / "ds1/panel.csv") == read(dir / "ds2/panel.csv"));
    CHECK(read(dir / "ds1/dataset.json") == read(dir / "ds2/dataset.json"));

    b.rebalance_after_split = true;
    b.out = dir / "ds3";
    const auto ds = pl::build_dataset_stage(b);
    CHECK(ds.raw.rows() == 200);
    // without leakage no bank appears in more than one partition
    std::map<std::string, int> home;
    const std::vector<std::size_t>* parts[3] = {&ds.splits.train, &ds.splits.validation, &ds.splits.test};
    for (int k = 0; k < 3; ++k)
        for (auto i : *parts[k]) {
            auto [it, fresh] = home.emplace(ds.raw.bank_ids[i], k);
            CHECK(it->second == k);
        }
}

TEST_CASE("config resolution fills defaults and resolves relative inputs") {
    pl::Config c = {{"inputs.q1", "a.csv"}, {"run.seed", "3"}};
    const auto r = pl::resolve_config(c, "/base");
    CHECK(r.at("inputs.q1") == "/base/a.csv");
    CHECK(r.at("mlp.seed") == "3");
    CHECK(r.at("simulate.shock_fraction") == "0.1");
    CHECK(r.at("mlp.epochs") == "300");
}

TEST_CASE("sha256 of a known string") {
    const auto p = fs::temp_directory_path() / "ibnet_sha.txt";
    csv::write_file(p, "abc");
    CHECK(pl::sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
