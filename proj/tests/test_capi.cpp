// Exercises the shared library through its public header only.
#include <ibnet/ibnet.h>

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
    const auto dir = fs::temp_directory_path() / (std::string("ibnet_capi_") + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("version and last error") {
    CHECK(std::string(ibnet_version()).size() > 0);
    ibnet_network* net = nullptr;
    const double ia[] = {1.0};
    CHECK(ibnet_network_reconstruct(ia, ia, 1, 1e-8, 100, &net) == IBNET_ERR_DATA);
    CHECK(net == nullptr);
    CHECK(std::string(ibnet_last_error()).size() > 0);
    const double two[] = {1.0, 1.0};
    REQUIRE(ibnet_network_reconstruct(two, two, 2, 1e-8, 100, &net) == IBNET_OK);
    CHECK(std::string(ibnet_last_error()).empty());
    ibnet_network_free(net);
}

TEST_CASE("network handle") {
    const double ia[] = {10, 20, 30};
    const double il[] = {30, 20, 10};
    ibnet_network* net = nullptr;
    REQUIRE(ibnet_network_reconstruct(ia, il, 3, 1e-8, 10000, &net) == IBNET_OK);
    CHECK(ibnet_network_size(net) == 3);
    std::vector<double> w(9);
    CHECK(ibnet_network_entries(net, w.data(), 4) == IBNET_ERR_DATA);
    REQUIRE(ibnet_network_entries(net, w.data(), w.size()) == IBNET_OK);
    for (int i = 0; i < 3; ++i) {
        CHECK(w[i * 3 + i] == 0.0);
        CHECK(std::fabs(w[i * 3] + w[i * 3 + 1] + w[i * 3 + 2] - ia[i]) <= 1e-8 * ia[i]);
    }
    int iterations = 0, converged = 0;
    double err = 1.0;
    REQUIRE(ibnet_network_report(net, &iterations, &err, &converged) == IBNET_OK);
    CHECK(converged == 1);
    CHECK(err <= 1e-8);
    ibnet_network_free(net);
    ibnet_network_free(nullptr);
}

TEST_CASE("contagion handle reproduces the two-bank chain") {
    const double w[] = {0, 50, 0, 0};
    const double e[] = {100, 100};
    const double shock[] = {0.0, 0.5};
    ibnet_contagion* run = nullptr;
    REQUIRE(ibnet_contagion_run(w, e, shock, 2, 1.0, 1e-6, 10000, &run) == IBNET_OK);
    double proxy[2], fin[2];
    REQUIRE(ibnet_contagion_proxy(run, proxy, 2) == IBNET_OK);
    REQUIRE(ibnet_contagion_final_equity(run, fin, 2) == IBNET_OK);
    CHECK(proxy[0] == -25.0);
    CHECK(proxy[1] == 0.0);
    CHECK(fin[0] == 75.0);
    CHECK(fin[1] == 50.0);
    CHECK(ibnet_contagion_periods(run) >= 1);
    ibnet_contagion_free(run);

    CHECK(ibnet_contagion_run(w, e, shock, 2, -1.0, 1e-6, 10000, &run) == IBNET_ERR_DATA);
}

TEST_CASE("file stages chain through the C interface") {
    const auto dir = scratch("stages");
    ibnet_synthetic_options syn;
    ibnet_synthetic_options_init(&syn);
    syn.n_banks = 120;
    syn.default_rate = 0.1;
    syn.seed = 3;
    REQUIRE(ibnet_generate_synthetic(&syn, (dir / "in").c_str()) == IBNET_OK);

    ibnet_reconstruct_options ro;
    ibnet_reconstruct_options_init(&ro);
    ibnet_reconstruct_result rr;
    REQUIRE(ibnet_reconstruct_panel((dir / "in/2009Q1.csv").c_str(), &ro, &rr) == IBNET_OK);
    CHECK(rr.converged == 1);
    CHECK(rr.banks == 120);

    ibnet_simulate_options so;
    ibnet_simulate_options_init(&so);
    ibnet_dataset_options dso;
    ibnet_dataset_options_init(&dso);
    std::vector<std::string> quarters;
    for (int q = 1; q <= 4; ++q) {
        const std::string tag = "2009Q" + std::to_string(q);
        quarters.push_back((dir / "in" / (tag + ".csv")).string());
        REQUIRE(ibnet_simulate(quarters.back().c_str(), &so, (dir / "proxies" / (tag + ".csv")).c_str()) == IBNET_OK);
    }
    for (int q = 0; q < 4; ++q) dso.quarters[q] = quarters[q].c_str();
    const std::string proxies = (dir / "proxies").string(), labels = (dir / "in/failed.csv").string();
    dso.proxies_dir = proxies.c_str();
    dso.labels = labels.c_str();
    dso.total = 300;
    REQUIRE(ibnet_build_dataset(&dso, (dir / "data").c_str()) == IBNET_OK);

    ibnet_mlp_options mo;
    ibnet_mlp_options_init(&mo);
    mo.grid = "8-8-4:adam:0.01";
    mo.epochs = 20;
    double acc = -1.0;
    REQUIRE(ibnet_train_mlp((dir / "data").c_str(), &mo, (dir / "model.json").c_str(), &acc) == IBNET_OK);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    REQUIRE(ibnet_sensitivity((dir / "model.json").c_str(), (dir / "data").c_str(), (dir / "sens.csv").c_str()) ==
            IBNET_OK);
    CHECK(fs::exists(dir / "sens.csv"));
    REQUIRE(ibnet_logit((dir / "data").c_str(), "0.05", (dir / "fit.json").c_str(), &acc) == IBNET_OK);
    CHECK(ibnet_logit((dir / "data").c_str(), "abc", (dir / "fit2.json").c_str(), &acc) == IBNET_ERR_USAGE);
    REQUIRE(ibnet_report((dir / "data").c_str(), dir.c_str()) == IBNET_OK);
    CHECK(fs::exists(dir / "correlations.csv"));

    ibnet_mlp* model = nullptr;
    REQUIRE(ibnet_mlp_load((dir / "model.json").c_str(), &model) == IBNET_OK);
    REQUIRE(ibnet_mlp_input_dim(model) == 24);
    std::vector<double> x(48, 0.3), p(2), g(24);
    REQUIRE(ibnet_mlp_predict(model, x.data(), 2, p.data()) == IBNET_OK);
    CHECK(p[0] > 0.0);
    CHECK(p[0] < 1.0);
    CHECK(p[0] == p[1]);
    REQUIRE(ibnet_mlp_sensitivity(model, x.data(), 2, g.data()) == IBNET_OK);
    ibnet_mlp_free(model);
}

TEST_CASE("error categories surface as status codes") {
    const auto dir = scratch("errors");
    ibnet_reconstruct_options ro;
    ibnet_reconstruct_options_init(&ro);
    ibnet_reconstruct_result rr;
    CHECK(ibnet_reconstruct_panel((dir / "absent.csv").c_str(), &ro, &rr) == IBNET_ERR_IO);

    std::ofstream(dir / "bad.csv") << "bank_id,quarter\nA,2009Q1\n";
    CHECK(ibnet_reconstruct_panel((dir / "bad.csv").c_str(), &ro, &rr) == IBNET_ERR_DATA);

    ibnet_synthetic_options syn;
    ibnet_synthetic_options_init(&syn);
    syn.n_banks = 5;
    CHECK(ibnet_generate_synthetic(&syn, (dir / "s").c_str()) == IBNET_ERR_USAGE);

    ibnet_mlp* model = nullptr;
    CHECK(ibnet_mlp_load((dir / "absent.json").c_str(), &model) == IBNET_ERR_IO);
}
