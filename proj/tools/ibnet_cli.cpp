// Command-line front end; everything goes through the C interface.
#include "ibnet/ibnet.h"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

int report(ibnet_status status, const char* stage) {
    if (status != IBNET_OK) std::fprintf(stderr, "error [%s]: %s\n", stage, ibnet_last_error());
    return static_cast<int>(status);
}

const char* opt_c_str(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string joined(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interbank contagion and default classification toolkit"};
    app.set_version_flag("--version", std::string(ibnet_version()));
    app.require_subcommand(1);
    int status = 0;
    const std::string command_line = joined(argc, argv);

    // generate-synthetic
    ibnet_synthetic_options syn;
    ibnet_synthetic_options_init(&syn);
    std::string syn_out;
    auto* gen = app.add_subcommand("generate-synthetic", "Write a seeded synthetic four-quarter universe");
    gen->add_option("--n-banks", syn.n_banks, "Number of banks")->capture_default_str();
    gen->add_option("--quarters", syn.quarters, "Number of quarters")->capture_default_str();
    gen->add_option("--default-rate", syn.default_rate, "Target mean default probability")->capture_default_str();
    gen->add_option("--signal", syn.contagion_signal_strength, "Contagion signal strength")->capture_default_str();
    gen->add_option("--shock-fraction", syn.shock_fraction, "Shock used for the true exposure")->capture_default_str();
    gen->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
    gen->add_option("--out", syn_out, "Output directory")->required();
    gen->callback([&] { status = report(ibnet_generate_synthetic(&syn, syn_out.c_str()), "generate-synthetic"); });

    // reconstruct
    ibnet_reconstruct_options rec;
    ibnet_reconstruct_options_init(&rec);
    std::string rec_panel, rec_quarter, rec_dump;
    auto* recon = app.add_subcommand("reconstruct", "Rebuild the bilateral exposure matrix of one quarter");
    recon->add_option("--panel", rec_panel, "Quarterly panel CSV")->required();
    recon->add_option("--quarter", rec_quarter, "Quarter tag to select");
    recon->add_option("--tolerance", rec.tolerance, "Relative marginal tolerance")->capture_default_str();
    recon->add_option("--max-iter", rec.max_iter, "Iteration limit")->capture_default_str();
    recon->add_option("--dump-matrix", rec_dump, "Binary matrix dump path");
    recon->callback([&] {
        rec.quarter = opt_c_str(rec_quarter);
        rec.dump_matrix = opt_c_str(rec_dump);
        ibnet_reconstruct_result r{};
        status = report(ibnet_reconstruct_panel(rec_panel.c_str(), &rec, &r), "reconstruct");
        if (status == 0)
            std::printf("banks=%zu excluded=%zu rejected=%zu closure_factor=%.17g iterations=%d "
                        "max_marginal_error=%.3e converged=%s\n",
                        r.banks, r.excluded, r.rejected_rows, r.closure_factor, r.iterations, r.max_marginal_error,
                        r.converged ? "true" : "false");
        if (status == 0 && !r.converged) {
            std::fprintf(stderr, "error [reconstruct]: no convergence within %d iterations\n", rec.max_iter);
            status = IBNET_ERR_NUMERICAL;
        }
    });

    // simulate
    ibnet_simulate_options sim;
    ibnet_simulate_options_init(&sim);
    std::string sim_panel, sim_quarter, sim_traj, sim_out;
    auto* simc = app.add_subcommand("simulate", "Run the DebtRank stress scenario for one quarter");
    simc->add_option("--panel", sim_panel, "Quarterly panel CSV")->required();
    simc->add_option("--quarter", sim_quarter, "Quarter tag to select");
    simc->add_option("--shock-fraction", sim.shock_fraction, "Uniform equity shock")->capture_default_str();
    simc->add_option("--beta", sim.beta, "Linearity coefficient")->capture_default_str();
    simc->add_option("--alpha", sim.alpha, "Convergence threshold")->capture_default_str();
    simc->add_option("--max-periods", sim.max_periods, "Period limit")->capture_default_str();
    simc->add_option("--tolerance", sim.tolerance, "Reconstruction tolerance")->capture_default_str();
    simc->add_option("--max-iter", sim.max_iter, "Reconstruction iteration limit")->capture_default_str();
    simc->add_option("--trajectory", sim_traj, "Per-period equity CSV");
    simc->add_option("--out", sim_out, "Proxy CSV")->required();
    simc->callback([&] {
        sim.quarter = opt_c_str(sim_quarter);
        sim.trajectory = opt_c_str(sim_traj);
        status = report(ibnet_simulate(sim_panel.c_str(), &sim, sim_out.c_str()), "simulate");
    });

    // build-dataset
    ibnet_dataset_options ds;
    ibnet_dataset_options_init(&ds);
    std::string q[4], ds_proxies, ds_labels, ds_out;
    bool after_split = false;
    auto* build = app.add_subcommand("build-dataset", "Assemble, rebalance, split and scale the feature panel");
    for (int i = 0; i < 4; ++i)
        build->add_option("--q" + std::to_string(i + 1), q[i], "Panel CSV for quarter " + std::to_string(i + 1))
            ->required();
    build->add_option("--proxies", ds_proxies, "Directory of <quarter>.csv proxy files")->required();
    build->add_option("--labels", ds_labels, "Failed-bank list CSV")->required();
    build->add_option("--total", ds.total, "Balanced panel size")->capture_default_str();
    build->add_option("--seed", ds.seed, "Random seed")->capture_default_str();
    build->add_flag("--rebalance-after-split", after_split, "Split distinct banks before resampling");
    build->add_option("--out", ds_out, "Output directory")->required();
    build->callback([&] {
        for (int i = 0; i < 4; ++i) ds.quarters[i] = q[i].c_str();
        ds.proxies_dir = ds_proxies.c_str();
        ds.labels = ds_labels.c_str();
        ds.rebalance_after_split = after_split ? 1 : 0;
        status = report(ibnet_build_dataset(&ds, ds_out.c_str()), "build-dataset");
    });

    // train-mlp
    ibnet_mlp_options mo;
    ibnet_mlp_options_init(&mo);
    std::string mlp_data, mlp_grid = "default", mlp_out;
    auto* train = app.add_subcommand("train-mlp", "Tune and train the neural classifier");
    train->add_option("--data", mlp_data, "Dataset directory")->required();
    train->add_option("--grid", mlp_grid, "'default' or h1-h2-h3:solver:lr;...")->capture_default_str();
    train->add_option("--seed", mo.seed, "Random seed")->capture_default_str();
    train->add_option("--epochs", mo.epochs, "Training epochs")->capture_default_str();
    train->add_option("--batch-size", mo.batch_size, "Minibatch size")->capture_default_str();
    train->add_option("--dropout", mo.dropout, "Dropout probability")->capture_default_str();
    train->add_option("--out", mlp_out, "Model JSON")->required();
    train->callback([&] {
        mo.grid = mlp_grid.c_str();
        double acc = 0.0;
        status = report(ibnet_train_mlp(mlp_data.c_str(), &mo, mlp_out.c_str(), &acc), "train-mlp");
        if (status == 0) std::printf("oos_accuracy=%.6f\n", acc);
    });

    // sensitivity
    std::string sens_model, sens_data, sens_out;
    auto* sens = app.add_subcommand("sensitivity", "Mean output gradient per input over the test rows");
    sens->add_option("--model", sens_model, "Model JSON")->required();
    sens->add_option("--data", sens_data, "Dataset directory")->required();
    sens->add_option("--out", sens_out, "Gradient CSV")->required();
    sens->callback([&] {
        status = report(ibnet_sensitivity(sens_model.c_str(), sens_data.c_str(), sens_out.c_str()), "sensitivity");
    });

    // logit
    std::string lg_data, lg_lambda = "auto", lg_out;
    auto* logit = app.add_subcommand("logit", "Fit the L1-penalised logistic model");
    logit->add_option("--data", lg_data, "Dataset directory")->required();
    logit->add_option("--lambda", lg_lambda, "'auto' or a penalty value")->capture_default_str();
    logit->add_option("--out", lg_out, "Fit JSON")->required();
    logit->callback([&] {
        double acc = 0.0;
        status = report(ibnet_logit(lg_data.c_str(), lg_lambda.c_str(), lg_out.c_str(), &acc), "logit");
        if (status == 0) std::printf("oos_accuracy=%.6f\n", acc);
    });

    // report
    std::string rp_data, rp_out;
    auto* rep = app.add_subcommand("report", "Correlation matrix of the feature columns");
    rep->add_option("--data", rp_data, "Dataset directory")->required();
    rep->add_option("--out", rp_out, "Output directory")->required();
    rep->callback([&] { status = report(ibnet_report(rp_data.c_str(), rp_out.c_str()), "report"); });

    // run
    std::string run_config, run_manifest, run_out;
    auto* run = app.add_subcommand("run", "Full pipeline from a config file or a previous manifest");
    auto* cfg_opt = run->add_option("--config", run_config, "INI config");
    auto* man_opt = run->add_option("--manifest", run_manifest, "manifest.json of an earlier run");
    cfg_opt->excludes(man_opt);
    run->add_option("--out", run_out, "Output directory")->required();
    run->callback([&] {
        if (run_config.empty() == run_manifest.empty()) {
            std::fprintf(stderr, "error [run]: give exactly one of --config or --manifest\n");
            status = IBNET_ERR_USAGE;
            return;
        }
        status = run_config.empty()
                     ? report(ibnet_rerun_manifest(run_manifest.c_str(), run_out.c_str(), command_line.c_str()), "run")
                     : report(ibnet_run_pipeline(run_config.c_str(), run_out.c_str(), command_line.c_str()), "run");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : IBNET_ERR_USAGE;
    }
    return status;
}
