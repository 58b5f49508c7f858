#include "ibnet/ibnet.h"

#include "csv.hpp"
#include "pipeline.hpp"

#include <nlohmann/json.hpp>

#include <new>
#include <string>

using namespace ibnet;
namespace pl = ibnet::pipeline;

struct ibnet_network {
    ExposureMatrix matrix;
    RasReport report;
};

struct ibnet_contagion {
    ContagionRun run;
};

struct ibnet_mlp {
    mlp::MlpModel model;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ibnet_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return IBNET_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<ibnet_status>(e.category());
    } catch (const std::filesystem::filesystem_error& e) {
        g_last_error = e.what();
        return IBNET_ERR_IO;
    } catch (const nlohmann::json::exception& e) {
        g_last_error = std::string("parse: ") + e.what();
        return IBNET_ERR_DATA;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return IBNET_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return IBNET_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return IBNET_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) throw Error(ErrorCode::usage, std::string(what) + " must not be null");
}

std::string str(const char* s) { return s ? s : ""; }

void check_capacity(size_t capacity, size_t needed) {
    if (capacity < needed)
        throw Error(ErrorCode::size, "output buffer holds " + std::to_string(capacity) + " values, need " +
                                         std::to_string(needed));
}

Matrix from_row_major(const double* x, size_t rows, size_t cols) {
    return Eigen::Map<const Matrix>(x, static_cast<Index>(rows), static_cast<Index>(cols));
}

}  // namespace

extern "C" {

const char* ibnet_version(void) { return pl::kToolVersion; }

const char* ibnet_last_error(void) { return g_last_error.c_str(); }

void ibnet_synthetic_options_init(ibnet_synthetic_options* opts) {
    if (!opts) return;
    const SyntheticSpec d;
    *opts = {d.n_banks, d.quarters, d.default_rate, d.contagion_signal_strength, d.rng_seed, d.shock_fraction};
}

ibnet_status ibnet_generate_synthetic(const ibnet_synthetic_options* opts, const char* out_dir) {
    return guarded([&] {
        need(opts, "options");
        need(out_dir, "output directory");
        SyntheticSpec spec;
        spec.n_banks = opts->n_banks;
        spec.quarters = opts->quarters;
        spec.default_rate = opts->default_rate;
        spec.contagion_signal_strength = opts->contagion_signal_strength;
        spec.rng_seed = opts->seed;
        spec.shock_fraction = opts->shock_fraction;
        write_synthetic(out_dir, generate_synthetic(spec));
    });
}

void ibnet_reconstruct_options_init(ibnet_reconstruct_options* opts) {
    if (opts) *opts = {nullptr, 1e-8, 10000, nullptr};
}

ibnet_status ibnet_reconstruct_panel(const char* panel_csv, const ibnet_reconstruct_options* opts,
                                     ibnet_reconstruct_result* result) {
    return guarded([&] {
        need(panel_csv, "panel path");
        need(opts, "options");
        pl::ReconstructStage s;
        s.panel = panel_csv;
        s.quarter = str(opts->quarter);
        s.tolerance = opts->tolerance;
        s.max_iter = opts->max_iter;
        if (opts->dump_matrix && *opts->dump_matrix) s.dump_matrix = opts->dump_matrix;
        const auto r = pl::reconstruct_stage(s);
        if (result)
            *result = {r.report.iterations, r.report.max_marginal_error, r.report.converged ? 1 : 0,
                       r.closure_factor,    r.banks,                     r.excluded.size(),
                       r.rejected_rows};
    });
}

void ibnet_simulate_options_init(ibnet_simulate_options* opts) {
    if (opts) *opts = {nullptr, 0.1, 1.0, 1e-6, 10000, 1e-8, 10000, nullptr};
}

ibnet_status ibnet_simulate(const char* panel_csv, const ibnet_simulate_options* opts, const char* out_csv) {
    return guarded([&] {
        need(panel_csv, "panel path");
        need(opts, "options");
        need(out_csv, "output path");
        pl::SimulateStage s;
        s.panel = panel_csv;
        s.quarter = str(opts->quarter);
        s.shock_fraction = opts->shock_fraction;
        s.beta = opts->beta;
        s.alpha = opts->alpha;
        s.max_periods = opts->max_periods;
        s.tolerance = opts->tolerance;
        s.max_iter = opts->max_iter;
        if (opts->trajectory && *opts->trajectory) s.trajectory = opts->trajectory;
        s.out = out_csv;
        pl::simulate_stage(s);
    });
}

void ibnet_dataset_options_init(ibnet_dataset_options* opts) {
    if (opts) *opts = {{nullptr, nullptr, nullptr, nullptr}, nullptr, nullptr, 1000, 0, 0};
}

ibnet_status ibnet_build_dataset(const ibnet_dataset_options* opts, const char* out_dir) {
    return guarded([&] {
        need(opts, "options");
        need(out_dir, "output directory");
        need(opts->proxies_dir, "proxies directory");
        need(opts->labels, "labels path");
        pl::BuildDatasetStage s;
        for (int q = 0; q < 4; ++q) s.quarters[q] = str(opts->quarters[q]);
        s.proxies_dir = opts->proxies_dir;
        s.labels = opts->labels;
        s.total = opts->total;
        s.seed = opts->seed;
        s.rebalance_after_split = opts->rebalance_after_split != 0;
        s.out = out_dir;
        pl::build_dataset_stage(s);
    });
}

void ibnet_mlp_options_init(ibnet_mlp_options* opts) {
    if (opts) *opts = {"default", 0, 300, 32, 0.1};
}

ibnet_status ibnet_train_mlp(const char* data_dir, const ibnet_mlp_options* opts, const char* out_json,
                             double* oos_accuracy) {
    return guarded([&] {
        need(data_dir, "data directory");
        need(opts, "options");
        need(out_json, "output path");
        pl::TrainMlpStage s;
        s.data = data_dir;
        s.grid = opts->grid ? opts->grid : "default";
        s.seed = opts->seed;
        s.epochs = opts->epochs;
        s.batch_size = opts->batch_size;
        s.dropout = opts->dropout;
        s.out = out_json;
        const auto r = pl::train_mlp_stage(s);
        if (oos_accuracy) *oos_accuracy = r.oos_accuracy;
    });
}

ibnet_status ibnet_sensitivity(const char* model_json, const char* data_dir, const char* out_csv) {
    return guarded([&] {
        need(model_json, "model path");
        need(data_dir, "data directory");
        need(out_csv, "output path");
        pl::sensitivity_stage({model_json, data_dir, out_csv});
    });
}

ibnet_status ibnet_logit(const char* data_dir, const char* lambda, const char* out_json, double* oos_accuracy) {
    return guarded([&] {
        need(data_dir, "data directory");
        need(out_json, "output path");
        const auto fit = pl::logit_stage({data_dir, lambda ? lambda : "auto", out_json});
        if (oos_accuracy) *oos_accuracy = fit.oos_accuracy.value_or(0.0);
    });
}

ibnet_status ibnet_report(const char* data_dir, const char* out_dir) {
    return guarded([&] {
        need(data_dir, "data directory");
        need(out_dir, "output directory");
        pl::report_stage({data_dir, out_dir});
    });
}

ibnet_status ibnet_run_pipeline(const char* config_path, const char* out_dir, const char* command_line) {
    return guarded([&] {
        need(config_path, "config path");
        need(out_dir, "output directory");
        pl::run_from_config(config_path, out_dir, str(command_line));
    });
}

ibnet_status ibnet_rerun_manifest(const char* manifest_path, const char* out_dir, const char* command_line) {
    return guarded([&] {
        need(manifest_path, "manifest path");
        need(out_dir, "output directory");
        pl::run_from_manifest(manifest_path, out_dir, str(command_line));
    });
}

ibnet_status ibnet_network_reconstruct(const double* ia, const double* il, size_t n, double tolerance, int max_iter,
                                       ibnet_network** out) {
    return guarded([&] {
        need(ia, "ia");
        need(il, "il");
        need(out, "out");
        *out = nullptr;
        RasOptions opts;
        opts.tolerance = tolerance;
        opts.max_iter = max_iter;
        auto [w, report] = reconstruct({ia, n}, {il, n}, opts);
        *out = new ibnet_network{std::move(w), report};
    });
}

size_t ibnet_network_size(const ibnet_network* net) { return net ? static_cast<size_t>(net->matrix.n()) : 0; }

ibnet_status ibnet_network_entries(const ibnet_network* net, double* w, size_t capacity) {
    return guarded([&] {
        need(net, "network");
        need(w, "buffer");
        const auto size = static_cast<size_t>(net->matrix.w.size());
        check_capacity(capacity, size);
        std::copy(net->matrix.w.data(), net->matrix.w.data() + size, w);
    });
}

ibnet_status ibnet_network_report(const ibnet_network* net, int* iterations, double* max_error, int* converged) {
    return guarded([&] {
        need(net, "network");
        if (iterations) *iterations = net->report.iterations;
        if (max_error) *max_error = net->report.max_marginal_error;
        if (converged) *converged = net->report.converged ? 1 : 0;
    });
}

void ibnet_network_free(ibnet_network* net) { delete net; }

ibnet_status ibnet_contagion_run(const double* w, const double* equity, const double* shock, size_t n, double beta,
                                 double alpha, int max_periods, ibnet_contagion** out) {
    return guarded([&] {
        need(w, "w");
        need(equity, "equity");
        need(out, "out");
        *out = nullptr;
        ExposureMatrix m;
        m.w = from_row_major(w, n, n);
        for (size_t i = 0; i < n; ++i) m.bank_ids.push_back(std::to_string(i));
        const Vector e = Eigen::Map<const Vector>(equity, static_cast<Index>(n));
        ShockSpec spec;
        if (shock)
            for (size_t i = 0; i < n; ++i)
                if (shock[i] != 0.0) spec.targets[m.bank_ids[i]] = shock[i];
        PropagateOptions opts;
        opts.beta = beta;
        opts.alpha = alpha;
        opts.max_periods = max_periods;
        *out = new ibnet_contagion{propagate(apply_shock(init_state(m, e), spec), opts)};
    });
}

ibnet_status ibnet_contagion_proxy(const ibnet_contagion* run, double* proxy, size_t capacity) {
    return guarded([&] {
        need(run, "run");
        need(proxy, "buffer");
        check_capacity(capacity, run->run.proxy.size());
        std::copy(run->run.proxy.begin(), run->run.proxy.end(), proxy);
    });
}

ibnet_status ibnet_contagion_final_equity(const ibnet_contagion* run, double* equity, size_t capacity) {
    return guarded([&] {
        need(run, "run");
        need(equity, "buffer");
        const auto& e = run->run.e_final;
        check_capacity(capacity, static_cast<size_t>(e.size()));
        std::copy(e.data(), e.data() + e.size(), equity);
    });
}

int ibnet_contagion_periods(const ibnet_contagion* run) { return run ? run->run.periods : -1; }

void ibnet_contagion_free(ibnet_contagion* run) { delete run; }

ibnet_status ibnet_mlp_load(const char* model_json, ibnet_mlp** out) {
    return guarded([&] {
        need(model_json, "model path");
        need(out, "out");
        *out = nullptr;
        const auto j = nlohmann::json::parse(csv::read_file(model_json));
        *out = new ibnet_mlp{mlp::from_json(j)};
    });
}

size_t ibnet_mlp_input_dim(const ibnet_mlp* model) {
    return model ? static_cast<size_t>(model->model.input_dim()) : 0;
}

ibnet_status ibnet_mlp_predict(const ibnet_mlp* model, const double* x, size_t rows, double* out) {
    return guarded([&] {
        need(model, "model");
        need(x, "x");
        need(out, "out");
        const Vector p = mlp::predict(model->model, from_row_major(x, rows, ibnet_mlp_input_dim(model)));
        std::copy(p.data(), p.data() + p.size(), out);
    });
}

ibnet_status ibnet_mlp_sensitivity(const ibnet_mlp* model, const double* x, size_t rows, double* out) {
    return guarded([&] {
        need(model, "model");
        need(x, "x");
        need(out, "out");
        const auto r = mlp::input_sensitivity(model->model, from_row_major(x, rows, ibnet_mlp_input_dim(model)));
        std::copy(r.mean.data(), r.mean.data() + r.mean.size(), out);
    });
}

void ibnet_mlp_free(ibnet_mlp* model) { delete model; }

}  // extern "C"
