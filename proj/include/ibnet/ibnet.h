/* ibnet: interbank network reconstruction, DebtRank contagion and default
 * classification. Plain C interface over the C++ core. */
#ifndef IBNET_IBNET_H
#define IBNET_IBNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define IBNET_API __declspec(dllexport)
#else
#define IBNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as process exit codes. */
typedef enum ibnet_status {
    IBNET_OK = 0,
    IBNET_ERR_INTERNAL = 1,
    IBNET_ERR_USAGE = 2,
    IBNET_ERR_DATA = 3,
    IBNET_ERR_NUMERICAL = 4,
    IBNET_ERR_IO = 5
} ibnet_status;

IBNET_API const char* ibnet_version(void);

/* Message of the last failed call on this thread; "" after a success. */
IBNET_API const char* ibnet_last_error(void);

/* ---- file-level stages ------------------------------------------------ */

typedef struct ibnet_synthetic_options {
    int n_banks;
    int quarters;
    double default_rate;
    double contagion_signal_strength;
    uint64_t seed;
    double shock_fraction;
} ibnet_synthetic_options;

IBNET_API void ibnet_synthetic_options_init(ibnet_synthetic_options* opts);
IBNET_API ibnet_status ibnet_generate_synthetic(const ibnet_synthetic_options* opts, const char* out_dir);

typedef struct ibnet_reconstruct_options {
    const char* quarter; /* NULL or "" keeps every row */
    double tolerance;
    int max_iter;
    const char* dump_matrix; /* NULL: no dump */
} ibnet_reconstruct_options;

typedef struct ibnet_reconstruct_result {
    int iterations;
    double max_marginal_error;
    int converged;
    double closure_factor;
    size_t banks;
    size_t excluded;
    size_t rejected_rows;
} ibnet_reconstruct_result;

IBNET_API void ibnet_reconstruct_options_init(ibnet_reconstruct_options* opts);
IBNET_API ibnet_status ibnet_reconstruct_panel(const char* panel_csv, const ibnet_reconstruct_options* opts,
                                               ibnet_reconstruct_result* result);

typedef struct ibnet_simulate_options {
    const char* quarter;
    double shock_fraction;
    double beta;
    double alpha;
    int max_periods;
    double tolerance;
    int max_iter;
    const char* trajectory; /* NULL: not written */
} ibnet_simulate_options;

IBNET_API void ibnet_simulate_options_init(ibnet_simulate_options* opts);
IBNET_API ibnet_status ibnet_simulate(const char* panel_csv, const ibnet_simulate_options* opts,
                                      const char* out_csv);

typedef struct ibnet_dataset_options {
    const char* quarters[4];
    const char* proxies_dir;
    const char* labels;
    size_t total;
    uint64_t seed;
    int rebalance_after_split;
} ibnet_dataset_options;

IBNET_API void ibnet_dataset_options_init(ibnet_dataset_options* opts);
IBNET_API ibnet_status ibnet_build_dataset(const ibnet_dataset_options* opts, const char* out_dir);

typedef struct ibnet_mlp_options {
    const char* grid; /* "default" or "h1-h2-h3:solver:lr;..." */
    uint64_t seed;
    int epochs;
    int batch_size;
    double dropout;
} ibnet_mlp_options;

IBNET_API void ibnet_mlp_options_init(ibnet_mlp_options* opts);
IBNET_API ibnet_status ibnet_train_mlp(const char* data_dir, const ibnet_mlp_options* opts, const char* out_json,
                                       double* oos_accuracy);

IBNET_API ibnet_status ibnet_sensitivity(const char* model_json, const char* data_dir, const char* out_csv);

/* lambda: "auto" or a decimal number. */
IBNET_API ibnet_status ibnet_logit(const char* data_dir, const char* lambda, const char* out_json,
                                   double* oos_accuracy);

IBNET_API ibnet_status ibnet_report(const char* data_dir, const char* out_dir);

IBNET_API ibnet_status ibnet_run_pipeline(const char* config_path, const char* out_dir, const char* command_line);
IBNET_API ibnet_status ibnet_rerun_manifest(const char* manifest_path, const char* out_dir,
                                            const char* command_line);

/* ---- in-memory handles ------------------------------------------------ */

typedef struct ibnet_network ibnet_network;

/* ia/il: interbank assets and liabilities per bank, length n. */
IBNET_API ibnet_status ibnet_network_reconstruct(const double* ia, const double* il, size_t n, double tolerance,
                                                 int max_iter, ibnet_network** out);
IBNET_API size_t ibnet_network_size(const ibnet_network* net);
/* Copies the n*n matrix row-major; w[i*n+j] is the loan from i to j. */
IBNET_API ibnet_status ibnet_network_entries(const ibnet_network* net, double* w, size_t capacity);
IBNET_API ibnet_status ibnet_network_report(const ibnet_network* net, int* iterations, double* max_error,
                                            int* converged);
IBNET_API void ibnet_network_free(ibnet_network* net);

typedef struct ibnet_contagion ibnet_contagion;

/* w: n*n row-major exposures; shock: per-bank equity fraction in [0, 1]. */
IBNET_API ibnet_status ibnet_contagion_run(const double* w, const double* equity, const double* shock, size_t n,
                                           double beta, double alpha, int max_periods, ibnet_contagion** out);
IBNET_API ibnet_status ibnet_contagion_proxy(const ibnet_contagion* run, double* proxy, size_t capacity);
IBNET_API ibnet_status ibnet_contagion_final_equity(const ibnet_contagion* run, double* equity, size_t capacity);
IBNET_API int ibnet_contagion_periods(const ibnet_contagion* run);
IBNET_API void ibnet_contagion_free(ibnet_contagion* run);

typedef struct ibnet_mlp ibnet_mlp;

IBNET_API ibnet_status ibnet_mlp_load(const char* model_json, ibnet_mlp** out);
IBNET_API size_t ibnet_mlp_input_dim(const ibnet_mlp* model);
/* x: rows*input_dim row-major; out: rows probabilities of default. */
IBNET_API ibnet_status ibnet_mlp_predict(const ibnet_mlp* model, const double* x, size_t rows, double* out);
/* Mean dY/dx over the rows; out has input_dim entries. */
IBNET_API ibnet_status ibnet_mlp_sensitivity(const ibnet_mlp* model, const double* x, size_t rows, double* out);
IBNET_API void ibnet_mlp_free(ibnet_mlp* model);

#ifdef __cplusplus
}
#endif

#endif
