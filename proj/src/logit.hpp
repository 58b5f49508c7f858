#pragma once

#include "common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ibnet::logit {

struct LogitFit {
    double intercept = 0.0;
    Vector coefficients;            // one per column, exact zeros when inactive
    std::vector<std::size_t> active_set;
    double lambda = 0.0;
    int sweeps = 0;

    // Unpenalised refit on the active set (post-selection, not selection-adjusted).
    bool refit_available = false;
    Vector refit_coefficients;      // zero outside the active set
    Vector standard_errors;         // NaN outside the active set
    Vector pvalues;                 // NaN outside the active set
    double intercept_refit = 0.0;
    double intercept_se = 0.0;
    double intercept_pvalue = 1.0;

    std::optional<double> oos_accuracy;
};

struct LassoOptions {
    double tolerance = 1e-8;   // max coefficient change between outer iterations
    int max_sweeps = 10000;    // coordinate sweeps across all outer iterations
    // Starting point; the intercept-only MLE when absent.
    std::optional<double> start_intercept;
    std::optional<Vector> start_coefficients;
};

/// Minimises mean binary cross-entropy + lambda * sum |b_j| by cyclic coordinate
/// descent on successive quadratic approximations. Intercept is unpenalised.
LogitFit fit_lasso(const Matrix& x, const Vector& y, double lambda, const LassoOptions& options = {});

/// Same minimiser as fit_lasso, reached by warm-starting down the log-spaced
/// penalty grid from lambda_max; far more robust at small penalties.
LogitFit fit_lasso_path(const Matrix& x, const Vector& y, double lambda, int grid_points = 50,
                        const LassoOptions& options = {});

/// Smallest penalty at which every slope is zero.
double lambda_max(const Matrix& x, const Vector& y);

/// Newton-Raphson MLE on the intercept plus `active` columns, with Wald
/// p-values from the inverse observed information. Throws a separation error
/// when the likelihood has no finite maximiser.
LogitFit refit_active(const Matrix& x, const Vector& y, std::span<const std::size_t> active);

/// Refits the lasso's active set and stores the refit statistics on `fit`.
void attach_refit(LogitFit& fit, const Matrix& x, const Vector& y);

double odds_interpretation(const LogitFit& fit, std::size_t column);

Vector predict_proba(const LogitFit& fit, const Matrix& x);
std::vector<int> classify(const LogitFit& fit, const Matrix& x);
// Odds > 1 classifier; identical decisions to thresholding P at 0.5.
std::vector<int> classify_by_odds(const LogitFit& fit, const Matrix& x);

struct LambdaSelection {
    double lambda = 0.0;
    double lambda_max = 0.0;
    std::vector<double> grid;            // descending
    std::vector<double> validation_accuracy;
    std::vector<std::size_t> active_sizes;
    double best_accuracy = 0.0;
    double tie_margin = 0.0;  // one binomial standard error at best_accuracy
    // grid positions where the active set shrank as lambda decreased
    std::vector<std::size_t> sparsity_violations;
    // The path stops at the first penalty whose fit does not converge; the
    // remaining (smaller) penalties are left unevaluated.
    std::optional<double> truncated_at;
    std::string truncation_reason;
};

/// Log-spaced grid over [1e-4 * lambda_max, lambda_max], walked from the top
/// with warm starts; best validation accuracy wins, ties go to the larger
/// (sparser) penalty.
LambdaSelection select_lambda(const Matrix& x, const Vector& y, std::span<const std::size_t> train,
                              std::span<const std::size_t> validation, int grid_points = 50);

nlohmann::json to_json(const LogitFit& fit, const std::vector<std::string>& column_names);

}  // namespace ibnet::logit
