#include "logit.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ibnet::logit {

using nlohmann::json;

namespace {

constexpr double kMinWeight = 1e-5;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

void check_xy(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size()) throw Error(ErrorCode::dimension, "feature and label row counts differ");
    if (x.rows() == 0) throw Error(ErrorCode::size, "cannot fit a logistic model on zero rows");
    for (Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorCode::domain, "targets must be 0 or 1");
}

double mean_logit(const Vector& y) {
    const double pbar = std::clamp(y.mean(), 1e-10, 1.0 - 1e-10);
    return std::log(pbar / (1.0 - pbar));
}

double two_sided_normal_tail(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Mean binary cross-entropy plus the L1 penalty on the slopes.
double penalized_objective(const Matrix& x, const Vector& y, double b0, const Vector& b, double lambda) {
    const Vector eta = (x * b).array() + b0;
    double loss = 0.0;
    for (Index i = 0; i < eta.size(); ++i)
        loss += std::max(eta[i], 0.0) - eta[i] * y[i] + std::log1p(std::exp(-std::abs(eta[i])));
    return loss / static_cast<double>(eta.size()) + lambda * b.lpNorm<1>();
}

}  // namespace

double lambda_max(const Matrix& x, const Vector& y) {
    check_xy(x, y);
    const Vector r = y.array() - y.mean();
    const double n = static_cast<double>(x.rows());
    double best = 0.0;
    for (Index j = 0; j < x.cols(); ++j) best = std::max(best, std::abs(x.col(j).dot(r)) / n);
    return best;
}

LogitFit fit_lasso(const Matrix& x, const Vector& y, double lambda, const LassoOptions& options) {
    check_xy(x, y);
    if (!(lambda >= 0.0)) throw Error(ErrorCode::domain, "lambda must be non-negative");
    const Index n = x.rows();
    const Index p = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    double b0 = options.start_intercept.value_or(mean_logit(y));
    Vector b = Vector::Zero(p);
    if (options.start_coefficients) {
        if (options.start_coefficients->size() != p)
            throw Error(ErrorCode::dimension, "warm start has the wrong number of coefficients");
        b = *options.start_coefficients;
    }
    // at or above lambda_max the intercept-only model satisfies the optimality conditions exactly
    const bool at_null = p == 0 || lambda >= lambda_max(x, y);
    if (at_null) {
        b0 = mean_logit(y);
        b.setZero();
    }
    Vector eta(n), w(n), r(n);
    int sweeps = 0;
    double last_change = std::numeric_limits<double>::infinity();
    double objective = penalized_objective(x, y, b0, b, lambda);

    auto out_of_sweeps = [&] {
        return Error(ErrorCode::convergence, "lasso did not converge in " + std::to_string(options.max_sweeps) +
                                                 " sweeps (last change " + format_double(last_change) + ")");
    };

    while (!at_null) {
        const double b0_start = b0;
        const Vector b_start = b;
        eta = (x * b).array() + b0;
        for (Index i = 0; i < n; ++i) {
            const double pi = sigmoid(eta[i]);
            w[i] = std::max(pi * (1.0 - pi), kMinWeight);
            r[i] = (y[i] - pi) / w[i];  // working residual z - eta
        }
        const double w_sum = w.sum();
        Vector xwx(p);
        for (Index j = 0; j < p; ++j) xwx[j] = (x.col(j).array().square() * w.array()).sum() * inv_n;

        // One pass of coordinate descent on the weighted least-squares surrogate.
        // Returns the largest weighted squared move, the surrogate's own scale.
        auto sweep = [&](bool active_only) {
            if (++sweeps > options.max_sweeps) throw out_of_sweeps();
            const double d0 = (w.array() * r.array()).sum() / w_sum;
            b0 += d0;
            r.array() -= d0;
            double moved = w_sum * inv_n * d0 * d0;
            for (Index j = 0; j < p; ++j) {
                if (xwx[j] == 0.0 || (active_only && b[j] == 0.0)) continue;
                const double grad = (x.col(j).array() * w.array() * r.array()).sum() * inv_n + xwx[j] * b[j];
                const double updated = soft_threshold(grad, lambda) / xwx[j];
                const double delta = updated - b[j];
                if (delta != 0.0) {
                    r -= delta * x.col(j);
                    b[j] = updated;
                    moved = std::max(moved, xwx[j] * delta * delta);
                }
            }
            return moved;
        };
        const double inner_tol = options.tolerance * 1e-2;
        for (;;) {
            if (sweep(false) < inner_tol) break;
            while (sweep(true) >= inner_tol) {
            }
        }

        // halve the step back toward the previous iterate until the objective stops rising
        double candidate = penalized_objective(x, y, b0, b, lambda);
        for (int halvings = 0; candidate > objective * (1.0 + 1e-15) && halvings < 60; ++halvings) {
            b0 = 0.5 * (b0 + b0_start);
            b = 0.5 * (b + b_start);
            candidate = penalized_objective(x, y, b0, b, lambda);
        }
        objective = candidate;

        last_change = std::max(std::abs(b0 - b0_start), (b - b_start).cwiseAbs().maxCoeff());
        if (!std::isfinite(last_change))
            throw Error(ErrorCode::convergence, "lasso coefficients diverged (possible separation)");
        if (last_change < options.tolerance) break;
    }

    LogitFit fit;
    fit.intercept = b0;
    fit.coefficients = b;
    fit.lambda = lambda;
    fit.sweeps = sweeps;
    for (Index j = 0; j < p; ++j)
        if (b[j] != 0.0) fit.active_set.push_back(static_cast<std::size_t>(j));
    fit.refit_coefficients = Vector::Zero(p);
    fit.standard_errors = Vector::Constant(p, kNaN);
    fit.pvalues = Vector::Constant(p, kNaN);
    return fit;
}

LogitFit fit_lasso_path(const Matrix& x, const Vector& y, double lambda, int grid_points,
                        const LassoOptions& options) {
    const double top = lambda_max(x, y);
    if (!(lambda >= 0.0)) throw Error(ErrorCode::domain, "lambda must be non-negative");
    LassoOptions opts = options;
    if (lambda < top && grid_points >= 2 && top > 0.0) {
        const double hi = std::log(top);
        const double lo = std::log(top * 1e-4);
        for (int g = 0; g < grid_points; ++g) {
            const double step = std::exp(hi + (lo - hi) * static_cast<double>(g) / (grid_points - 1));
            if (step <= lambda) break;
            const LogitFit fit = fit_lasso(x, y, step, opts);
            opts.start_intercept = fit.intercept;
            opts.start_coefficients = fit.coefficients;
        }
    }
    return fit_lasso(x, y, lambda, opts);
}

LogitFit refit_active(const Matrix& x, const Vector& y, std::span<const std::size_t> active) {
    check_xy(x, y);
    const Index n = x.rows();
    const Index k = static_cast<Index>(active.size()) + 1;
    Matrix design(n, k);
    design.col(0).setOnes();
    for (Index c = 1; c < k; ++c) {
        const auto src = active[static_cast<std::size_t>(c - 1)];
        if (src >= static_cast<std::size_t>(x.cols()))
            throw Error(ErrorCode::lookup, "active column " + std::to_string(src) + " out of range");
        design.col(c) = x.col(static_cast<Index>(src));
    }

    auto log_likelihood = [&](const Vector& beta) {
        const Vector eta = design * beta;
        double ll = 0.0;
        for (Index i = 0; i < n; ++i)
            ll -= std::max(eta[i], 0.0) - eta[i] * y[i] + std::log1p(std::exp(-std::abs(eta[i])));
        return ll;
    };

    Vector beta = Vector::Zero(k);
    beta[0] = mean_logit(y);
    Matrix info(k, k);
    bool converged = false;
    double ll = log_likelihood(beta);
    for (int iter = 0; iter < 200 && !converged; ++iter) {
        const Vector eta = design * beta;
        Vector mu(n), w(n);
        for (Index i = 0; i < n; ++i) {
            mu[i] = sigmoid(eta[i]);
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        // observations fitted as certain (probability numerically 0 or 1) mean separation
        if (eta.cwiseAbs().maxCoeff() > 30.0) {
            for (Index i = 0; i < n; ++i)
                if (std::abs(eta[i]) > 30.0 && ((eta[i] > 0.0) == (y[i] == 1.0)))
                    throw Error(ErrorCode::separation,
                                "fitted probabilities are numerically 0 or 1; standard errors diverge");
        }
        info = design.transpose() * w.asDiagonal() * design;
        const Vector grad = design.transpose() * (y - mu);
        Eigen::LDLT<Matrix> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw Error(ErrorCode::separation, "information matrix is singular");
        Vector step = ldlt.solve(grad);
        double t = 1.0;
        Vector candidate = beta + step;
        double ll_new = log_likelihood(candidate);
        while (ll_new < ll - 1e-12 * std::abs(ll) && t > 1e-6) {
            t *= 0.5;
            candidate = beta + t * step;
            ll_new = log_likelihood(candidate);
        }
        beta = candidate;
        ll = ll_new;
        converged = (t * step).cwiseAbs().maxCoeff() < 1e-10;
    }
    if (!converged) throw Error(ErrorCode::separation, "Newton-Raphson did not converge; likelihood is unbounded");

    {
        const Vector eta = design * beta;
        Vector w(n);
        for (Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta[i]);
            w[i] = mu * (1.0 - mu);
        }
        info = design.transpose() * w.asDiagonal() * design;
    }
    const Matrix cov = info.ldlt().solve(Matrix::Identity(k, k));

    LogitFit fit;
    const Index p = x.cols();
    fit.coefficients = Vector::Zero(p);
    fit.refit_coefficients = Vector::Zero(p);
    fit.standard_errors = Vector::Constant(p, kNaN);
    fit.pvalues = Vector::Constant(p, kNaN);
    fit.refit_available = true;
    fit.intercept = fit.intercept_refit = beta[0];
    fit.intercept_se = std::sqrt(cov(0, 0));
    fit.intercept_pvalue = two_sided_normal_tail(beta[0] / fit.intercept_se);
    for (Index c = 1; c < k; ++c) {
        const auto j = static_cast<Index>(active[static_cast<std::size_t>(c - 1)]);
        fit.coefficients[j] = fit.refit_coefficients[j] = beta[c];
        fit.standard_errors[j] = std::sqrt(cov(c, c));
        fit.pvalues[j] = two_sided_normal_tail(beta[c] / fit.standard_errors[j]);
        fit.active_set.push_back(static_cast<std::size_t>(j));
    }
    std::sort(fit.active_set.begin(), fit.active_set.end());
    return fit;
}

void attach_refit(LogitFit& fit, const Matrix& x, const Vector& y) {
    const LogitFit refit = refit_active(x, y, fit.active_set);
    fit.refit_available = true;
    fit.refit_coefficients = refit.refit_coefficients;
    fit.standard_errors = refit.standard_errors;
    fit.pvalues = refit.pvalues;
    fit.intercept_refit = refit.intercept_refit;
    fit.intercept_se = refit.intercept_se;
    fit.intercept_pvalue = refit.intercept_pvalue;
}

double odds_interpretation(const LogitFit& fit, std::size_t column) {
    if (column >= static_cast<std::size_t>(fit.coefficients.size()) ||
        std::find(fit.active_set.begin(), fit.active_set.end(), column) == fit.active_set.end())
        throw Error(ErrorCode::lookup, "column " + std::to_string(column) + " is not in the active set");
    return std::exp(fit.coefficients[static_cast<Index>(column)]);
}

Vector predict_proba(const LogitFit& fit, const Matrix& x) {
    if (x.cols() != fit.coefficients.size())
        throw Error(ErrorCode::dimension, "expected " + std::to_string(fit.coefficients.size()) + " columns");
    const Vector eta = (x * fit.coefficients).array() + fit.intercept;
    return eta.unaryExpr([](double z) { return sigmoid(z); });
}

std::vector<int> classify(const LogitFit& fit, const Matrix& x) {
    const Vector p = predict_proba(fit, x);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p[i] >= 0.5 ? 1 : 0;
    return out;
}

std::vector<int> classify_by_odds(const LogitFit& fit, const Matrix& x) {
    if (x.cols() != fit.coefficients.size())
        throw Error(ErrorCode::dimension, "expected " + std::to_string(fit.coefficients.size()) + " columns");
    const Vector eta = (x * fit.coefficients).array() + fit.intercept;
    std::vector<int> out(static_cast<std::size_t>(eta.size()));
    // sigmoid(eta) >= 0.5 exactly when eta >= 0, i.e. odds e^eta >= 1
    for (Index i = 0; i < eta.size(); ++i) out[static_cast<std::size_t>(i)] = eta[i] >= 0.0 ? 1 : 0;
    return out;
}

namespace {

Matrix take_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = x.row(static_cast<Index>(idx[r]));
    return out;
}

Vector take(const Vector& y, std::span<const std::size_t> idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = y[static_cast<Index>(idx[r])];
    return out;
}

double accuracy(const std::vector<int>& pred, const Vector& y) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (static_cast<double>(pred[i]) == y[static_cast<Index>(i)]) ++hits;
    return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

LambdaSelection select_lambda(const Matrix& x, const Vector& y, std::span<const std::size_t> train,
                              std::span<const std::size_t> validation, int grid_points) {
    if (grid_points < 2) throw Error(ErrorCode::usage, "lambda grid needs at least 2 points");
    const Matrix xt = take_rows(x, train);
    const Vector yt = take(y, train);
    const Matrix xv = take_rows(x, validation);
    const Vector yv = take(y, validation);

    LambdaSelection sel;
    sel.lambda_max = lambda_max(xt, yt);
    const double lo = std::log(sel.lambda_max * 1e-4);
    const double hi = std::log(sel.lambda_max);
    double best_acc = -1.0;
    LassoOptions opts;
    for (int g = 0; g < grid_points; ++g) {
        const double lambda =
            g == 0 ? sel.lambda_max : std::exp(hi + (lo - hi) * static_cast<double>(g) / (grid_points - 1));
        LogitFit fit;
        try {
            fit = fit_lasso(xt, yt, lambda, opts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::convergence || g == 0) throw;
            sel.truncated_at = lambda;
            sel.truncation_reason = e.what();
            break;
        }
        opts.start_intercept = fit.intercept;
        opts.start_coefficients = fit.coefficients;
        const double acc = accuracy(classify(fit, xv), yv);
        sel.grid.push_back(lambda);
        sel.validation_accuracy.push_back(acc);
        sel.active_sizes.push_back(fit.active_set.size());
        if (g > 0 && sel.active_sizes[g] < sel.active_sizes[g - 1]) sel.sparsity_violations.push_back(g);
        best_acc = std::max(best_acc, acc);
    }
    // accuracies within one binomial standard error of the best count as ties;
    // the grid descends, so the first tied point is the largest lambda
    sel.best_accuracy = best_acc;
    sel.tie_margin = std::sqrt(best_acc * (1.0 - best_acc) / static_cast<double>(validation.size()));
    for (std::size_t g = 0; g < sel.grid.size(); ++g)
        if (sel.validation_accuracy[g] >= best_acc - sel.tie_margin) {
            sel.lambda = sel.grid[g];
            break;
        }
    return sel;
}

json to_json(const LogitFit& fit, const std::vector<std::string>& column_names) {
    json cols = json::array();
    for (Index j = 0; j < fit.coefficients.size(); ++j) {
        const std::string name = static_cast<std::size_t>(j) < column_names.size() ? column_names[j]
                                                                                    : "x" + std::to_string(j);
        json entry{{"name", name}};
        if (fit.coefficients[j] == 0.0) {
            entry["coefficient"] = "lasso_reduced";
            entry["pvalue"] = nullptr;
        } else {
            entry["coefficient"] = fit.coefficients[j];
            entry["odds_factor"] = std::exp(fit.coefficients[j]);
            if (fit.refit_available) {
                entry["refit_coefficient"] = fit.refit_coefficients[j];
                entry["standard_error"] = fit.standard_errors[j];
                entry["pvalue"] = fit.pvalues[j];
            } else {
                entry["pvalue"] = nullptr;
            }
        }
        cols.push_back(entry);
    }
    json j{{"lambda", fit.lambda},
           {"intercept", fit.intercept},
           {"active_count", fit.active_set.size()},
           {"columns", cols},
           {"pvalue_method", "Wald z on unpenalised refit of the active set (post-selection, not selection-adjusted)"}};
    if (fit.refit_available)
        j["intercept_refit"] = {{"coefficient", fit.intercept_refit},
                                {"standard_error", fit.intercept_se},
                                {"pvalue", fit.intercept_pvalue}};
    j["oos_accuracy"] = fit.oos_accuracy ? json(*fit.oos_accuracy) : json(nullptr);
    return j;
}

}  // namespace ibnet::logit
