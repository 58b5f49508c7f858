// Independent reference implementations used by the unit and acceptance tests.
// Plain loops over std::vector so they share no code path with the engine.
#pragma once

#include "common.hpp"
#include "mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const ibnet::Matrix& m) {
    Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (ibnet::Index i = 0; i < m.rows(); ++i)
        for (ibnet::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
    return g;
}

// ---- DebtRank ---------------------------------------------------------------

struct DebtRankTrace {
    std::vector<std::vector<double>> periods;  // post-shock state first
};

// Re-evaluates E_i(t+1) = max(0, E_i(t) + sum_j phi_ij * beta * (E_j(t) - E_j(t-1)))
// where phi_ij = W0_ij / E0_j, or 0 when borrower j already had zero equity at t-1.
inline DebtRankTrace debtrank_literal(const Grid& w0, const std::vector<double>& e0,
                                      const std::vector<double>& shock_fraction, double beta, double alpha,
                                      int max_periods) {
    const std::size_t n = e0.size();
    std::vector<double> prev = e0;
    std::vector<double> cur(n);
    for (std::size_t i = 0; i < n; ++i) cur[i] = std::max(0.0, e0[i] - shock_fraction[i] * e0[i]);
    DebtRankTrace trace;
    trace.periods.push_back(cur);
    for (int t = 0; t < max_periods; ++t) {
        std::vector<double> next(n);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double phi = prev[j] == 0.0 ? 0.0 : w0[i][j] / e0[j];
                sum += phi * beta * (cur[j] - prev[j]);
            }
            next[i] = std::max(0.0, cur[i] + sum);
            worst = std::max(worst, std::fabs(next[i] - cur[i]) / std::max(cur[i], 1e-12));
        }
        prev = cur;
        cur = next;
        trace.periods.push_back(cur);
        if (worst < alpha) break;
    }
    return trace;
}

// ---- MLP ----------------------------------------------------------------------

struct Forward {
    std::vector<std::vector<double>> z;  // pre-activations per layer (hidden 1..3, output)
    double output = 0.0;
};

inline Forward forward(const ibnet::mlp::MlpModel& m, const std::vector<double>& x) {
    Forward f;
    std::vector<double> a = x;
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        const auto& L = m.layers[k];
        std::vector<double> z(static_cast<std::size_t>(L.w.cols()));
        for (ibnet::Index o = 0; o < L.w.cols(); ++o) {
            double s = L.b[o];
            for (ibnet::Index i = 0; i < L.w.rows(); ++i) s += a[i] * L.w(i, o);
            z[o] = s;
        }
        f.z.push_back(z);
        if (k + 1 < m.layers.size()) {
            for (auto& v : z) v = std::max(0.0, v);
            a = z;
        } else {
            f.output = 1.0 / (1.0 + std::exp(-z[0]));
        }
    }
    return f;
}

// The nested-loop path sum: every route input -> h1 -> h2 -> h3 -> output
// contributes the product of its weights and activation slopes.
inline std::vector<double> path_sum_gradient(const ibnet::mlp::MlpModel& m, const std::vector<double>& x) {
    const Forward f = forward(m, x);
    const auto& W0 = m.layers[0].w;
    const auto& W1 = m.layers[1].w;
    const auto& W2 = m.layers[2].w;
    const auto& W3 = m.layers[3].w;
    auto relu_slope = [](double z) { return z > 0.0 ? 1.0 : 0.0; };
    const double zo = f.z[3][0];
    const double out_slope = std::exp(zo) / ((1.0 + std::exp(zo)) * (1.0 + std::exp(zo)));
    std::vector<double> g(static_cast<std::size_t>(W0.rows()), 0.0);
    for (ibnet::Index in = 0; in < W0.rows(); ++in) {
        double total = 0.0;
        for (ibnet::Index a = 0; a < W0.cols(); ++a)
            for (ibnet::Index b = 0; b < W1.cols(); ++b)
                for (ibnet::Index c = 0; c < W2.cols(); ++c)
                    total += W0(in, a) * relu_slope(f.z[0][a]) * W1(a, b) * relu_slope(f.z[1][b]) * W2(b, c) *
                             relu_slope(f.z[2][c]) * W3(c, 0);
        g[in] = out_slope * total;
    }
    return g;
}

inline double min_abs_preactivation(const ibnet::mlp::MlpModel& m, const std::vector<double>& x) {
    const Forward f = forward(m, x);
    double lo = INFINITY;
    for (const auto& layer : f.z)
        for (double v : layer) lo = std::min(lo, std::fabs(v));
    return lo;
}

// ---- logistic MLE -------------------------------------------------------------

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Grid a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

// Unpenalised logistic MLE; result[0] is the intercept.
inline std::vector<double> newton_logistic(const Grid& x, const std::vector<double>& y, int iterations = 100) {
    const std::size_t n = x.size();
    const std::size_t p = x.empty() ? 0 : x[0].size();
    std::vector<double> beta(p + 1, 0.0);
    for (int it = 0; it < iterations; ++it) {
        Grid h(p + 1, std::vector<double>(p + 1, 0.0));
        std::vector<double> g(p + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row(p + 1, 1.0);
            for (std::size_t j = 0; j < p; ++j) row[j + 1] = x[i][j];
            double eta = 0.0;
            for (std::size_t j = 0; j <= p; ++j) eta += row[j] * beta[j];
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            for (std::size_t j = 0; j <= p; ++j) {
                g[j] += row[j] * (y[i] - mu);
                for (std::size_t k = 0; k <= p; ++k) h[j][k] += row[j] * row[k] * mu * (1.0 - mu);
            }
        }
        const auto step = solve(h, g);
        double biggest = 0.0;
        for (std::size_t j = 0; j <= p; ++j) {
            beta[j] += step[j];
            biggest = std::max(biggest, std::fabs(step[j]));
        }
        if (biggest < 1e-14) break;
    }
    return beta;
}

}  // namespace oracle
