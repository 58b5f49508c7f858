#include "synthetic.hpp"

#include "csv.hpp"
#include "debtrank.hpp"

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ibnet {

namespace {

std::string quarter_tag(int index) {
    const int year = 2009 + index / 4;
    return fmt::format("{}Q{}", year, index % 4 + 1);
}

// Rank-based normal scores: monotone, robust to the heavy tail of contagion losses.
std::vector<double> normal_scores(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    boost::math::normal_distribution<double> std_normal;
    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + j);
        const double score = boost::math::quantile(std_normal, (mid_rank + 0.5) / static_cast<double>(n));
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = score;
        i = j + 1;
    }
    return out;
}

std::vector<double> standardize(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / n);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd > 0.0 ? (v[i] - mean) / sd : 0.0;
    return out;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double calibrate_intercept(const std::vector<double>& score, double rate) {
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double mean = 0.0;
        for (double s : score) mean += logistic(mid + s);
        mean /= static_cast<double>(score.size());
        (mean < rate ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_banks < 10) throw Error(ErrorCode::usage, "synthetic universe needs at least 10 banks");
    if (spec.quarters < 1) throw Error(ErrorCode::usage, "need at least one quarter");
    if (!(spec.default_rate >= 0.0 && spec.default_rate < 1.0))
        throw Error(ErrorCode::usage, "default_rate must be in [0, 1)");

    const int n = spec.n_banks;
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<std::string> ids(n);
    const int width = static_cast<int>(std::to_string(n).size());
    for (int i = 0; i < n; ++i) ids[i] = fmt::format("B{:0{}}", i + 1, width);

    // hidden lending network, Erdos-Renyi with log-normal loan sizes
    const double p_edge = std::min(1.0, spec.mean_degree / static_cast<double>(n - 1));
    Matrix hidden = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && unif(rng) < p_edge) hidden(i, j) = std::exp(std::log(1000.0) + 1.0 * normal(rng));

    // persistent bank characteristics
    std::vector<double> ext_assets(n), cap_ratio(n), roa(n), roe(n), stpd(n), t1(n), t1lev(n);
    for (int i = 0; i < n; ++i) {
        ext_assets[i] = std::exp(std::log(150000.0) + 0.8 * normal(rng));
        cap_ratio[i] = 0.05 + 0.10 * unif(rng);
        roa[i] = 0.006 + 0.008 * normal(rng);
        roe[i] = 0.06 + 0.08 * normal(rng);
        stpd[i] = std::exp(std::log(0.015) + 0.6 * normal(rng));
        t1[i] = std::max(0.02, 0.14 + 0.035 * normal(rng));
        t1lev[i] = std::max(0.02, 0.10 + 0.025 * normal(rng));
    }

    SyntheticData data;
    std::vector<double> mean_true_proxy(n, 0.0), mean_roe(n, 0.0), mean_lev(n, 0.0);
    nlohmann::json truth_quarters = nlohmann::json::array();
    for (int q = 0; q < spec.quarters; ++q) {
        QuarterlyPanel panel;
        panel.quarter = quarter_tag(q);
        ExposureMatrix w;
        w.bank_ids = ids;
        w.w = hidden;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (w.w(i, j) > 0.0) w.w(i, j) *= std::exp(0.1 * normal(rng));

        Vector equity(n);
        for (int i = 0; i < n; ++i) {
            BankRecord r;
            r.bank_id = ids[i];
            r.quarter = panel.quarter;
            r.interbank_assets = w.w.row(i).sum();
            r.interbank_liabilities = w.w.col(i).sum();
            const double k = std::clamp(cap_ratio[i] + 0.004 * normal(rng), 0.02, 0.3);
            const double ext = ext_assets[i] * std::exp(0.05 * normal(rng));
            r.total_assets = std::max(r.interbank_assets + ext, 1.01 * r.interbank_liabilities / (1.0 - k));
            const double eq = k * r.total_assets;
            r.total_liabilities = r.total_assets - eq;
            equity[i] = eq;
            r.roa = roa[i] + 0.003 * normal(rng);
            r.roe = roe[i] + 0.06 * normal(rng);
            r.short_term_past_due_ratio = stpd[i] * std::exp(0.2 * normal(rng));
            r.tier1_capital_ratio = std::max(0.01, t1[i] + 0.008 * normal(rng));
            r.tier1_leverage_ratio = std::max(0.01, t1lev[i] + 0.005 * normal(rng));
            mean_roe[i] += r.roe / spec.quarters;
            mean_lev[i] += r.tier1_leverage_ratio / spec.quarters;
            panel.records.push_back(std::move(r));
        }
        PropagateOptions prop;
        const auto run = propagate(apply_shock(init_state(w, equity), ShockSpec::uniform(ids, spec.shock_fraction)), prop);
        for (int i = 0; i < n; ++i) mean_true_proxy[i] += run.proxy[i] / spec.quarters;
        truth_quarters.push_back({{"quarter", panel.quarter},
                                  {"periods", run.periods},
                                  {"cascade_defaults", run.defaults_cascaded},
                                  {"true_proxy", run.proxy}});
        data.quarters.push_back(std::move(panel));
    }

    // default mechanism: weak capital, weak earnings and contagion losses raise the odds
    std::vector<double> neg_lev(n), neg_roe(n), exposure(n);
    for (int i = 0; i < n; ++i) {
        neg_lev[i] = -mean_lev[i];
        neg_roe[i] = -mean_roe[i];
        exposure[i] = -mean_true_proxy[i];
    }
    const auto z_lev = standardize(neg_lev);
    const auto z_roe = standardize(neg_roe);
    const auto z_exp = normal_scores(exposure);
    constexpr double kLeverageLoading = 1.5;
    constexpr double kRoeLoading = 1.0;
    std::vector<double> score(n);
    for (int i = 0; i < n; ++i)
        score[i] = kLeverageLoading * z_lev[i] + kRoeLoading * z_roe[i] + spec.contagion_signal_strength * z_exp[i];

    double intercept = -std::numeric_limits<double>::infinity();
    std::vector<double> prob(n, 0.0);
    if (spec.default_rate > 0.0) {
        intercept = calibrate_intercept(score, spec.default_rate);
        for (int i = 0; i < n; ++i) prob[i] = logistic(intercept + score[i]);
    }
    std::vector<std::string> failed;
    for (int i = 0; i < n; ++i) {
        const double u = unif(rng);
        if (u < prob[i]) {
            failed.push_back(ids[i]);
            const int day = static_cast<int>(unif(rng) * 90.0);
            const int month = 1 + std::min(2, day / 30);
            data.failure_dates.push_back(fmt::format("2010-{:02}-{:02}", month, day % 30 + 1));
        }
    }
    data.failed_ids = failed;
    data.labels = derive_labels(ids, failed, quarter_tag(spec.quarters));

    data.ground_truth = {
        {"spec",
         {{"n_banks", spec.n_banks},
          {"quarters", spec.quarters},
          {"default_rate", spec.default_rate},
          {"contagion_signal_strength", spec.contagion_signal_strength},
          {"rng_seed", spec.rng_seed},
          {"shock_fraction", spec.shock_fraction},
          {"mean_degree", spec.mean_degree}}},
        {"loadings",
         {{"tier1_leverage_ratio", -kLeverageLoading},
          {"roe", -kRoeLoading},
          {"contagion_exposure", spec.contagion_signal_strength}}},
        {"intercept", spec.default_rate > 0.0 ? nlohmann::json(intercept) : nlohmann::json(nullptr)},
        {"hidden_edges", (hidden.array() > 0.0).count()},
        {"bank_ids", ids},
        {"mean_true_proxy", mean_true_proxy},
        {"default_probability", prob},
        {"failed", failed},
        {"quarters", truth_quarters},
    };
    return data;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    std::filesystem::create_directories(dir);
    for (const auto& q : data.quarters) write_panel(dir / (q.quarter + ".csv"), q);
    std::string failed = "bank_id,failure_date\n";
    for (std::size_t i = 0; i < data.failed_ids.size(); ++i)
        failed += csv::join_line({data.failed_ids[i], data.failure_dates[i]}) + "\n";
    csv::write_file(dir / "failed.csv", failed);
    csv::write_file(dir / "truth.json", data.ground_truth.dump(2) + "\n");
}

}  // namespace ibnet
