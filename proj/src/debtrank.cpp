#include "debtrank.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>

namespace ibnet {

namespace {
constexpr double kEquityEps = 1e-12;
}

ShockSpec ShockSpec::uniform(const std::vector<std::string>& bank_ids, double fraction) {
    ShockSpec s;
    s.mode = Mode::equity_fraction;
    for (const auto& id : bank_ids) s.targets[id] = fraction;
    return s;
}

void NetworkState::mark_insolvent(Index bank) {
    insolvent[bank] = true;
    phi.col(bank).setZero();
}

NetworkState init_state(const ExposureMatrix& w, const Vector& equity) {
    const Index n = w.n();
    if (w.w.cols() != n || equity.size() != n)
        throw Error(ErrorCode::dimension, "exposure matrix is " + std::to_string(w.w.rows()) + "x" +
                                              std::to_string(w.w.cols()) + " but equity has " +
                                              std::to_string(equity.size()) + " entries");
    for (Index j = 0; j < n; ++j) {
        if (!(equity[j] > 0.0)) {
            const std::string who = j < static_cast<Index>(w.bank_ids.size()) ? w.bank_ids[j]
                                                                                 : "#" + std::to_string(j);
            throw Error(ErrorCode::domain, "bank " + who + " has non-positive starting equity " +
                                               format_double(equity[j]));
        }
    }
    NetworkState s;
    s.bank_ids = w.bank_ids;
    if (s.bank_ids.empty())
        for (Index i = 0; i < n; ++i) s.bank_ids.push_back(std::to_string(i));
    s.phi.resize(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) s.phi(i, j) = w.w(i, j) / equity[j];
    s.phi_initial = s.phi;
    s.e0 = equity;
    s.e_prev = equity;
    s.e_curr = equity;
    s.insolvent.assign(n, false);
    return s;
}

NetworkState apply_shock(NetworkState state, const ShockSpec& shock) {
    if (state.shocked) throw Error(ErrorCode::usage, "state has already been shocked");
    if (shock.targets.empty()) return state;

    for (const auto& [id, size] : shock.targets) {
        auto it = std::find(state.bank_ids.begin(), state.bank_ids.end(), id);
        if (it == state.bank_ids.end()) throw Error(ErrorCode::lookup, "shock targets unknown bank '" + id + "'");
        const Index b = it - state.bank_ids.begin();
        double loss = 0.0;
        if (shock.mode == ShockSpec::Mode::equity_fraction) {
            if (!(size >= 0.0 && size <= 1.0))
                throw Error(ErrorCode::domain, "shock fraction for '" + id + "' outside [0, 1]");
            loss = size * state.e0[b];
        } else {
            if (!(size >= 0.0)) throw Error(ErrorCode::domain, "negative absolute shock for '" + id + "'");
            loss = size;
        }
        state.e_curr[b] = std::max(0.0, state.e_curr[b] - loss);
    }
    for (Index b = 0; b < state.n(); ++b)
        if (state.e_curr[b] == 0.0 && !state.insolvent[b]) state.mark_insolvent(b);
    state.shocked = true;
    return state;
}

ContagionRun propagate(NetworkState state, const PropagateOptions& options) {
    if (!(options.beta >= 0.0)) throw Error(ErrorCode::domain, "beta must be non-negative");
    if (!(options.alpha > 0.0)) throw Error(ErrorCode::domain, "alpha must be positive");

    const Index n = state.n();
    ContagionRun run;
    run.beta = options.beta;
    run.alpha = options.alpha;
    run.e_post_shock = state.e_curr;
    if (options.keep_trajectory) run.trajectory.push_back(state.e_curr);

    Vector delta(n);
    Vector next(n);
    while (run.periods < options.max_periods) {
        delta = state.e_curr - state.e_prev;
        // banks that hit zero during the last step still transmit that step
        std::vector<Index> just_failed;
        for (Index j = 0; j < n; ++j)
            if (state.insolvent[j] && state.e_prev[j] > 0.0 && delta[j] != 0.0) just_failed.push_back(j);
        double max_change = 0.0;
        for (Index i = 0; i < n; ++i) {
            double acc = 0.0;
            for (Index j = 0; j < n; ++j) acc += state.phi(i, j) * delta[j];
            for (Index j : just_failed) acc += state.phi_initial(i, j) * delta[j];
            next[i] = std::max(0.0, state.e_curr[i] + options.beta * acc);
            max_change =
                std::max(max_change, std::abs(next[i] - state.e_curr[i]) / std::max(state.e_curr[i], kEquityEps));
        }
        for (Index i = 0; i < n; ++i)
            if (next[i] == 0.0 && !state.insolvent[i]) state.mark_insolvent(i);
        state.e_prev = state.e_curr;
        state.e_curr = next;
        ++run.periods;
        if (options.keep_trajectory) run.trajectory.push_back(state.e_curr);
        if (max_change < options.alpha) {
            run.converged = true;
            break;
        }
    }

    run.e_final = state.e_curr;
    auto proxy = contagion_proxy(run.e_post_shock, run.e_final);
    run.proxy = std::move(proxy.proxy);
    run.initially_defaulted = std::move(proxy.initially_defaulted);
    run.cascade_defaulted.assign(n, false);
    for (Index i = 0; i < n; ++i) {
        if (run.e_post_shock[i] > 0.0 && run.e_final[i] == 0.0) {
            run.cascade_defaulted[i] = true;
            ++run.defaults_cascaded;
        }
    }
    return run;
}

ProxyResult contagion_proxy(const Vector& e_post_shock, const Vector& e_final) {
    if (e_post_shock.size() != e_final.size()) throw Error(ErrorCode::dimension, "equity vectors differ in length");
    ProxyResult out;
    out.proxy.assign(e_final.size(), 0.0);
    out.initially_defaulted.assign(e_final.size(), false);
    for (Index i = 0; i < e_final.size(); ++i) {
        if (e_post_shock[i] > 0.0) {
            out.proxy[i] = (e_final[i] - e_post_shock[i]) / e_post_shock[i] * 100.0;
        } else {
            out.initially_defaulted[i] = true;
        }
    }
    return out;
}

ProxyResult contagion_proxy(const ContagionRun& run) { return contagion_proxy(run.e_post_shock, run.e_final); }

std::map<std::string, double> QuarterProxies::as_map() const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < bank_ids.size(); ++i) out[bank_ids[i]] = proxy[i];
    return out;
}

QuarterProxies quarterly_proxies(const QuarterlyPanel& panel, const QuarterSimulationOptions& options) {
    QuarterProxies q;
    q.quarter = panel.quarter;
    const QuarterlyPanel solvent = close_system(solvent_subset(panel, &q.excluded));
    q.closure_factor = solvent.closure_factor;
    q.bank_ids = solvent.bank_ids();
    const auto n = static_cast<Index>(solvent.size());

    Vector equity(n);
    std::vector<double> ia(n), il(n);
    for (Index i = 0; i < n; ++i) {
        const auto& r = solvent.records[i];
        equity[i] = r.equity();
        ia[i] = r.interbank_assets;
        il[i] = r.interbank_liabilities;
    }

    if (n < 2) {
        q.proxy.assign(n, 0.0);
        q.initially_defaulted.assign(n, false);
        q.cascade_defaulted.assign(n, false);
        q.ras.converged = true;
        return q;
    }

    auto [w, report] = reconstruct(ia, il, options.ras);
    w.bank_ids = q.bank_ids;
    q.ras = report;

    const ShockSpec shock =
        options.uniform_shock ? ShockSpec::uniform(q.bank_ids, *options.uniform_shock) : options.scenario;
    q.run = propagate(apply_shock(init_state(w, equity), shock), options.propagate);
    q.proxy = q.run.proxy;
    q.initially_defaulted = q.run.initially_defaulted;
    q.cascade_defaulted = q.run.cascade_defaulted;
    return q;
}

void write_proxies(const std::filesystem::path& path, const QuarterProxies& q) {
    std::string out = "bank_id,proxy_pct,initially_defaulted,cascade_defaulted\n";
    for (std::size_t i = 0; i < q.bank_ids.size(); ++i) {
        out += csv::join_line({q.bank_ids[i], format_double(q.proxy[i]), q.initially_defaulted[i] ? "1" : "0",
                               q.cascade_defaulted[i] ? "1" : "0"});
        out += "\n";
    }
    csv::write_file(path, out);
}

std::map<std::string, double> read_proxies(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto id = table.require_column("bank_id");
    const auto val = table.require_column("proxy_pct");
    std::map<std::string, double> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        out[row.at(id)] = csv::parse_number(row.at(val), table.line_numbers[r], "proxy_pct");
    }
    return out;
}

void write_trajectory(const std::filesystem::path& path, const QuarterProxies& q) {
    std::string out = "period,bank_id,equity\n";
    for (std::size_t t = 0; t < q.run.trajectory.size(); ++t)
        for (std::size_t i = 0; i < q.bank_ids.size(); ++i)
            out += std::to_string(t) + "," + csv::join_line({q.bank_ids[i]}) + "," +
                   format_double(q.run.trajectory[t][static_cast<Index>(i)]) + "\n";
    csv::write_file(path, out);
}

}  // namespace ibnet
