#pragma once

#include "balance_sheets.hpp"
#include "common.hpp"
#include "network_reconstruction.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ibnet {

struct ShockSpec {
    enum class Mode { equity_fraction, absolute };

    Mode mode = Mode::equity_fraction;
    std::map<std::string, double> targets;

    // Same fractional shock for every bank in `bank_ids`.
    static ShockSpec uniform(const std::vector<std::string>& bank_ids, double fraction);
};

/// Mutable simulation state. phi(i, j) = W0(i, j) / E0(j) is fixed at
/// construction; only the insolvency rule ever changes it, by zeroing the
/// column of a bank whose equity has reached zero. The drop that takes a bank
/// to zero is still passed on in the following period, weighted by
/// phi_initial; afterwards its equity cannot change.
struct NetworkState {
    std::vector<std::string> bank_ids;
    Matrix phi;
    Matrix phi_initial;
    Vector e0;
    Vector e_prev;
    Vector e_curr;
    std::vector<bool> insolvent;
    bool shocked = false;

    Index n() const { return e0.size(); }
    void mark_insolvent(Index bank);
};

struct ContagionRun {
    double beta = 1.0;
    double alpha = 1e-6;
    std::vector<Vector> trajectory;  // e_post_shock, then one entry per period
    Vector e_post_shock;
    Vector e_final;
    std::vector<double> proxy;
    std::vector<bool> initially_defaulted;
    std::vector<bool> cascade_defaulted;
    int periods = 0;
    int defaults_cascaded = 0;
    bool converged = false;
};

struct PropagateOptions {
    double beta = 1.0;
    double alpha = 1e-6;
    int max_periods = 10000;
    bool keep_trajectory = false;
};

NetworkState init_state(const ExposureMatrix& w, const Vector& equity);

NetworkState apply_shock(NetworkState state, const ShockSpec& shock);

/// Runs E(t+1) = max(0, E(t) + beta * phi * (E(t) - E(t-1))) until the
/// largest relative equity change drops below alpha.
ContagionRun propagate(NetworkState state, const PropagateOptions& options = {});

struct ProxyResult {
    std::vector<double> proxy;
    std::vector<bool> initially_defaulted;
};

/// Percentage equity change from the post-shock to the final state. Banks
/// wiped out by the shock itself get 0 and the initially_defaulted marker.
ProxyResult contagion_proxy(const Vector& e_post_shock, const Vector& e_final);
ProxyResult contagion_proxy(const ContagionRun& run);

struct QuarterProxies {
    std::string quarter;
    std::vector<std::string> bank_ids;
    std::vector<double> proxy;
    std::vector<bool> initially_defaulted;
    std::vector<bool> cascade_defaulted;
    std::vector<std::string> excluded;  // equity <= 0 at the start
    double closure_factor = 1.0;
    RasReport ras;
    ContagionRun run;

    std::map<std::string, double> as_map() const;
};

struct QuarterSimulationOptions {
    RasOptions ras;
    PropagateOptions propagate;
    std::optional<double> uniform_shock;  // overrides the explicit scenario when set
    ShockSpec scenario;
};

QuarterProxies quarterly_proxies(const QuarterlyPanel& panel, const QuarterSimulationOptions& options);

void write_proxies(const std::filesystem::path& path, const QuarterProxies& q);
std::map<std::string, double> read_proxies(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const QuarterProxies& q);

}  // namespace ibnet
