#include "balance_sheets.hpp"
#include "debtrank.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace ibnet;

namespace {

ExposureMatrix two_bank() {
    ExposureMatrix w;
    w.bank_ids = {"A", "B"};
    w.w = Matrix::Zero(2, 2);
    w.w(0, 1) = 50;
    return w;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

struct Instance {
    ExposureMatrix w;
    Vector e;
    ShockSpec shock;
    std::vector<double> fractions;
};

Instance random_instance(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Instance in;
    in.w.w = Matrix::Zero(n, n);
    in.e.resize(n);
    for (int i = 0; i < n; ++i) {
        in.w.bank_ids.push_back("b" + std::to_string(i));
        in.e[i] = 10.0 + 90.0 * u(rng);
        for (int j = 0; j < n; ++j)
            if (i != j && u(rng) < 0.7) in.w.w(i, j) = 80.0 * u(rng);
    }
    in.fractions.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double r = u(rng);
        in.fractions[i] = r < 0.3 ? 0.0 : (r < 0.4 ? 1.0 : u(rng));
        if (in.fractions[i] > 0.0) in.shock.targets[in.w.bank_ids[i]] = in.fractions[i];
    }
    return in;
}

}  // namespace

TEST_CASE("init_state builds phi from initial values") {
    const auto s = init_state(two_bank(), vec({100, 100}));
    CHECK(s.phi(0, 1) == 0.5);
    CHECK(s.phi(0, 0) == 0.0);
    CHECK(s.phi(1, 0) == 0.0);
    CHECK(s.e_prev == s.e_curr);

    ExposureMatrix zero;
    zero.w = Matrix::Zero(3, 3);
    CHECK(init_state(zero, vec({1, 2, 3})).phi.isZero(0.0));

    try {
        init_state(two_bank(), vec({100, 0}));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::domain);
        CHECK(std::string(e.what()).find("B") != std::string::npos);
    }
}

TEST_CASE("apply_shock examples") {
    const auto s0 = init_state(two_bank(), vec({100, 100}));
    ShockSpec half;
    half.targets["B"] = 0.5;
    const auto s = apply_shock(s0, half);
    CHECK(s.e_curr[1] == 50.0);
    CHECK(s.e_prev[1] == 100.0);

    ShockSpec all;
    all.targets["A"] = 1.0;
    const auto k = apply_shock(init_state(two_bank(), vec({100, 100})), all);
    CHECK(k.e_curr[0] == 0.0);
    CHECK(k.insolvent[0]);
    CHECK(k.phi.col(0).isZero(0.0));

    const auto same = apply_shock(s0, ShockSpec{});
    CHECK(same.e_curr == s0.e_curr);

    ShockSpec unknown;
    unknown.targets["Z"] = 0.1;
    try {
        apply_shock(s0, unknown);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::lookup);
    }

    ShockSpec absolute;
    absolute.mode = ShockSpec::Mode::absolute;
    absolute.targets["A"] = 250.0;
    CHECK(apply_shock(s0, absolute).e_curr[0] == 0.0);
}

TEST_CASE("worked two-bank chain") {
    ShockSpec half;
    half.targets["B"] = 0.5;
    PropagateOptions o;
    o.keep_trajectory = true;
    const auto run = propagate(apply_shock(init_state(two_bank(), vec({100, 100})), half), o);
    CHECK(run.converged);
    CHECK(run.e_final[0] == 75.0);
    CHECK(run.e_final[1] == 50.0);
    CHECK(run.proxy == std::vector<double>{-25.0, 0.0});
    CHECK(run.trajectory[1][0] == 75.0);
}

TEST_CASE("beta zero and no shock leave equity untouched") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        auto in = random_instance(rng, 4);
        PropagateOptions o;
        o.beta = 0.0;
        const auto run = propagate(apply_shock(init_state(in.w, in.e), in.shock), o);
        CHECK(run.e_final == run.e_post_shock);
        for (double p : run.proxy) CHECK(p == 0.0);

        const auto idle = propagate(apply_shock(init_state(in.w, in.e), ShockSpec{}));
        CHECK(idle.periods == 1);
        for (double p : idle.proxy) CHECK(p == 0.0);
    }
}

TEST_CASE("contagion_proxy examples") {
    CHECK(contagion_proxy(vec({100}), vec({75})).proxy[0] == -25.0);
    CHECK(contagion_proxy(vec({40}), vec({40})).proxy[0] == 0.0);
    const auto dead = contagion_proxy(vec({0}), vec({0}));
    CHECK(dead.proxy[0] == 0.0);
    CHECK(dead.initially_defaulted[0]);
}

TEST_CASE("oracle: engine equals the literal update rule period by period") {
    std::mt19937_64 rng(101);
    for (int t = 0; t < 60; ++t) {
        const int n = 2 + t % 4;
        auto in = random_instance(rng, n);
        const double beta = t % 2 ? 1.0 : 0.5;
        PropagateOptions o;
        o.beta = beta;
        o.keep_trajectory = true;
        const auto run = propagate(apply_shock(init_state(in.w, in.e), in.shock), o);
        std::vector<double> e0(in.e.data(), in.e.data() + n);
        const auto ref = oracle::debtrank_literal(oracle::to_grid(in.w.w), e0, in.fractions, beta, 1e-6, 10000);
        REQUIRE(ref.periods.size() == run.trajectory.size());
        for (std::size_t p = 0; p < ref.periods.size(); ++p)
            for (int i = 0; i < n; ++i) CHECK(std::abs(ref.periods[p][i] - run.trajectory[p][i]) <= 1e-12);
    }
}

TEST_CASE("property: monotone, clamped, bounded proxy, frozen phi") {
    std::mt19937_64 rng(202);
    for (int t = 0; t < 50; ++t) {
        auto in = random_instance(rng, 3 + t % 8);
        PropagateOptions o;
        o.keep_trajectory = true;
        const auto shocked = apply_shock(init_state(in.w, in.e), in.shock);
        const auto run = propagate(shocked, o);
        for (std::size_t p = 1; p < run.trajectory.size(); ++p) {
            CHECK((run.trajectory[p].array() <= run.trajectory[p - 1].array()).all());
            CHECK(run.trajectory[p].minCoeff() >= 0.0);
        }
        for (double v : run.proxy) {
            CHECK(v <= 0.0);
            CHECK(v >= -100.0);
        }
        CHECK((run.e_final.array() <= run.e_post_shock.array()).all());
        for (Index j = 0; j < in.e.size(); ++j)
            if (run.e_final[j] > 0.0)
                for (Index i = 0; i < in.e.size(); ++i) CHECK(shocked.phi(i, j) == in.w.w(i, j) / in.e[j]);
        CHECK(run.converged);
    }
}

TEST_CASE("property: larger beta never leaves more equity") {
    std::mt19937_64 rng(303);
    for (int t = 0; t < 50; ++t) {
        auto in = random_instance(rng, 2 + t % 6);
        const auto s = apply_shock(init_state(in.w, in.e), in.shock);
        Vector prev;
        for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            PropagateOptions o;
            o.beta = beta;
            const auto run = propagate(s, o);
            if (prev.size()) CHECK((run.e_final.array() <= prev.array() + 1e-9).all());
            prev = run.e_final;
        }
    }
}

TEST_CASE("domain checks on beta and alpha") {
    const auto s = init_state(two_bank(), vec({100, 100}));
    PropagateOptions bad_beta;
    bad_beta.beta = -1;
    CHECK_THROWS_AS(propagate(s, bad_beta), Error);
    PropagateOptions bad_alpha;
    bad_alpha.alpha = 0;
    CHECK_THROWS_AS(propagate(s, bad_alpha), Error);
}

TEST_CASE("quarterly_proxies composes the pipeline on a panel") {
    const std::string header =
        "bank_id,quarter,total_assets,total_liabilities,interbank_assets,interbank_liabilities,roa,roe,stpd_ratio,"
        "tier1_ratio,tier1_leverage_ratio\n";
    // A lent 50 to B; each bank has equity 100.
    const auto panel = parse_panel(header + "A,2009Q1,200,100,50,0,0,0,0,0.1,0.1\nB,2009Q1,200,100,0,50,0,0,0,0.1,0.1\n");
    QuarterSimulationOptions o;
    o.scenario.targets["B"] = 0.5;
    const auto q = quarterly_proxies(panel, o);
    CHECK(q.as_map().at("A") == -25.0);
    CHECK(q.as_map().at("B") == 0.0);

    o.propagate.beta = 0.0;
    for (double p : quarterly_proxies(panel, o).proxy) CHECK(p == 0.0);

    const auto single = parse_panel(header + "A,2009Q1,200,100,0,0,0,0,0,0.1,0.1\n");
    QuarterSimulationOptions u;
    u.uniform_shock = 0.1;
    CHECK(quarterly_proxies(single, u).proxy == std::vector<double>{0.0});

    const auto path = std::filesystem::temp_directory_path() / "ibnet_proxies.csv";
    write_proxies(path, q);
    CHECK(read_proxies(path) == q.as_map());
}

TEST_CASE("a bank wiped out by the shock passes its whole loss on once") {
    ShockSpec all;
    all.targets["B"] = 1.0;
    const auto shocked = apply_shock(init_state(two_bank(), vec({100, 100})), all);
    CHECK(shocked.phi.col(1).isZero(0.0));
    const auto run = propagate(shocked);
    CHECK(run.e_final[0] == 50.0);
    CHECK(run.proxy[0] == -50.0);
    CHECK(run.initially_defaulted[1]);
}

TEST_CASE("cascade: the drop to zero is transmitted one period later") {
    // B lent 200 to A, C lent 80 to B; A loses 60% of its equity
    ExposureMatrix w;
    w.bank_ids = {"A", "B", "C"};
    w.w = Matrix::Zero(3, 3);
    w.w(1, 0) = 200;
    w.w(2, 1) = 80;
    ShockSpec s;
    s.targets["A"] = 0.6;
    PropagateOptions o;
    o.keep_trajectory = true;
    const auto run = propagate(apply_shock(init_state(w, vec({100, 100, 100})), s), o);
    CHECK(run.trajectory[1][1] == 0.0);    // 100 - 2 * 60 clamps at zero
    CHECK(run.trajectory[1][2] == 100.0);  // nothing has reached C yet
    CHECK(run.e_final[2] == 20.0);         // 100 - 0.8 * 100
    CHECK(run.cascade_defaulted[1]);
    CHECK(run.proxy[2] == -80.0);
}
