#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "asyougo/policy_io.hpp"
#include "asyougo/simulator.hpp"

using namespace asyougo;

namespace {

Model coarse(double xr = 0.01, double xo = 1) {
    auto m = default_model();
    m.grid.step_db = 1.0;
    m.dep.xi_r = xr;
    m.dep.xi_o = xo;
    return m;
}

struct Fixture {
    Model m = coarse();
    ShadowingPmf pmf = m.pmf();
    GeoSumPolicy gs = solve_geo_sum(m, pmf);
    GeoMaxPolicy gm = solve_geo_max(m, pmf);
    BtSumPolicy bs = solve_bt_sum(m, pmf);
    BtMaxPolicy bm = solve_bt_max(m, pmf);
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

void check_invariants(const DeploymentTrace& t, const Model& m, bool finite) {
    const int A = m.dep.A, AB = m.dep.A + m.dep.B;
    long prev = 0;
    for (const auto& l : t.links) {
        CHECK(l.rx == prev);
        const long gap = l.tx - l.rx;
        CHECK(gap <= AB);
        if (!l.source) CHECK(gap >= A + 1);
        CHECK(l.gamma == m.dep.powers[l.power_index]);
        CHECK(l.outage == outage_probability(m.channel, static_cast<int>(gap), m.dep.delta_m, l.gamma, l.w));
        if (!l.source) prev = l.tx;
    }
    if (finite) {
        REQUIRE_FALSE(t.links.empty());
        CHECK(t.links.back().source);
        CHECK(t.links.back().tx == t.line_length);
        CHECK(t.source_position == t.line_length);
    }
    const auto tot = compute_totals(t.links, m.dep);
    CHECK(tot.cost_sum == t.totals.cost_sum);
    CHECK(t.totals.cost_sum >= t.totals.cost_max);
}

}  // namespace

TEST_CASE("shadowing draws are keyed, not sequential") {
    const auto& f = fx();
    CHECK(sample_shadowing(f.pmf, 5, 3, 10, 16) == sample_shadowing(f.pmf, 5, 3, 10, 16));
    int differ = 0;
    for (long at = 1; at < 50; ++at)
        differ += sample_shadowing(f.pmf, 5, 3, 0, at) != sample_shadowing(f.pmf, 6, 3, 0, at);
    CHECK(differ > 30);
    // the draw follows the pmf
    double mean_db = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) mean_db += 10 * std::log10(sample_shadowing(f.pmf, 1, k, 0, 7));
    CHECK(std::abs(mean_db / n) < 0.2);
}

TEST_CASE("line lengths") {
    CHECK(sample_line_length(LineModel::fixed(17), 1, 2) == 17);
    CHECK(sample_line_length(LineModel::infinite(100), 1, 2) == -1);
    double mean = 0;
    const int n = 40000;
    for (int k = 0; k < n; ++k) {
        const long L = sample_line_length(LineModel::geometric(0.04), 9, k);
        CHECK(L >= 1);
        mean += static_cast<double>(L);
    }
    CHECK(mean / n == doctest::Approx(25.0).epsilon(0.03));
}

TEST_CASE("reproducible and thread-count independent") {
    const auto& f = fx();
    SimulateOptions o;
    o.seed = 11;
    o.n_runs = 300;
    o.keep_traces = true;
    o.threads = 1;
    const auto a = simulate(AnyPolicy{f.bs}, LineModel::geometric(0.04), f.pmf, o);
    o.threads = 4;
    const auto b = simulate(AnyPolicy{f.bs}, LineModel::geometric(0.04), f.pmf, o);
    CHECK(a.run_costs == b.run_costs);
    CHECK(traces_to_csv(a.traces) == traces_to_csv(b.traces));
    CHECK(a.stats.mean_cost == b.stats.mean_cost);
}

TEST_CASE("trace invariants for every finite-line policy") {
    const auto& f = fx();
    for (const AnyPolicy& p : {AnyPolicy{f.gs}, AnyPolicy{f.gm}, AnyPolicy{f.bs}, AnyPolicy{f.bm}})
        for (std::uint64_t run = 0; run < 60; ++run) {
            const auto t = simulate_run(p, LineModel::geometric(0.04), f.pmf, 3, run);
            check_invariants(t, f.m, true);
        }
}

TEST_CASE("short fixed lines") {
    const auto& f = fx();
    for (const AnyPolicy& p : {AnyPolicy{f.gs}, AnyPolicy{f.bs}}) {
        const auto t = simulate_run(p, LineModel::fixed(1), f.pmf, 1, 0);
        REQUIRE(t.links.size() == 1);
        CHECK(t.links[0].source);
        CHECK(t.totals.relay_count == 0);
    }
    // a window that reaches the source is never used for a relay
    const auto t = simulate_run(AnyPolicy{f.bs}, LineModel::fixed(f.m.dep.A + f.m.dep.B), f.pmf, 1, 0);
    CHECK(t.totals.relay_count == 0);
}

TEST_CASE("geometric relays obey the thresholds") {
    const auto& f = fx();
    for (std::uint64_t run = 0; run < 40; ++run) {
        const auto t = simulate_run(AnyPolicy{f.gs}, LineModel::geometric(0.04), f.pmf, 8, run);
        // every measurement that did not lead to a placement was above threshold
        std::size_t link = 0;
        for (const auto& e : t.measurements) {
            if (e.at == t.line_length) continue;
            const int r = static_cast<int>(e.at - e.from);
            const auto d = decide_geo(f.gs, r, e.w);
            const bool placed = link < t.links.size() && !t.links[link].source && t.links[link].tx == e.at;
            CHECK(d.place == placed);
            if (placed) ++link;
        }
    }
}

TEST_CASE("infinite line needs an average-cost policy") {
    const auto& f = fx();
    CHECK_THROWS_AS(simulate_run(AnyPolicy{f.gs}, LineModel::infinite(1000), f.pmf, 1, 0), std::invalid_argument);
    const AnyPolicy avg = policy_iteration_avg(f.m, f.pmf);
    CHECK_THROWS_AS(simulate_run(avg, LineModel::geometric(0.04), f.pmf, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_run(avg, LineModel::infinite(3), f.pmf, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_run(AnyPolicy{f.gs}, LineModel::fixed(0), f.pmf, 1, 0), std::invalid_argument);
    const auto t = simulate_run(avg, LineModel::infinite(500), f.pmf, 1, 0);
    check_invariants(t, f.m, false);
    CHECK(t.steps_covered <= 500);
    CHECK(t.steps_covered > 500 - f.m.dep.A - f.m.dep.B);
}

TEST_CASE("cost breakdown") {
    const auto& f = fx();
    const auto t = simulate_run(AnyPolicy{f.bs}, LineModel::fixed(60), f.pmf, 2, 0);
    const auto all = cost_breakdown({t});
    const auto relays = cost_breakdown({t}, true);
    CHECK(all.n_links == static_cast<long>(t.links.size()));
    CHECK(relays.n_links == all.n_links - 1);
    double p = 0;
    for (const auto& l : t.links) p += l.gamma;
    CHECK(all.mean_power_per_link == doctest::Approx(p / t.links.size()));
    CHECK(all.mean_cost_sum == t.totals.cost_sum);
    CHECK_THROWS_AS(cost_breakdown({}), std::invalid_argument);
}

TEST_CASE("Monte Carlo agrees with the solvers") {
    const auto& f = fx();
    SimulateOptions o;
    o.seed = 21;
    o.n_runs = 40000;
    const auto line = LineModel::geometric(f.m.dep.theta);
    const auto gs = simulate(AnyPolicy{f.gs}, line, f.pmf, o).stats;
    CHECK(std::abs(gs.mean_cost - f.gs.v_zero) < 4 * gs.cost_std_error);
    const auto gm = simulate(AnyPolicy{f.gm}, line, f.pmf, o).stats;
    CHECK(std::abs(gm.mean_cost - f.gm.v_zero_g[0]) < 4 * gm.cost_std_error);
    const auto bs = simulate(AnyPolicy{f.bs}, line, f.pmf, o).stats;
    CHECK(std::abs(bs.mean_cost - f.bs.j_z[0]) < 4 * bs.cost_std_error);
    const auto bm = simulate(AnyPolicy{f.bm}, line, f.pmf, o).stats;
    CHECK(std::abs(bm.mean_cost - f.bm.j_z_g[0][0]) < 4 * bm.cost_std_error);

    const auto avg = policy_iteration_avg(f.m, f.pmf);
    SimulateOptions oi;
    oi.seed = 5;
    oi.n_runs = 4;
    const auto s = simulate(AnyPolicy{avg}, LineModel::infinite(100000), f.pmf, oi).stats;
    CHECK(std::abs(s.cost_per_step - avg.lambda_star) < 4 * s.cost_per_step_std_error);
}
