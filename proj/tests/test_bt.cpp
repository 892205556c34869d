#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "asyougo/bt_solvers.hpp"
#include "asyougo/geo_solvers.hpp"
#include "asyougo/policy_io.hpp"
#include "oracles.hpp"

using namespace asyougo;

namespace {
Model coarse() {
    auto m = default_model();
    m.grid.step_db = 0.5;
    return m;
}
}  // namespace

TEST_CASE("expected minimum of independent distributions") {
    const DiscreteDist d{{3, 1, 2}, {0.2, 0.5, 0.3}};
    CHECK(expected_min_independent(std::vector{d}) == doctest::Approx(0.6 + 0.5 + 0.6).epsilon(1e-14));
    const DiscreteDist coin{{0, 1}, {0.5, 0.5}};
    CHECK(expected_min_independent(std::vector{coin, coin}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS(expected_min_independent(std::vector<DiscreteDist>{}));
    CHECK_THROWS(expected_min_independent(std::vector{DiscreteDist{{1}, {0.9}}}));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0, 1);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<DiscreteDist> ds(3);
        for (auto& x : ds) {
            double t = 0;
            for (int k = 0; k < 5; ++k) {
                x.values.push_back(std::floor(U(rng) * 6));  // ties on purpose
                x.probs.push_back(U(rng));
                t += x.probs.back();
            }
            for (auto& p : x.probs) p /= t;
        }
        double brute = 0;
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b)
                for (int c = 0; c < 5; ++c)
                    brute += ds[0].probs[a] * ds[1].probs[b] * ds[2].probs[c] *
                             std::min({ds[0].values[a], ds[1].values[b], ds[2].values[c]});
        CHECK(std::abs(expected_min_independent(ds) - brute) < 1e-13);
    }
}

TEST_CASE("factored solver matches window enumeration") {
    SolveOptions o;
    o.tol = 1e-13;
    for (std::uint64_t s = 11; s <= 16; ++s) {
        const auto in = oracle::random_instance(s);
        const auto full = oracle::bt_sum_full(in);
        const auto p = solve_bt_sum(in.model, in.pmf, o);
        for (std::size_t z = 0; z < full.size(); ++z) CHECK(std::abs(p.j_z[z] - full[z]) < 1e-9);
        const auto fm = oracle::bt_max_full(in);
        const auto q = solve_bt_max(in.model, in.pmf, o);
        for (std::size_t z = 0; z < fm.size(); ++z)
            for (std::size_t g = 0; g < fm[z].size(); ++g) CHECK(std::abs(q.j_z_g[z][g] - fm[z][g]) < 1e-9);
    }
}

TEST_CASE("B = 1 closed form") {
    auto m = coarse();
    m.dep.B = 1;
    const auto pmf = m.pmf();
    SolveOptions o;
    o.tol = 1e-15;
    const auto p = solve_bt_sum(m, pmf, o);
    const auto t = LinkTables::build(m.channel, m.dep, pmf, m.dep.A + 1);
    double early = 0, surv = 1;
    for (int k = 1; k <= m.dep.A + 1; ++k) {
        early += surv * m.dep.theta * expected_last_hop(t, pmf, k);
        surv *= 1 - m.dep.theta;
    }
    const double expect = (early + surv * (m.dep.xi_r + expected_last_hop(t, pmf, m.dep.A + 1))) / (1 - surv);
    CHECK(p.j_z[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("monotone in z and gamma_max; dominance") {
    const auto m = coarse();
    const auto pmf = m.pmf();
    const auto s = solve_bt_sum(m, pmf);
    const auto x = solve_bt_max(m, pmf);
    for (std::size_t z = 1; z < s.j_z.size(); ++z) CHECK(s.j_z[z] >= s.j_z[z - 1] - 1e-12);
    for (std::size_t z = 0; z < x.j_z_g.size(); ++z)
        for (std::size_t g = 0; g < x.j_z_g[z].size(); ++g) {
            if (z > 0) CHECK(x.j_z_g[z][g] >= x.j_z_g[z - 1][g] - 1e-12);
            if (g > 0) CHECK(x.j_z_g[z][g] >= x.j_z_g[z][g - 1] - 1e-12);
        }
    CHECK(x.j_z_g[0][0] <= s.j_z[0]);
    CHECK(s.j_z[0] <= solve_geo_sum(m, pmf).v_zero);
}

TEST_CASE("iterates never decrease") {
    const auto m = coarse();
    std::vector<double> prev;
    bool mono = true;
    SolveOptions o;
    o.observer = [&](int, std::span<const double> v) {
        if (!prev.empty())
            for (std::size_t k = 0; k < v.size(); ++k) mono = mono && v[k] >= prev[k] - 1e-12;
        prev.assign(v.begin(), v.end());
    };
    solve_bt_sum(m, m.pmf(), o);
    CHECK(mono);
    prev.clear();
    solve_bt_max(m, m.pmf(), o);
    CHECK(mono);
}

TEST_CASE("decisions") {
    auto m = coarse();
    const auto pmf = m.pmf();
    const auto p = solve_bt_sum(m, pmf);
    const std::vector<double> w(5, 1.0);
    CHECK_THROWS_AS(decide_bt(p, std::vector<double>(4, 1.0)), std::invalid_argument);

    // flat link cost: the farthest offset wins
    auto m0 = m;
    m0.dep.xi_o = 0;
    const auto p0 = solve_bt_sum(m0, pmf);
    REQUIRE(p0.j_z[4] > p0.j_z[0]);
    CHECK(decide_bt(p0, w).u == m.dep.A + m.dep.B);

    // one excellent location under a heavy outage weight
    auto mh = m;
    mh.dep.xi_o = 1e4;
    const auto ph = solve_bt_sum(mh, pmf);
    std::vector<double> bad(5, 1e-3);
    bad[2] = 1e4;
    CHECK(decide_bt(ph, bad).u == mh.dep.A + 3);

    // exhaustive scan
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> db(-20, 20);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> wv(5);
        for (auto& x : wv) x = std::pow(10, db(rng) / 10);
        double best = 1e300;
        int bu = 0;
        std::size_t bj = 0;
        for (int u = 6; u <= 10; ++u)
            for (std::size_t j = 0; j < 5; ++j) {
                const double v = m.dep.powers[j] +
                                 m.dep.xi_o * outage_probability(m.channel, u, 6, m.dep.powers[j], wv[u - 6]) +
                                 p.j_z[10 - u];
                if (v < best) best = v, bu = u, bj = j;
            }
        const auto d = decide_bt(p, wv);
        CHECK(d.u == bu);
        CHECK(d.power_index == bj);
    }
}

TEST_CASE("single power: max-power decision reduces to outage plus J") {
    auto m = coarse();
    m.dep.powers = {0.01};
    const auto pmf = m.pmf();
    const auto q = solve_bt_max(m, pmf);
    const std::vector<double> wv{0.2, 3.0, 0.5, 1.0, 0.05};
    for (double g : {0.0, 0.01}) {
        double best = 1e300;
        int bu = 0;
        for (int u = 6; u <= 10; ++u) {
            const double v = m.dep.xi_o * outage_probability(m.channel, u, 6, 0.01, wv[u - 6]) + q.j_z_g[10 - u][1];
            if (v < best) best = v, bu = u;
        }
        CHECK(decide_bt(q, wv, g).u == bu);
    }
}
