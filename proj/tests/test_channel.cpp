#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "asyougo/channel.hpp"
#include "asyougo/policy_io.hpp"

using namespace asyougo;

namespace {
ChannelParams default_channel() { return default_model().channel; }
}  // namespace

TEST_CASE("quantized shadowing: sizes, mass and mean") {
    CHECK(quantize_shadowing(7, 0.02, 4).size() == 2801);
    const auto one = quantize_shadowing(0, 1, 4);
    REQUIRE(one.size() == 1);
    CHECK(one.support[0] == 1.0);
    CHECK(one.probs[0] == 1.0);

    const auto p = quantize_shadowing(7, 1, 4);
    CHECK(p.size() == 57);
    double mass = 0, mean_db = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mass += p.probs[i];
        mean_db += p.probs[i] * p.support_db[i];
    }
    CHECK(std::abs(mass - 1) < 1e-12);
    CHECK(std::abs(mean_db) < 1e-12);
    CHECK_NOTHROW(p.validate());
    CHECK(std::abs(quantize_shadowing(7, 0.1, 4).support_db.front() + 28.0) < 1e-9);
}

TEST_CASE("quantized shadowing rejects bad steps") {
    CHECK_THROWS_AS(quantize_shadowing(7, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(quantize_shadowing(7, -1, 4), std::invalid_argument);
    CHECK_THROWS_AS(quantize_shadowing(7, 0.1, 0), std::invalid_argument);
}

TEST_CASE("outage at one step with unit power") {
    const auto ch = default_channel();
    const double p = outage_probability(ch, 1, 6, 1, 1);
    CHECK(p == doctest::Approx(1.435e-6).epsilon(1e-3));
    const double x = std::pow(10.0, -8.8) * std::pow(6.0, 3.8) / std::pow(10.0, 0.00054);
    CHECK(p == doctest::Approx(1 - std::exp(-x)).epsilon(1e-14));
}

TEST_CASE("outage monotonicity and range") {
    const auto ch = default_channel();
    double prev = 1.0;
    for (double w : {1.0, 10.0, 1e2, 1e4, 1e6}) {
        const double p = outage_probability(ch, 8, 6, 1e-3, w);
        CHECK(p < prev);
        CHECK(p > 0);
        CHECK(p < 1);
        prev = p;
    }
    CHECK(outage_probability(ch, 10, 6, 1e-3, 0.1) > outage_probability(ch, 5, 6, 1e-3, 0.1));
    for (int r = 1; r < 12; ++r) {
        CHECK(outage_probability(ch, r + 1, 6, 1e-2, 0.3) > outage_probability(ch, r, 6, 1e-2, 0.3));
        CHECK(outage_probability(ch, r, 6, 1e-2, 0.3) < outage_probability(ch, r, 6, 1e-3, 0.3));
    }
    CHECK_THROWS_AS(outage_probability(ch, 1, 6, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(outage_probability(ch, 1, 6, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(outage_probability(ch, 0, 6, 1, 1), std::invalid_argument);
}

TEST_CASE("min power cost") {
    const auto m = default_model();
    const auto& S = m.dep.powers;
    for (int r : {1, 6, 10})
        for (double w : {0.01, 1.0, 50.0}) {
            const auto c = min_power_cost(m.channel, r, 6, w, S, 0.0);
            CHECK(c.index == 0);
            CHECK(c.cost == S[0]);
        }
    const auto hi = min_power_cost(m.channel, 10, 6, 1e-3, S, 1e6);
    CHECK(hi.index == S.size() - 1);

    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < S.size(); ++j) {
        const double v = S[j] + outage_probability(m.channel, 8, 6, S[j], 1.0);
        if (v < best) best = v, arg = j;
    }
    const auto c = min_power_cost(m.channel, 8, 6, 1.0, S, 1.0);
    CHECK(c.cost == best);
    CHECK(c.index == arg);
    CHECK(c.gamma == S[arg]);

    for (double w : {0.05, 0.3, 1.0, 4.0})
        for (int r = 1; r < 12; ++r) {
            CHECK(min_power_cost(m.channel, r + 1, 6, w, S, 1.0).cost >= min_power_cost(m.channel, r, 6, w, S, 1.0).cost);
            CHECK(min_power_cost(m.channel, r, 6, w * 2, S, 1.0).cost <= min_power_cost(m.channel, r, 6, w, S, 1.0).cost);
        }
}

TEST_CASE("ties go to the lowest power") {
    const auto m = default_model();
    const std::vector<double> S{1e-3, 1e-3 * (1 + 1e-15)};
    // xi_o = 0 and nearly equal powers: the first wins
    CHECK(min_power_cost(m.channel, 3, 6, 1, S, 0).index == 0);
}

TEST_CASE("link tables agree with direct calls") {
    const auto m = default_model();
    const auto pmf = quantize_shadowing(7, 1, 4);
    const auto t = LinkTables::build(m.channel, m.dep, pmf, 10);
    for (int r = 1; r <= 10; ++r)
        for (std::size_t i = 0; i < pmf.size(); i += 7) {
            const auto d = min_power_cost(m.channel, r, m.dep.delta_m, pmf.support[i], m.dep.powers, m.dep.xi_o);
            CHECK(t.best[r][i].cost == d.cost);
            CHECK(t.best[r][i].index == d.index);
            CHECK(t.outage[r][2][i] == outage_probability(m.channel, r, m.dep.delta_m, m.dep.powers[2], pmf.support[i]));
        }
}

TEST_CASE("shadowing recovered from received power") {
    const auto ch = default_channel();
    const double w = 0.37;
    const double probe_dbm = -5;
    const double gain = ch.c * std::pow(7 * 6.0, -ch.eta);
    const double rssi = mw_to_dbm(dbm_to_mw(probe_dbm) * gain * w);
    CHECK(shadowing_from_rssi(ch, 7, 6, rssi, probe_dbm) == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
    auto m = default_model();
    CHECK_NOTHROW(m.dep.validate());
    m.dep.powers = {1.0, 0.5};
    CHECK_THROWS(m.dep.validate());
    m = default_model();
    m.dep.B = 0;
    CHECK_THROWS(m.dep.validate());
    m = default_model();
    m.channel.eta = 0;
    CHECK_THROWS(m.channel.validate());
    m = default_model();
    m.channel.fading = "nakagami";
    CHECK_THROWS(m.channel.validate());
}
