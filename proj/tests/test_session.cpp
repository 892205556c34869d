#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "asyougo/policy_io.hpp"
#include "asyougo/session.hpp"

using namespace asyougo;

namespace {

struct Fixture {
    Model m;
    ShadowingPmf pmf;
    SessionStore::PolicyMap policies;
    Fixture() {
        m = default_model();
        m.grid.step_db = 1.0;
        m.dep.xi_r = 0.01;
        pmf = m.pmf();
        policies["gs"] = std::make_shared<const AnyPolicy>(solve_geo_sum(m, pmf));
        policies["gm"] = std::make_shared<const AnyPolicy>(solve_geo_max(m, pmf));
        policies["bs"] = std::make_shared<const AnyPolicy>(solve_bt_sum(m, pmf));
        policies["bm"] = std::make_shared<const AnyPolicy>(solve_bt_max(m, pmf));
        policies["avg"] = std::make_shared<const AnyPolicy>(policy_iteration_avg(m, pmf));
        policies["h"] = std::make_shared<const AnyPolicy>(make_heuristic_policy(m, pmf));
    }
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

MeasurementReport w_report(double w, std::optional<long> seq = std::nullopt) {
    MeasurementReport r;
    r.w = w;
    r.seq = seq;
    return r;
}

SessionErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const SessionError& e) {
        return e.code;
    }
    FAIL("no SessionError");
    return SessionErrorCode::bad_request;
}

bool same(const DeploymentTrace& a, const DeploymentTrace& b) {
    if (a.links.size() != b.links.size() || a.measurements.size() != b.measurements.size()) return false;
    for (std::size_t i = 0; i < a.links.size(); ++i) {
        const auto &x = a.links[i], &y = b.links[i];
        if (x.tx != y.tx || x.rx != y.rx || x.w != y.w || x.power_index != y.power_index || x.outage != y.outage ||
            x.source != y.source)
            return false;
    }
    for (std::size_t i = 0; i < a.measurements.size(); ++i)
        if (a.measurements[i].at != b.measurements[i].at || a.measurements[i].w != b.measurements[i].w) return false;
    return a.totals.cost_sum == b.totals.cost_sum && a.totals.cost_max == b.totals.cost_max &&
           a.source_position == b.source_position;
}

}  // namespace

TEST_CASE("create and mode checks") {
    SessionStore store(fx().policies);
    const auto a = store.create("gs", SessionMode::no_backtracking);
    const auto b = store.create("gs", SessionMode::no_backtracking);
    CHECK(a != b);
    CHECK(code_of([&] { store.create("bs", SessionMode::no_backtracking); }) == SessionErrorCode::mismatch);
    CHECK(code_of([&] { store.create("gs", SessionMode::backtracking); }) == SessionErrorCode::mismatch);
    CHECK(code_of([&] { store.create("zz", SessionMode::backtracking); }) == SessionErrorCode::not_found);
    CHECK(code_of([&] { store.report("nope", w_report(1)); }) == SessionErrorCode::not_found);
    CHECK(code_of([] { parse_mode("sideways"); }) == SessionErrorCode::bad_request);
    CHECK(http_status(SessionErrorCode::mismatch) == 422);
    CHECK(http_status(SessionErrorCode::ordering) == 409);
}

TEST_CASE("no-backtracking walk: first measurement after A steps, forced at A+B") {
    SessionStore store(fx().policies);
    const auto id = store.create("gs", SessionMode::no_backtracking);
    auto ins = store.instruction(id)["instruction"];
    CHECK(ins["action"] == "measure");
    CHECK(ins["position"] == 6);
    CHECK(ins["line_end_range"] == nlohmann::json::array({1, 6}));
    // very poor shadowing never meets a threshold
    for (int k = 0; k < 4; ++k) CHECK(store.report(id, w_report(1e-6))["decision"]["action"] == "advance");
    const auto j = store.report(id, w_report(1e-6));
    CHECK(j["decision"]["action"] == "place");
    CHECK(j["decision"]["position"] == 10);
    CHECK(j["instruction"]["position"] == 16);
    const auto sc = store.scores(id)["scores"];
    CHECK(sc["threshold"].is_null());
    CHECK(sc["candidates"].size() == fx().m.dep.powers.size());
}

TEST_CASE("backtracking walk buffers B measurements then walks back") {
    SessionStore store(fx().policies);
    const auto id = store.create("bs", SessionMode::backtracking);
    std::vector<double> w{0.5, 40.0, 0.5, 0.5, 0.5};
    for (int k = 0; k < 4; ++k) CHECK(store.report(id, w_report(w[k]))["decision"]["action"] == "buffered");
    CHECK(store.scores(id)["scores"]["candidates"].size() == 4 * fx().m.dep.powers.size());
    const auto j = store.report(id, w_report(w[4]));
    const auto d = decide_bt(std::get<BtSumPolicy>(*fx().policies.at("bs")), w);
    CHECK(j["decision"]["action"] == "place");
    CHECK(j["decision"]["offset"] == d.u);
    CHECK(j["decision"]["power_index"] == d.power_index);
    CHECK(j["decision"]["walk_back_steps"] == 10 - d.u);
    const auto sc = store.scores(id)["scores"];
    CHECK(sc["candidates"][0]["offset"] == d.u);
    CHECK(sc["candidates"][0]["power_index"] == d.power_index);
    // next measurement is A+1 past the new relay; the line can still end
    // anywhere beyond what was walked
    const auto ins = store.instruction(id)["instruction"];
    CHECK(ins["position"] == d.u + 6);
    CHECK(ins["line_end_range"][0] == 11);
}

TEST_CASE("ordering, positions and completion") {
    SessionStore store(fx().policies);
    const auto id = store.create("gs", SessionMode::no_backtracking);
    CHECK(code_of([&] { store.report(id, w_report(1, 3)); }) == SessionErrorCode::ordering);
    MeasurementReport r = w_report(1, 0);
    r.position = 7;
    CHECK(code_of([&] { store.report(id, r); }) == SessionErrorCode::ordering);
    r.position = 6;
    store.report(id, r);
    CHECK(code_of([&] { store.report(id, MeasurementReport{}); }) == SessionErrorCode::bad_request);
    CHECK(code_of([&] { store.end_line(id, 3, w_report(1)); }) == SessionErrorCode::ordering);
    CHECK(code_of([&] { store.end_line(id, 9, w_report(1)); }) == SessionErrorCode::ordering);
    const auto j = store.end_line(id, 7, w_report(2.0, 1));
    CHECK(j["session"]["status"] == "completed");
    CHECK(j["trace"]["source_position"] == 7);
    CHECK(store.instruction(id)["instruction"]["action"] == "completed");
    CHECK(code_of([&] { store.report(id, w_report(1)); }) == SessionErrorCode::completed);
    CHECK(code_of([&] { store.end_line(id, 8, w_report(1)); }) == SessionErrorCode::completed);
}

TEST_CASE("rssi reports recover w") {
    const auto& m = fx().m;
    SessionStore store(fx().policies);
    const auto id = store.create("gs", SessionMode::no_backtracking);
    const double w = 1.7;
    const double gain = m.channel.c * std::pow(6.0 * m.dep.delta_m / m.channel.r0, -m.channel.eta);
    MeasurementReport r;
    r.probe_power_dbm = 0.0;
    r.rssi_dbm = mw_to_dbm(w * gain);
    store.report(id, r);
    CHECK(store.raw_trace(id).measurements.back().w == doctest::Approx(w).epsilon(1e-12));
    CHECK_THROWS_AS(MeasurementReport::from_json(nlohmann::json{{"w", "x"}}), SessionError);
    CHECK_THROWS_AS(MeasurementReport::from_json(nlohmann::json::array()), SessionError);
}

TEST_CASE("replaying simulator traces reproduces them exactly") {
    SessionStore store(fx().policies);
    for (const auto& [pid, mode] : std::vector<std::pair<std::string, SessionMode>>{
             {"gs", SessionMode::no_backtracking},
             {"gm", SessionMode::no_backtracking},
             {"bs", SessionMode::backtracking},
             {"bm", SessionMode::backtracking}}) {
        for (std::uint64_t run = 0; run < 25; ++run) {
            const auto sim = simulate_run(*fx().policies.at(pid), LineModel::geometric(0.04), fx().pmf, 17, run);
            const auto got = replay_trace(store, pid, mode, sim);
            CHECK(same(sim, got));
            const auto tot = compute_totals(got.links, fx().m.dep);
            CHECK(tot.cost_sum == got.totals.cost_sum);
        }
    }
}

TEST_CASE("event log survives a restart") {
    const auto path = (std::filesystem::temp_directory_path() / "asyougo_session_log.jsonl").string();
    std::remove(path.c_str());
    std::string id_done, id_open;
    nlohmann::json before_done, before_open;
    {
        SessionStore store(fx().policies, path);
        const auto sim = simulate_run(*fx().policies.at("bs"), LineModel::fixed(37), fx().pmf, 4, 0);
        replay_trace(store, "bs", SessionMode::backtracking, sim);
        id_done = store.ids().front();
        id_open = store.create("gm", SessionMode::no_backtracking);
        store.report(id_open, w_report(0.123456789012345));
        store.report(id_open, w_report(3.3));
        before_done = store.trace(id_done);
        before_open = store.snapshot(id_open);
    }
    SessionStore again(fx().policies, path);
    CHECK(again.trace(id_done) == before_done);
    CHECK(again.snapshot(id_open) == before_open);
    const auto fresh = again.create("gs", SessionMode::no_backtracking);
    CHECK(fresh != id_done);
    CHECK(fresh != id_open);
    std::remove(path.c_str());
}

TEST_CASE("concurrent reports with the same seq: exactly one wins") {
    SessionStore store(fx().policies);
    for (int rep = 0; rep < 20; ++rep) {
        const auto id = store.create("bs", SessionMode::backtracking);
        std::atomic<int> ok{0}, conflicts{0};
        std::vector<std::thread> ts;
        for (int t = 0; t < 4; ++t)
            ts.emplace_back([&] {
                try {
                    store.report(id, w_report(1.0, 0));
                    ++ok;
                } catch (const SessionError& e) {
                    if (e.code == SessionErrorCode::ordering) ++conflicts;
                }
            });
        for (auto& t : ts) t.join();
        CHECK(ok == 1);
        CHECK(conflicts == 3);
        CHECK(store.snapshot(id)["session"]["seq"] == 1);
    }
}

TEST_CASE("policy directory") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "asyougo_policy_dir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK_THROWS_AS(load_policy_directory(dir.string()), std::runtime_error);
    save_policy(*fx().policies.at("gs"), (dir / "alpha.json").string());
    const auto map = load_policy_directory(dir.string());
    REQUIRE(map.size() == 1);
    CHECK(kind_name(*map.at("alpha")) == "geo-sum");
    CHECK_THROWS_AS(load_policy_directory((dir / "missing").string()), std::runtime_error);
    fs::remove_all(dir);
}
