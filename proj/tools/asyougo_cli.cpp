// asyougo: solve, tabulate, simulate and serve relay-deployment policies.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "asyougo/policy_io.hpp"
#include "asyougo/server.hpp"
#include "asyougo/simulator.hpp"
#include "asyougo/tables.hpp"

namespace fs = std::filesystem;
using namespace asyougo;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 2, not_converged = 3, service_failure = 4 };

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::string params;
    std::optional<double> xi_r, xi_o, theta, grid_step;
    bool fine = false;
};

void add_model_flags(CLI::App* c, Overrides& o) {
    c->add_option("--params", o.params, "config JSON (default: $ASYOUGO_PARAMS, else built-in defaults)");
    c->add_option("--xi-r", o.xi_r, "relay cost");
    c->add_option("--xi-o", o.xi_o, "outage weight");
    c->add_option("--theta", o.theta, "per-step line-end probability");
    c->add_option("--grid-step-db", o.grid_step, "shadowing grid step in dB");
    c->add_flag("--fine", o.fine, "use the 0.02 dB grid");
}

Model build_model(const Overrides& o) {
    std::string path = o.params;
    if (path.empty())
        if (const char* env = std::getenv("ASYOUGO_PARAMS")) path = env;
    Model m = path.empty() ? default_model() : load_model_file(path);
    if (o.xi_r) m.dep.xi_r = *o.xi_r;
    if (o.xi_o) m.dep.xi_o = *o.xi_o;
    if (o.theta) m.dep.theta = *o.theta;
    if (o.fine) m.grid.step_db = 0.02;
    if (o.grid_step) m.grid.step_db = *o.grid_step;
    try {
        m.dep.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(m.grid.step_db > 0)) throw ConfigError("grid step must be positive");
    return m;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

AnyPolicy solve_kind(const std::string& kind, const Model& m) {
    const auto pmf = m.pmf();
    if (kind == "geo-sum") return solve_geo_sum(m, pmf);
    if (kind == "geo-max") return solve_geo_max(m, pmf);
    if (kind == "bt-sum") return solve_bt_sum(m, pmf);
    if (kind == "bt-max") return solve_bt_max(m, pmf);
    if (kind == "average-cost") return policy_iteration_avg(m, pmf);
    if (kind == "heuristic") return make_heuristic_policy(m, pmf);
    throw ConfigError("unknown policy kind '" + kind + "'");
}

bool converged(const AnyPolicy& p) {
    return std::visit(
        [](const auto& x) {
            using P = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<P, AvgPolicy>) return x.converged;
            else if constexpr (std::is_same_v<P, HeuristicPolicy>) return true;
            else return x.info.converged;
        },
        p);
}

void print_summary(std::ostream& out, const AnyPolicy& p) {
    const auto& dep = model_of(p).dep;
    out << "kind " << kind_name(p) << "  xi_r " << dep.xi_r << "  xi_o " << dep.xi_o << "  A " << dep.A << "  B "
        << dep.B << "  grid " << model_of(p).grid.step_db << " dB\n";
    std::visit(
        [&](const auto& x) {
            using P = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<P, GeoSumPolicy>) {
                out << "v_zero " << x.v_zero << "  (iterations " << x.info.iterations << ")\n";
                for (int r = dep.A + 1; r < dep.A + dep.B; ++r) out << "c_th(" << r << ") " << x.threshold(r) << '\n';
            } else if constexpr (std::is_same_v<P, GeoMaxPolicy>) {
                out << "v_zero(gamma_max=0) " << x.v_zero_g[0] << "  (iterations " << x.info.iterations << ")\n";
            } else if constexpr (std::is_same_v<P, BtSumPolicy>) {
                out << "J(0) " << x.j_z[0] << "  v_bar " << x.v_bar << "  (iterations " << x.info.iterations << ")\n";
            } else if constexpr (std::is_same_v<P, BtMaxPolicy>) {
                out << "J(0; gamma_max=0) " << x.j_z_g[0][0] << "  (iterations " << x.info.iterations << ")\n";
            } else if constexpr (std::is_same_v<P, AvgPolicy>) {
                out << "lambda* " << x.lambda_star << "  (policy iterations " << x.iterations << ")\n"
                    << "mean power per link " << x.breakdown.mean_power << " mW, mean hop " << x.breakdown.mean_hop_length
                    << " steps, mean outage " << x.breakdown.mean_outage << '\n';
            } else {
                out << "lambda_h " << x.lambda << '\n';
            }
        },
        p);
}

void dump_thresholds(std::ostream& out, const AnyPolicy& p) {
    const auto& dep = model_of(p).dep;
    std::visit(
        [&](const auto& x) {
            using P = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<P, GeoSumPolicy>) {
                out << "r,c_th\n";
                for (int r = dep.A + 1; r < dep.A + dep.B; ++r) out << r << ',' << x.threshold(r) << '\n';
            } else if constexpr (std::is_same_v<P, GeoMaxPolicy>) {
                out << "r";
                for (std::size_t g = 0; g <= dep.powers.size(); ++g) out << ",gamma_max_" << gamma_level_value(dep, g);
                out << '\n';
                for (std::size_t ri = 0; ri < x.c_th_g.size(); ++ri) {
                    out << dep.A + 1 + static_cast<int>(ri);
                    for (double v : x.c_th_g[ri]) out << ',' << v;
                    out << '\n';
                }
            } else if constexpr (std::is_same_v<P, BtSumPolicy>) {
                out << "z,J\n";
                for (std::size_t z = 0; z < x.j_z.size(); ++z) out << z << ',' << x.j_z[z] << '\n';
            } else if constexpr (std::is_same_v<P, BtMaxPolicy>) {
                out << "z";
                for (std::size_t g = 0; g <= dep.powers.size(); ++g) out << ",gamma_max_" << gamma_level_value(dep, g);
                out << '\n';
                for (std::size_t z = 0; z < x.j_z_g.size(); ++z) {
                    out << z;
                    for (double v : x.j_z_g[z]) out << ',' << v;
                    out << '\n';
                }
            } else if constexpr (std::is_same_v<P, AvgPolicy>) {
                out << "iteration,lambda\n";
                for (std::size_t k = 0; k < x.iteration_history.size(); ++k)
                    out << k + 1 << ',' << x.iteration_history[k] << '\n';
            } else {
                out << "lambda_h\n" << x.lambda << '\n';
            }
        },
        p);
}

json stats_to_json(const DeploymentStats& s) {
    return {{"n_runs", s.n_runs},
            {"mean_cost", s.mean_cost},
            {"cost_std_error", s.cost_std_error},
            {"mean_cost_sum_power", s.mean_cost_sum},
            {"cost_sum_power_half_width", s.cost_sum_half_width},
            {"mean_cost_max_power", s.mean_cost_max},
            {"cost_max_power_half_width", s.cost_max_half_width},
            {"mean_relays", s.mean_relays},
            {"n_links", s.n_links},
            {"relay_links_only", s.relay_links_only},
            {"mean_power_per_link_mw", s.mean_power_per_link},
            {"mean_hop_length", s.mean_hop_length},
            {"mean_outage_per_link", s.mean_outage_per_link},
            {"cost_per_step", s.cost_per_step},
            {"cost_per_step_std_error", s.cost_per_step_std_error},
            {"n_cycles", s.n_cycles}};
}

volatile std::sig_atomic_t g_stop = 0;
SessionServer* g_server = nullptr;
void on_signal(int) {
    g_stop = 1;
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"As-you-go relay deployment: policy solvers, simulator and session service"};
    app.require_subcommand(1);
    std::cout << std::setprecision(6);

    Overrides ov;
    std::string out_dir = ".";
    std::string kind = "geo-sum";

    auto* solve = app.add_subcommand("solve", "solve a policy and write it as JSON");
    add_model_flags(solve, ov);
    solve->add_option("--kind", kind, "geo-sum|geo-max|bt-sum|bt-max|average-cost|heuristic|all");
    solve->add_option("--out", out_dir, "output directory");

    std::string policy_file;
    auto* thr = app.add_subcommand("thresholds", "dump thresholds / value tables of a policy as CSV");
    thr->add_option("--policy", policy_file, "policy JSON")->required();

    std::vector<int> which{1, 2, 3, 4};
    int threads = 0;
    auto* tables = app.add_subcommand("tables", "reproduce the four comparison tables as CSV");
    add_model_flags(tables, ov);
    tables->add_option("--table", which, "tables to compute (1-4)")->delimiter(',');
    tables->add_option("--out", out_dir, "output directory");
    tables->add_option("--threads", threads, "worker threads (0 = all cores)");

    std::uint64_t seed = 1;
    int runs = 10000;
    std::string line = "geometric", compare_file;
    long length = 0, horizon = 1'000'000;
    bool relay_only = false;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo deployments under a policy");
    add_model_flags(sim, ov);
    sim->add_option("--policy", policy_file, "policy JSON (else --kind is solved on the fly)");
    sim->add_option("--kind", kind, "policy kind when no --policy is given");
    sim->add_option("--line", line, "geometric|fixed|infinite");
    sim->add_option("--length", length, "fixed line length in steps");
    sim->add_option("--horizon", horizon, "infinite-line horizon in steps");
    sim->add_option("--seed", seed);
    sim->add_option("--runs", runs);
    sim->add_option("--compare-with", compare_file, "second policy run on the same channel draws");
    sim->add_flag("--relay-links-only", relay_only, "leave the source hop out of per-link averages");
    sim->add_option("--out", out_dir, "output directory");

    std::string addr = "127.0.0.1:8080", policy_dir = "policies", log_file;
    auto* serve = app.add_subcommand("serve", "run the deployment session service");
    serve->add_option("--addr", addr, "HOST:PORT");
    serve->add_option("--policies", policy_dir, "directory of policy JSON files");
    serve->add_option("--log", log_file, "session event log (JSON lines); replayed on start");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (solve->parsed()) {
            const Model m = build_model(ov);
            std::vector<std::string> kinds{kind};
            if (kind == "all") kinds = {"geo-sum", "geo-max", "bt-sum", "bt-max", "average-cost", "heuristic"};
            bool all_ok = true;
            for (const auto& k : kinds) {
                const auto p = solve_kind(k, m);
                const fs::path file = fs::path(out_dir) / (k + ".json");
                fs::create_directories(out_dir);
                save_policy(p, file.string());
                print_summary(std::cout, p);
                std::cout << "wrote " << file.string() << "\n";
                all_ok = all_ok && converged(p);
            }
            if (!all_ok) throw NonConvergence("solver did not converge; policy written with its residual");
        } else if (thr->parsed()) {
            std::cout << std::setprecision(17);
            dump_thresholds(std::cout, load_policy(policy_file));
        } else if (tables->parsed()) {
            const Model m = build_model(ov);
            fs::create_directories(out_dir);
            bool all_ok = true;
            json meta = {{"grid_step_db", m.grid.step_db}, {"range_mult", m.grid.range_mult}, {"tables", json::array()}};
            for (int t : which) {
                const auto tab = compute_table(t, m, threads);
                const fs::path file = fs::path(out_dir) / (tab.name + ".csv");
                open_out(file) << table_to_csv(tab);
                std::cout << "# " << tab.name << " (grid " << m.grid.step_db << " dB)\n" << table_to_csv(tab);
                meta["tables"].push_back({{"name", tab.name}, {"file", file.string()}, {"converged", tab.converged}});
                all_ok = all_ok && tab.converged;
            }
            open_out(fs::path(out_dir) / "tables_meta.json") << meta.dump(2) << '\n';
            if (!all_ok) throw NonConvergence("a solver did not converge");
        } else if (sim->parsed()) {
            LineModel lm;
            if (line == "geometric") lm = LineModel::geometric(0.0);
            else if (line == "fixed") lm = LineModel::fixed(length);
            else if (line == "infinite") lm = LineModel::infinite(horizon);
            else throw ConfigError("unknown line model '" + line + "'");
            const AnyPolicy p = policy_file.empty() ? solve_kind(kind, build_model(ov)) : load_policy(policy_file);
            const Model& m = model_of(p);
            if (lm.kind == LineKind::geometric) lm.theta = ov.theta ? *ov.theta : m.dep.theta;
            const auto pmf = m.pmf();
            SimulateOptions so;
            so.seed = seed;
            so.n_runs = runs;
            so.keep_traces = true;
            so.relay_links_only = relay_only;
            const auto res = simulate(p, lm, pmf, so);
            fs::create_directories(out_dir);
            json stats = stats_to_json(res.stats);
            stats["policy_kind"] = kind_name(p);
            stats["seed"] = seed;
            stats["line"] = line;
            open_out(fs::path(out_dir) / "stats.json") << std::setprecision(6) << stats.dump(2) << '\n';
            open_out(fs::path(out_dir) / "traces.csv") << traces_to_csv(res.traces);
            std::cout << "mean cost " << res.stats.mean_cost << " +- " << 1.96 * res.stats.cost_std_error
                      << "  mean hop " << res.stats.mean_hop_length << "  mean power/link "
                      << res.stats.mean_power_per_link << " mW  mean outage/link " << res.stats.mean_outage_per_link
                      << '\n';
            if (lm.kind == LineKind::infinite)
                std::cout << "cost per step " << res.stats.cost_per_step << " +- "
                          << 1.96 * res.stats.cost_per_step_std_error << '\n';
            if (!compare_file.empty()) {
                const AnyPolicy q = load_policy(compare_file);
                so.keep_traces = false;
                const auto other = simulate(q, lm, model_of(q).pmf(), so);
                auto f = open_out(fs::path(out_dir) / "paired.csv");
                f << std::setprecision(17) << "run,cost_a,cost_b,diff\n";
                double sum = 0;
                for (std::size_t k = 0; k < res.run_costs.size(); ++k) {
                    const double d = res.run_costs[k] - other.run_costs[k];
                    sum += d;
                    f << k << ',' << res.run_costs[k] << ',' << other.run_costs[k] << ',' << d << '\n';
                }
                std::cout << "paired mean difference " << sum / static_cast<double>(res.run_costs.size()) << '\n';
            }
        } else if (serve->parsed()) {
            const auto colon = addr.rfind(':');
            if (colon == std::string::npos) throw ConfigError("--addr must be HOST:PORT");
            const std::string host = addr.substr(0, colon);
            int port = 0;
            try {
                port = std::stoi(addr.substr(colon + 1));
            } catch (const std::exception&) {
                throw ConfigError("bad port in --addr");
            }
            SessionStore::PolicyMap policies;
            try {
                policies = load_policy_directory(policy_dir);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << '\n';
                return service_failure;
            }
            SessionStore store(std::move(policies), log_file);
            SessionServer server(store);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving " << store.policies().size() << " policies on " << addr << '\n';
            if (!server.listen(host, port) && !g_stop) {
                std::cerr << "error: cannot listen on " << addr << '\n';
                return service_failure;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return not_converged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return service_failure;
    }
    return ok;
}
