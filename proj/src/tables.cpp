#include "asyougo/tables.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "asyougo/avg_solver.hpp"
#include "asyougo/bt_solvers.hpp"
#include "asyougo/geo_solvers.hpp"

namespace asyougo {

std::vector<std::pair<double, double>> geometric_table_grid() {
    return {{0.001, 0.1}, {0.001, 1}, {0.001, 10}, {0.01, 0.1}, {0.01, 1}, {0.01, 10}};
}

std::vector<std::pair<double, double>> average_table_grid() {
    auto g = geometric_table_grid();
    for (double xo : {0.01, 0.1, 1.0, 10.0}) g.emplace_back(0.1, xo);
    return g;
}

CostTable compute_table(int which, const Model& base, int threads) {
    CostTable t;
    std::vector<std::pair<double, double>> grid;
    switch (which) {
        case 1:
            t = {"table1", {"xi_r", "xi_o", "sum_power", "max_power"}, {}, true};
            grid = geometric_table_grid();
            break;
        case 2:
            t = {"table2", {"xi_r", "xi_o", "no_backtracking", "backtracking"}, {}, true};
            grid = geometric_table_grid();
            break;
        case 3:
            t = {"table3", {"xi_r", "xi_o", "mean_power_mw", "mean_hop_length", "mean_outage"}, {}, true};
            grid = average_table_grid();
            break;
        case 4:
            t = {"table4", {"xi_r", "xi_o", "lambda_star", "lambda_prime", "lambda_h"}, {}, true};
            grid = average_table_grid();
            break;
        default:
            throw std::invalid_argument("table number must be 1..4");
    }
    const auto pmf = base.pmf();
    t.rows.assign(grid.size(), {});
    std::vector<char> ok(grid.size(), 1);

    auto cell = [&](std::size_t k) {
        Model m = base;
        m.dep.xi_r = grid[k].first;
        m.dep.xi_o = grid[k].second;
        std::vector<double> row{m.dep.xi_r, m.dep.xi_o};
        if (which == 1) {
            const auto s = solve_geo_sum(m, pmf);
            const auto x = solve_geo_max(m, pmf);
            row.insert(row.end(), {s.v_zero, x.v_zero_g[0]});
            ok[k] = s.info.converged && x.info.converged;
        } else if (which == 2) {
            const auto s = solve_geo_sum(m, pmf);
            const auto b = solve_bt_sum(m, pmf);
            row.insert(row.end(), {s.v_zero, b.j_z[0]});
            ok[k] = s.info.converged && b.info.converged;
        } else if (which == 3) {
            const auto a = policy_iteration_avg(m, pmf);
            row.insert(row.end(), {a.breakdown.mean_power, a.breakdown.mean_hop_length, a.breakdown.mean_outage});
            ok[k] = a.converged;
        } else {
            const auto a = policy_iteration_avg(m, pmf);
            const auto nb = average_cost_no_backtracking(m, pmf);
            const auto h = make_heuristic_policy(m, pmf);
            row.insert(row.end(), {a.lambda_star, nb.lambda_prime, h.lambda});
            ok[k] = a.converged;
        }
        t.rows[k] = std::move(row);
    };

    unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
    n = std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(grid.size())));
    std::vector<std::exception_ptr> err(n);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t k = w; k < grid.size(); k += n) cell(k);
        } catch (...) {
            err[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& th : pool) th.join();
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    t.converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    return t;
}

std::string table_to_csv(const CostTable& t) {
    std::ostringstream out;
    out.precision(6);
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
    }
    return out.str();
}

}  // namespace asyougo
