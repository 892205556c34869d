#include "asyougo/bt_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "asyougo/geo_solvers.hpp"

namespace asyougo {

namespace {

struct SortedDist {
    std::vector<double> values;  // ascending
    std::vector<double> tail;    // tail[k] = mass of values[k..]; tail[n] = 0
};

SortedDist sort_dist(const DiscreteDist& d) {
    std::vector<std::size_t> order(d.values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return d.values[a] < d.values[b]; });
    SortedDist s;
    s.values.resize(order.size());
    s.tail.assign(order.size() + 1, 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) s.values[k] = d.values[order[k]];
    for (std::size_t k = order.size(); k-- > 0;) s.tail[k] = s.tail[k + 1] + d.probs[order[k]];
    return s;
}

void check_geometric(const Model& model, const char* who) {
    model.channel.validate();
    model.dep.validate();
    if (!(model.dep.theta > 0 && model.dep.theta < 1))
        throw std::invalid_argument(std::string(who) + ": theta must lie in (0,1)");
}

void check_window_vector(const DeploymentParams& dep, std::span<const double> w_vec) {
    if (w_vec.size() != static_cast<std::size_t>(dep.B))
        throw std::invalid_argument("decide_bt: expected " + std::to_string(dep.B) +
                                    " measurements, got " + std::to_string(w_vec.size()));
    for (double w : w_vec)
        if (!(w > 0)) throw std::invalid_argument("decide_bt: shadowing values must be positive");
}

// sum_{k=1}^{A+B-z} (1-theta)^{k-1} theta last_hop(z+k)
template <typename F>
double window_end_cost(const DeploymentParams& dep, int z, F&& last_hop) {
    double acc = 0.0;
    double survive = 1.0;
    for (int k = 1; k <= dep.A + dep.B - z; ++k) {
        acc += survive * dep.theta * last_hop(z + k);
        survive *= 1.0 - dep.theta;
    }
    return acc;
}

}  // namespace

double expected_min_independent(std::span<const DiscreteDist> dists) {
    if (dists.empty()) throw std::invalid_argument("expected_min_independent: empty list");
    std::vector<SortedDist> sorted;
    sorted.reserve(dists.size());
    std::vector<double> merged;
    for (const auto& d : dists) {
        if (d.values.empty() || d.values.size() != d.probs.size())
            throw std::invalid_argument("expected_min_independent: malformed distribution");
        double mass = 0.0;
        for (double p : d.probs) {
            if (!(p >= 0)) throw std::invalid_argument("expected_min_independent: negative mass");
            mass += p;
        }
        if (std::abs(mass - 1.0) > 1e-12)
            throw std::invalid_argument("expected_min_independent: mass must be 1");
        sorted.push_back(sort_dist(d));
        merged.insert(merged.end(), sorted.back().values.begin(), sorted.back().values.end());
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    // Walk the merged support upward; cursor[d] = first index of dist d with
    // value >= current point, so tail[cursor] = P(X_d >= v).
    std::vector<std::size_t> cursor(sorted.size(), 0);
    double expectation = 0.0;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        const double v = merged[k];
        double survive = 1.0;
        for (std::size_t d = 0; d < sorted.size(); ++d) {
            auto& c = cursor[d];
            const auto& s = sorted[d];
            while (c < s.values.size() && s.values[c] < v) ++c;
            survive *= s.tail[c];
        }
        expectation += k == 0 ? v * survive : survive * (v - merged[k - 1]);
    }
    return expectation;
}

BtSumPolicy solve_bt_sum(const Model& model, const ShadowingPmf& pmf, const SolveOptions& opts) {
    check_geometric(model, "solve_bt_sum");
    pmf.validate();
    if (!(opts.tol > 0)) throw std::invalid_argument("solve_bt_sum: tol must be positive");

    const auto& dep = model.dep;
    const int A = dep.A;
    const int B = dep.B;
    const auto tables = LinkTables::build(model.channel, dep, pmf, A + B);

    std::vector<double> last_hop(static_cast<std::size_t>(A + B + 1), 0.0);
    for (int k = 1; k <= A + B; ++k) last_hop[k] = expected_last_hop(tables, pmf, k);
    std::vector<double> end_cost(static_cast<std::size_t>(B)), reach(static_cast<std::size_t>(B));
    for (int z = 0; z < B; ++z) {
        end_cost[z] = window_end_cost(dep, z, [&](int r) { return last_hop[r]; });
        reach[z] = std::pow(1.0 - dep.theta, A + B - z);
    }

    // Per-offset score distributions: min-power link cost shifted by J(A+B-u; 0).
    std::vector<DiscreteDist> dists(static_cast<std::size_t>(B));
    for (int u = A + 1; u <= A + B; ++u) {
        auto& d = dists[u - A - 1];
        d.probs = pmf.probs;
        d.values.resize(tables.n_w);
    }

    // state[0] = V, state[1 + z] = J(z; 0)
    std::vector<double> state(static_cast<std::size_t>(B) + 1, 0.0), next(state.size());
    BtSumPolicy policy;
    policy.model = model;
    policy.info.tol = opts.tol;

    int it = 0;
    double residual = 0.0;
    while (it < opts.max_iter) {
        for (int z = 0; z < B; ++z) next[1 + z] = end_cost[z] + reach[z] * state[0];
        for (int u = A + 1; u <= A + B; ++u) {
            auto& d = dists[u - A - 1];
            const double j_after = state[1 + (A + B - u)];
            for (std::size_t i = 0; i < tables.n_w; ++i) d.values[i] = tables.best[u][i].cost + j_after;
        }
        next[0] = dep.xi_r + expected_min_independent(dists);

        residual = 0.0;
        for (std::size_t k = 0; k < state.size(); ++k) residual = std::max(residual, std::abs(next[k] - state[k]));
        state.swap(next);
        ++it;
        if (opts.observer) opts.observer(it, state);
        if (residual < opts.tol) break;
    }

    policy.info.iterations = it;
    policy.info.residual = residual;
    policy.info.converged = residual < opts.tol;
    policy.v_bar = state[0];
    policy.j_z.assign(state.begin() + 1, state.end());
    return policy;
}

BtMaxPolicy solve_bt_max(const Model& model, const ShadowingPmf& pmf, const SolveOptions& opts) {
    check_geometric(model, "solve_bt_max");
    pmf.validate();
    if (!(opts.tol > 0)) throw std::invalid_argument("solve_bt_max: tol must be positive");

    const auto& dep = model.dep;
    const int A = dep.A;
    const int B = dep.B;
    const std::size_t M = dep.powers.size();
    const std::size_t G = M + 1;
    const auto tables = LinkTables::build(model.channel, dep, pmf, A + B);

    // end_cost[z][g]: expected cost if the line ends before the next window
    // completes, with the final hop charged max(gamma, g) + xi_o P_out.
    std::vector<std::vector<double>> last_hop(static_cast<std::size_t>(A + B + 1), std::vector<double>(G, 0.0));
    for (int k = 1; k <= A + B; ++k) {
        for (std::size_t g = 0; g < G; ++g) {
            const double gmax = gamma_level_value(dep, g);
            double acc = 0.0;
            for (std::size_t i = 0; i < tables.n_w; ++i) {
                double best = 0.0;
                for (std::size_t j = 0; j < M; ++j) {
                    const double c = std::max(dep.powers[j], gmax) + dep.xi_o * tables.outage[k][j][i];
                    if (j == 0 || c < best) best = c;
                }
                acc += pmf.probs[i] * best;
            }
            last_hop[k][g] = acc;
        }
    }
    std::vector<std::vector<double>> end_cost(static_cast<std::size_t>(B), std::vector<double>(G));
    std::vector<double> reach(static_cast<std::size_t>(B));
    for (int z = 0; z < B; ++z) {
        reach[z] = std::pow(1.0 - dep.theta, A + B - z);
        for (std::size_t g = 0; g < G; ++g)
            end_cost[z][g] = window_end_cost(dep, z, [&](int r) { return last_hop[r][g]; });
    }

    std::vector<double> v(G, 0.0), v_next(G, 0.0);
    std::vector<std::vector<double>> j(static_cast<std::size_t>(B), std::vector<double>(G, 0.0));
    auto j_next = j;
    std::vector<DiscreteDist> dists(static_cast<std::size_t>(B));
    for (auto& d : dists) {
        d.probs = pmf.probs;
        d.values.resize(tables.n_w);
    }
    std::vector<double> flat;

    BtMaxPolicy policy;
    policy.model = model;
    policy.info.tol = opts.tol;

    int it = 0;
    double residual = 0.0;
    while (it < opts.max_iter) {
        for (std::size_t g = 0; g < G; ++g) {
            for (int z = 0; z < B; ++z) j_next[z][g] = end_cost[z][g] + reach[z] * v[g];
            for (int u = A + 1; u <= A + B; ++u) {
                auto& d = dists[u - A - 1];
                const auto& j_after = j[static_cast<std::size_t>(A + B - u)];
                for (std::size_t i = 0; i < tables.n_w; ++i) {
                    double best = 0.0;
                    for (std::size_t p = 0; p < M; ++p) {
                        const double c = dep.xi_o * tables.outage[u][p][i] + j_after[std::max(p + 1, g)];
                        if (p == 0 || c < best) best = c;
                    }
                    d.values[i] = best;
                }
            }
            v_next[g] = dep.xi_r + expected_min_independent(dists);
        }

        residual = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            residual = std::max(residual, std::abs(v_next[g] - v[g]));
            for (int z = 0; z < B; ++z) residual = std::max(residual, std::abs(j_next[z][g] - j[z][g]));
        }
        v.swap(v_next);
        j.swap(j_next);
        ++it;
        if (opts.observer) {
            flat.assign(v.begin(), v.end());
            for (const auto& row : j) flat.insert(flat.end(), row.begin(), row.end());
            opts.observer(it, flat);
        }
        if (residual < opts.tol) break;
    }

    policy.info.iterations = it;
    policy.info.residual = residual;
    policy.info.converged = residual < opts.tol;
    policy.v_bar_g = v;
    policy.j_z_g = j;
    return policy;
}

BtDecision decide_bt(const BtSumPolicy& policy, std::span<const double> w_vec) {
    const auto& dep = policy.model.dep;
    check_window_vector(dep, w_vec);
    BtDecision best;
    bool first = true;
    for (int u = dep.A + 1; u <= dep.A + dep.B; ++u) {
        const double w = w_vec[static_cast<std::size_t>(u - dep.A - 1)];
        const double j_after = policy.j_z[static_cast<std::size_t>(dep.A + dep.B - u)];
        for (std::size_t p = 0; p < dep.powers.size(); ++p) {
            const double link = dep.powers[p] +
                                dep.xi_o * outage_probability(policy.model.channel, u, dep.delta_m, dep.powers[p], w);
            const double obj = link + j_after;
            if (first || obj < best.objective) {
                best = {u, dep.powers[p], p, obj};
                first = false;
            }
        }
    }
    return best;
}

BtDecision decide_bt(const BtMaxPolicy& policy, std::span<const double> w_vec, double gamma_max) {
    const auto& dep = policy.model.dep;
    check_window_vector(dep, w_vec);
    const std::size_t g = gamma_level_index(dep, gamma_max);
    BtDecision best;
    bool first = true;
    for (int u = dep.A + 1; u <= dep.A + dep.B; ++u) {
        const double w = w_vec[static_cast<std::size_t>(u - dep.A - 1)];
        const auto& j_after = policy.j_z_g[static_cast<std::size_t>(dep.A + dep.B - u)];
        for (std::size_t p = 0; p < dep.powers.size(); ++p) {
            const double obj = dep.xi_o * outage_probability(policy.model.channel, u, dep.delta_m, dep.powers[p], w) +
                               j_after[std::max(p + 1, g)];
            if (first || obj < best.objective) {
                best = {u, dep.powers[p], p, obj};
                first = false;
            }
        }
    }
    return best;
}

}  // namespace asyougo
