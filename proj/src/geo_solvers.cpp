#include "asyougo/geo_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace asyougo {

namespace {

void check_geometric(const Model& model, const char* who) {
    model.channel.validate();
    model.dep.validate();
    if (!(model.dep.theta > 0 && model.dep.theta < 1))
        throw std::invalid_argument(std::string(who) + ": theta must lie in (0,1)");
}

void check_window(const DeploymentParams& dep, int r) {
    if (r < dep.A + 1 || r > dep.A + dep.B)
        throw std::out_of_range("decide_geo: r=" + std::to_string(r) + " outside the window [" +
                                std::to_string(dep.A + 1) + ", " + std::to_string(dep.A + dep.B) + "]");
}

// sum_{k=1}^{A+1} (1-theta)^{k-1} theta * last_hop[k]
template <typename F>
double early_end_cost(const DeploymentParams& dep, F&& last_hop) {
    double acc = 0.0;
    double survive = 1.0;
    for (int k = 1; k <= dep.A + 1; ++k) {
        acc += survive * dep.theta * last_hop(k);
        survive *= 1.0 - dep.theta;
    }
    return acc;
}

}  // namespace

double GeoSumPolicy::threshold(int r) const {
    const auto& dep = model.dep;
    if (r < dep.A + 1 || r >= dep.A + dep.B)
        throw std::out_of_range("GeoSumPolicy::threshold: no threshold at r=" + std::to_string(r));
    return c_th[static_cast<std::size_t>(r - dep.A - 1)];
}

double GeoMaxPolicy::threshold(int r, double gamma_max) const {
    const auto& dep = model.dep;
    if (r < dep.A + 1 || r >= dep.A + dep.B)
        throw std::out_of_range("GeoMaxPolicy::threshold: no threshold at r=" + std::to_string(r));
    return c_th_g[static_cast<std::size_t>(r - dep.A - 1)][gamma_level_index(dep, gamma_max)];
}

std::size_t gamma_level_index(const DeploymentParams& dep, double gamma_max) {
    if (gamma_max == 0.0) return 0;
    for (std::size_t j = 0; j < dep.powers.size(); ++j)
        if (std::abs(dep.powers[j] - gamma_max) <= 1e-12 * dep.powers[j]) return j + 1;
    throw std::invalid_argument("gamma_max " + std::to_string(gamma_max) +
                                " mW is neither 0 nor a member of the power set");
}

double gamma_level_value(const DeploymentParams& dep, std::size_t level) {
    return level == 0 ? 0.0 : dep.powers.at(level - 1);
}

GeoSumPolicy solve_geo_sum(const Model& model, const ShadowingPmf& pmf, const SolveOptions& opts) {
    check_geometric(model, "solve_geo_sum");
    pmf.validate();
    if (!(opts.tol > 0)) throw std::invalid_argument("solve_geo_sum: tol must be positive");

    const auto& dep = model.dep;
    const int A = dep.A;
    const int B = dep.B;
    const double theta = dep.theta;
    const auto tables = LinkTables::build(model.channel, dep, pmf, A + B + 1);

    std::vector<double> last_hop(static_cast<std::size_t>(A + B + 2), 0.0);
    for (int k = 1; k <= A + B + 1; ++k) last_hop[k] = expected_last_hop(tables, pmf, k);
    const double early = early_end_cost(dep, [&](int k) { return last_hop[k]; });
    const double reach = std::pow(1.0 - theta, A + 1);

    // v[0] = V(0), v[r - A] = V(r)
    std::vector<double> v(static_cast<std::size_t>(B) + 1, 0.0);
    std::vector<double> next(v.size(), 0.0);

    GeoSumPolicy policy;
    policy.model = model;
    policy.info.tol = opts.tol;

    int it = 0;
    double residual = 0.0;
    while (it < opts.max_iter) {
        const double v0 = v[0];
        for (int r = A + 1; r < A + B; ++r) {
            const double keep_walking = theta * last_hop[r + 1] + (1.0 - theta) * v[r + 1 - A];
            const auto& best = tables.best[r];
            double acc = 0.0;
            for (std::size_t i = 0; i < tables.n_w; ++i)
                acc += pmf.probs[i] * std::min(best[i].cost + dep.xi_r + v0, keep_walking);
            next[r - A] = acc;
        }
        next[B] = last_hop[A + B] + dep.xi_r + v0;
        next[0] = early + reach * v[1];

        residual = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) residual = std::max(residual, std::abs(next[k] - v[k]));
        v.swap(next);
        ++it;
        if (opts.observer) opts.observer(it, v);
        if (residual < opts.tol) break;
    }

    policy.info.iterations = it;
    policy.info.residual = residual;
    policy.info.converged = residual < opts.tol;
    policy.v_zero = v[0];
    policy.v_r.assign(v.begin() + 1, v.end());
    policy.c_th.resize(static_cast<std::size_t>(B - 1));
    for (int r = A + 1; r < A + B; ++r)
        policy.c_th[r - A - 1] =
            theta * last_hop[r + 1] + (1.0 - theta) * v[r + 1 - A] - (dep.xi_r + v[0]);
    return policy;
}

GeoMaxPolicy solve_geo_max(const Model& model, const ShadowingPmf& pmf, const SolveOptions& opts) {
    check_geometric(model, "solve_geo_max");
    pmf.validate();
    if (!(opts.tol > 0)) throw std::invalid_argument("solve_geo_max: tol must be positive");

    const auto& dep = model.dep;
    const int A = dep.A;
    const int B = dep.B;
    const double theta = dep.theta;
    const std::size_t M = dep.powers.size();
    const std::size_t G = M + 1;
    const auto tables = LinkTables::build(model.channel, dep, pmf, A + B + 1);

    // last_hop[k][g] = E_W min_gamma(max(gamma, g) + xi_o P_out(k, gamma, W))
    std::vector<std::vector<double>> last_hop(static_cast<std::size_t>(A + B + 2),
                                              std::vector<double>(G, 0.0));
    for (int k = 1; k <= A + B + 1; ++k) {
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
    const double reach = std::pow(1.0 - theta, A + 1);

    // v0[g] = V(0; g); v[r - A - 1][g] = V(r; g)
    std::vector<double> v0(G, 0.0), v0_next(G, 0.0);
    std::vector<std::vector<double>> v(static_cast<std::size_t>(B), std::vector<double>(G, 0.0));
    auto v_next = v;
    std::vector<double> flat;

    GeoMaxPolicy policy;
    policy.model = model;
    policy.info.tol = opts.tol;

    int it = 0;
    double residual = 0.0;
    while (it < opts.max_iter) {
        for (std::size_t g = 0; g < G; ++g) {
            for (int r = A + 1; r <= A + B; ++r) {
                const auto ri = static_cast<std::size_t>(r - A - 1);
                const bool forced = r == A + B;
                const double keep_walking =
                    forced ? 0.0 : theta * last_hop[r + 1][g] + (1.0 - theta) * v[ri + 1][g];
                double acc = 0.0;
                for (std::size_t i = 0; i < tables.n_w; ++i) {
                    double place = 0.0;
                    for (std::size_t j = 0; j < M; ++j) {
                        const double c = dep.xi_o * tables.outage[r][j][i] + dep.xi_r +
                                         v0[std::max(j + 1, g)];
                        if (j == 0 || c < place) place = c;
                    }
                    acc += pmf.probs[i] * (forced ? place : std::min(place, keep_walking));
                }
                v_next[ri][g] = acc;
            }
            v0_next[g] = early_end_cost(dep, [&](int k) { return last_hop[k][g]; }) + reach * v[0][g];
        }

        residual = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            residual = std::max(residual, std::abs(v0_next[g] - v0[g]));
            for (std::size_t ri = 0; ri < v.size(); ++ri)
                residual = std::max(residual, std::abs(v_next[ri][g] - v[ri][g]));
        }
        v0.swap(v0_next);
        v.swap(v_next);
        ++it;
        if (opts.observer) {
            flat.assign(v0.begin(), v0.end());
            for (const auto& row : v) flat.insert(flat.end(), row.begin(), row.end());
            opts.observer(it, flat);
        }
        if (residual < opts.tol) break;
    }

    policy.info.iterations = it;
    policy.info.residual = residual;
    policy.info.converged = residual < opts.tol;
    policy.v_zero_g = v0;
    policy.v_r_g = v;
    policy.c_th_g.assign(static_cast<std::size_t>(B - 1), std::vector<double>(G, 0.0));
    for (int r = A + 1; r < A + B; ++r) {
        const auto ri = static_cast<std::size_t>(r - A - 1);
        for (std::size_t g = 0; g < G; ++g)
            policy.c_th_g[ri][g] =
                theta * last_hop[r + 1][g] + (1.0 - theta) * v[ri + 1][g] - dep.xi_r;
    }
    return policy;
}

PlacementDecision decide_geo(const GeoSumPolicy& policy, int r, double w) {
    const auto& dep = policy.model.dep;
    check_window(dep, r);
    const auto best = min_power_cost(policy.model.channel, r, dep.delta_m, w, dep.powers, dep.xi_o);
    PlacementDecision d;
    d.score = best.cost;
    d.place = r == dep.A + dep.B || best.cost <= policy.threshold(r);
    if (d.place) {
        d.gamma = best.gamma;
        d.power_index = best.index;
    }
    return d;
}

PlacementDecision decide_geo(const GeoMaxPolicy& policy, int r, double w, double gamma_max) {
    const auto& dep = policy.model.dep;
    check_window(dep, r);
    const std::size_t g = gamma_level_index(dep, gamma_max);
    PlacementDecision d;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < dep.powers.size(); ++j) {
        const double out = outage_probability(policy.model.channel, r, dep.delta_m, dep.powers[j], w);
        const double c = dep.xi_o * out + policy.v_zero_g[std::max(j + 1, g)];
        if (j == 0 || c < d.score) {
            d.score = c;
            arg = j;
        }
    }
    d.place = r == dep.A + dep.B || d.score <= policy.c_th_g[static_cast<std::size_t>(r - dep.A - 1)][g];
    if (d.place) {
        d.gamma = dep.powers[arg];
        d.power_index = arg;
    }
    return d;
}

PowerChoice last_hop_max_power(const Model& model, int r, double w, double gamma_max) {
    const auto& dep = model.dep;
    PowerChoice best;
    for (std::size_t j = 0; j < dep.powers.size(); ++j) {
        const double c = std::max(dep.powers[j], gamma_max) +
                         dep.xi_o * outage_probability(model.channel, r, dep.delta_m, dep.powers[j], w);
        if (j == 0 || c < best.cost) best = {j, dep.powers[j], c};
    }
    return best;
}

}  // namespace asyougo
