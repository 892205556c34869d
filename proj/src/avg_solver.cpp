#include "asyougo/avg_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "asyougo/geo_solvers.hpp"

namespace asyougo {

namespace {

void check_window_vec(const DeploymentParams& dep, std::span<const double> w_vec, const char* who) {
    if (w_vec.size() != static_cast<std::size_t>(dep.B))
        throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(dep.B) +
                                    " shadowing values, got " + std::to_string(w_vec.size()));
    for (double w : w_vec)
        if (!(w > 0) || !std::isfinite(w))
            throw std::invalid_argument(std::string(who) + ": shadowing values must be positive");
}

// Sorted keys of one offset with suffix masses, for P(key > x) and P(key >= x).
struct Survival {
    std::vector<double> keys;
    std::vector<double> tail;  // tail[k] = mass of keys[k..]

    Survival(const std::vector<double>& key, const std::vector<double>& probs) {
        std::vector<std::size_t> order(key.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
        keys.resize(order.size());
        tail.assign(order.size() + 1, 0.0);
        for (std::size_t k = 0; k < order.size(); ++k) keys[k] = key[order[k]];
        for (std::size_t k = order.size(); k-- > 0;) tail[k] = tail[k + 1] + probs[order[k]];
    }
    double greater(double x) const {
        return tail[static_cast<std::size_t>(std::upper_bound(keys.begin(), keys.end(), x) - keys.begin())];
    }
    double greater_eq(double x) const {
        return tail[static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), x) - keys.begin())];
    }
};

FactoredRule keyed(const ScoreDistribution& scores, auto&& f) {
    FactoredRule rule;
    rule.key.resize(scores.score.size());
    for (std::size_t a = 0; a < scores.score.size(); ++a) {
        const int u = scores.first_offset + static_cast<int>(a);
        rule.key[a].resize(scores.score[a].size());
        for (std::size_t i = 0; i < scores.score[a].size(); ++i) rule.key[a][i] = f(scores.score[a][i], u);
    }
    return rule;
}

template <typename Key>
OffsetChoice first_min(std::span<const double> w_vec, const ChannelParams& ch, const DeploymentParams& dep,
                       Key&& key) {
    OffsetChoice out;
    double best = 0.0;
    for (std::size_t a = 0; a < w_vec.size(); ++a) {
        const int u = dep.A + 1 + static_cast<int>(a);
        const auto pc = min_power_cost(ch, u, dep.delta_m, w_vec[a], dep.powers, dep.xi_o);
        const double k = key(pc.cost, u);
        if (a == 0 || k < best) {
            best = k;
            out = {u, pc.gamma, pc.index};
        }
    }
    return out;
}

}  // namespace

ScoreDistribution ScoreDistribution::build(const Model& model, const ShadowingPmf& pmf) {
    model.channel.validate();
    model.dep.validate();
    pmf.validate();
    const auto& dep = model.dep;
    const auto tables = LinkTables::build(model.channel, dep, pmf, dep.A + dep.B);
    ScoreDistribution s;
    s.first_offset = dep.A + 1;
    s.powers = dep.powers;
    s.probs = pmf.probs;
    for (int u = dep.A + 1; u <= dep.A + dep.B; ++u) {
        std::vector<double> sc(tables.n_w), out(tables.n_w);
        std::vector<std::size_t> idx(tables.n_w);
        for (std::size_t i = 0; i < tables.n_w; ++i) {
            const auto& b = tables.best[u][i];
            sc[i] = b.cost;
            idx[i] = b.index;
            out[i] = tables.outage[u][b.index][i];
        }
        s.score.push_back(std::move(sc));
        s.power_index.push_back(std::move(idx));
        s.outage.push_back(std::move(out));
    }
    return s;
}

RenewalEvaluation evaluate_stationary_avg(const FactoredRule& rule, const ScoreDistribution& scores,
                                          const Model& model) {
    const std::size_t B = scores.score.size();
    if (rule.key.size() != B) throw std::invalid_argument("evaluate_stationary_avg: rule/offset count mismatch");
    std::vector<Survival> surv;
    surv.reserve(B);
    for (std::size_t a = 0; a < B; ++a) {
        if (rule.key[a].size() != scores.probs.size())
            throw std::invalid_argument("evaluate_stationary_avg: key row has the wrong length");
        surv.emplace_back(rule.key[a], scores.probs);
    }

    double mass = 0.0, cost = 0.0, len = 0.0, power = 0.0, outage = 0.0;
    for (std::size_t a = 0; a < B; ++a) {
        const double u = static_cast<double>(scores.first_offset) + static_cast<double>(a);
        for (std::size_t i = 0; i < scores.probs.size(); ++i) {
            const double x = rule.key[a][i];
            double b = scores.probs[i];
            for (std::size_t c = 0; c < B && b > 0; ++c) {
                if (c < a) b *= surv[c].greater(x);
                else if (c > a) b *= surv[c].greater_eq(x);
            }
            mass += b;
            cost += b * scores.score[a][i];
            len += b * u;
            power += b * scores.powers[scores.power_index[a][i]];
            outage += b * scores.outage[a][i];
        }
    }
    RenewalEvaluation ev;
    ev.mean_cycle_cost = model.dep.xi_r + cost / mass;
    ev.mean_cycle_length = len / mass;
    ev.lambda = ev.mean_cycle_cost / ev.mean_cycle_length;
    ev.breakdown = {power / mass, len / mass, outage / mass};
    return ev;
}

RenewalEvaluation evaluate_stationary_avg(const ExplicitRule& rule, const Model& model,
                                          const ShadowingPmf& pmf) {
    const auto& dep = model.dep;
    const std::size_t n = pmf.size();
    double total = 1.0;
    for (int k = 0; k < dep.B; ++k) total *= static_cast<double>(n);
    if (total > 1e6) throw std::invalid_argument("evaluate_stationary_avg: window space too large to enumerate");
    const auto count = static_cast<std::size_t>(total);
    if (rule.u.size() != count || rule.power_index.size() != count)
        throw std::invalid_argument("evaluate_stationary_avg: explicit rule needs one action per window vector");
    const auto tables = LinkTables::build(model.channel, dep, pmf, dep.A + dep.B);

    std::vector<std::size_t> digits(static_cast<std::size_t>(dep.B));
    double cost = 0.0, len = 0.0, power = 0.0, outage = 0.0;
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rest = idx;
        for (int k = dep.B - 1; k >= 0; --k) {
            digits[k] = rest % n;
            rest /= n;
        }
        double g = 1.0;
        for (auto d : digits) g *= pmf.probs[d];
        const int u = rule.u[idx];
        const std::size_t j = rule.power_index[idx];
        if (u < dep.A + 1 || u > dep.A + dep.B || j >= dep.powers.size())
            throw std::invalid_argument("evaluate_stationary_avg: action out of range");
        const double out = tables.outage[u][j][digits[u - dep.A - 1]];
        cost += g * (dep.powers[j] + dep.xi_o * out);
        len += g * u;
        power += g * dep.powers[j];
        outage += g * out;
    }
    RenewalEvaluation ev;
    ev.mean_cycle_cost = dep.xi_r + cost;
    ev.mean_cycle_length = len;
    ev.lambda = ev.mean_cycle_cost / len;
    ev.breakdown = {power, len, outage};
    return ev;
}

FactoredRule lambda_rule(const ScoreDistribution& scores, double lambda) {
    return keyed(scores, [lambda](double m, int u) { return m - lambda * u; });
}

FactoredRule heuristic_rule(const ScoreDistribution& scores, double xi_r) {
    return keyed(scores, [xi_r](double m, int u) { return (m + xi_r) / u; });
}

FactoredRule threshold_rule(const ScoreDistribution& scores, std::span<const double> thresholds) {
    const std::size_t B = scores.score.size();
    if (thresholds.size() + 1 != B) throw std::invalid_argument("threshold_rule: need B-1 thresholds");
    FactoredRule rule;
    rule.key.resize(B);
    for (std::size_t a = 0; a < B; ++a) {
        rule.key[a].resize(scores.score[a].size());
        for (std::size_t i = 0; i < scores.score[a].size(); ++i)
            rule.key[a][i] = (a + 1 == B || scores.score[a][i] <= thresholds[a]) ? 0.0 : 1.0;
    }
    return rule;
}

AvgPolicy policy_iteration_avg(const Model& model, const ShadowingPmf& pmf, int max_iter) {
    if (max_iter < 1) throw std::invalid_argument("policy_iteration_avg: max_iter must be positive");
    const auto scores = ScoreDistribution::build(model, pmf);
    const auto& dep = model.dep;

    AvgPolicy p;
    p.model = model;
    // always place at A+B
    const auto& last = scores.score.back();
    double em = 0.0;
    for (std::size_t i = 0; i < last.size(); ++i) em += scores.probs[i] * last[i];
    double lambda = (dep.xi_r + em) / (dep.A + dep.B);
    p.iteration_history.push_back(lambda);

    // Exact arithmetic gives a strictly decreasing sequence until the rule
    // repeats. In floating point a fixed point can show up as a 1-ulp
    // two-cycle, so stop at the first step that does not decrease.
    RenewalEvaluation ev, best;
    for (int k = 0; k < max_iter; ++k) {
        ev = evaluate_stationary_avg(lambda_rule(scores, lambda), scores, model);
        p.iterations = k + 1;
        p.iteration_history.push_back(ev.lambda);
        if (k == 0 || ev.lambda < best.lambda) best = ev;
        if (ev.lambda >= lambda) {
            p.converged = true;
            break;
        }
        lambda = ev.lambda;
    }
    p.lambda_star = best.lambda;
    p.breakdown = best.breakdown;
    return p;
}

OffsetChoice decide_avg(const AvgPolicy& policy, std::span<const double> w_vec) {
    const auto& dep = policy.model.dep;
    check_window_vec(dep, w_vec, "decide_avg");
    const double lambda = policy.lambda_star;
    return first_min(w_vec, policy.model.channel, dep, [lambda](double m, int u) { return m - lambda * u; });
}

OffsetChoice heuristic_decide(std::span<const double> w_vec, const ChannelParams& channel,
                              const DeploymentParams& dep) {
    check_window_vec(dep, w_vec, "heuristic_decide");
    const double xi_r = dep.xi_r;
    return first_min(w_vec, channel, dep, [xi_r](double m, int u) { return (m + xi_r) / u; });
}

HeuristicPolicy make_heuristic_policy(const Model& model, const ShadowingPmf& pmf) {
    const auto scores = ScoreDistribution::build(model, pmf);
    const auto ev = evaluate_stationary_avg(heuristic_rule(scores, model.dep.xi_r), scores, model);
    return {model, ev.lambda, ev.breakdown};
}

std::vector<double> default_theta_sequence() { return {0.01, 0.005, 0.002, 0.001}; }

NoBacktrackingAverage average_cost_no_backtracking(const Model& model, const ShadowingPmf& pmf,
                                                   std::span<const double> theta_sequence) {
    NoBacktrackingAverage out;
    if (theta_sequence.empty()) out.thetas = default_theta_sequence();
    else out.thetas.assign(theta_sequence.begin(), theta_sequence.end());
    for (std::size_t k = 0; k < out.thetas.size(); ++k) {
        const double t = out.thetas[k];
        if (!(t > 0 && t < 1)) throw std::invalid_argument("theta sequence entries must lie in (0,1)");
        if (k > 0 && !(t < out.thetas[k - 1]))
            throw std::invalid_argument("theta sequence must be strictly decreasing");
    }

    for (double t : out.thetas) {
        Model m = model;
        m.dep.theta = t;
        out.scaled_values.push_back(t * solve_geo_sum(m, pmf).v_zero);
    }
    const std::size_t n = out.thetas.size();
    if (n == 1) {
        out.lambda_prime = out.scaled_values[0];
    } else {
        const double t1 = out.thetas[n - 2], t2 = out.thetas[n - 1];
        const double f1 = out.scaled_values[n - 2], f2 = out.scaled_values[n - 1];
        out.lambda_prime = (t1 * f2 - t2 * f1) / (t1 - t2);
    }

    const auto scores = ScoreDistribution::build(model, pmf);
    const auto& dep = model.dep;
    const std::size_t B = scores.score.size();
    double em = 0.0;
    for (std::size_t i = 0; i < scores.probs.size(); ++i) em += scores.probs[i] * scores.score[B - 1][i];
    double lambda = (dep.xi_r + em) / (dep.A + dep.B);
    std::vector<double> th(B - 1);
    for (int k = 0; k < 100; ++k) {
        // optimal stopping of m(r, w) - lambda r over the window
        double cont = 0.0;
        for (std::size_t i = 0; i < scores.probs.size(); ++i)
            cont += scores.probs[i] * (scores.score[B - 1][i] - lambda * (dep.A + dep.B));
        for (std::size_t a = B - 1; a-- > 0;) {
            const double r = static_cast<double>(scores.first_offset) + static_cast<double>(a);
            th[a] = cont + lambda * r;
            double next = 0.0;
            for (std::size_t i = 0; i < scores.probs.size(); ++i)
                next += scores.probs[i] * std::min(scores.score[a][i] - lambda * r, cont);
            cont = next;
        }
        const double ev = evaluate_stationary_avg(threshold_rule(scores, th), scores, model).lambda;
        out.exact_iterations = k + 1;
        if (ev >= lambda) {
            lambda = std::min(lambda, ev);
            break;
        }
        lambda = ev;
    }
    out.lambda_prime_exact = lambda;
    return out;
}

}  // namespace asyougo
