#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asyougo/channel.hpp"

namespace asyougo {

/// Per-link averages of a stationary placement rule on the infinite line.
struct LinkBreakdown {
    double mean_power = 0.0;        // mW per link
    double mean_hop_length = 0.0;   // steps
    double mean_outage = 0.0;       // probability per link
};

/// Average-cost-per-step policy with backtracking. The decision rule is fully
/// determined by lambda_star: argmin over (u, gamma) of
/// gamma + xi_o P_out(u, gamma, w_u) + xi_r - lambda_star * u.
struct AvgPolicy {
    Model model;
    double lambda_star = 0.0;
    std::vector<double> iteration_history;  // lambda_1, lambda_2, ...
    int iterations = 0;
    bool converged = false;
    LinkBreakdown breakdown;  // under the final rule
};

/// The model-free rule: argmin over (u, gamma) of
/// (gamma + xi_o P_out(u, gamma, w_u) + xi_r) / u.
struct HeuristicPolicy {
    Model model;
    double lambda = 0.0;  // its exact renewal-reward average cost
    LinkBreakdown breakdown;
};

/// Per-offset distributions of the minimized link score
/// min_gamma(gamma + xi_o P_out(u, gamma, W)) with the argmin power per atom.
struct ScoreDistribution {
    int first_offset = 0;                              // A + 1
    std::vector<std::vector<double>> score;            // [u - A - 1][i]
    std::vector<std::vector<std::size_t>> power_index; // [u - A - 1][i]
    std::vector<std::vector<double>> outage;           // at the argmin power
    std::vector<double> powers;                        // mW
    std::vector<double> probs;                         // shared atom weights

    static ScoreDistribution build(const Model& model, const ShadowingPmf& pmf);
};

/// A per-offset-score rule: each offset u gets a key over the shadowing grid
/// and the rule places at the smallest u whose key attains the minimum, with
/// the per-atom argmin power.
struct FactoredRule {
    std::vector<std::vector<double>> key;  // [u - A - 1][i]
};

/// Result of a renewal-reward evaluation.
struct RenewalEvaluation {
    double lambda = 0.0;
    double mean_cycle_cost = 0.0;    // xi_r + E[power + xi_o outage]
    double mean_cycle_length = 0.0;  // E[u]
    LinkBreakdown breakdown;
};

/// An explicit rule on a tiny instance: action for every window vector. Index
/// of a window vector is sum_k i_k * |W|^(B-1-k) (first offset most
/// significant).
struct ExplicitRule {
    std::vector<int> u;                  // offsets A+1..A+B
    std::vector<std::size_t> power_index;
};

/// Policy iteration with factored evaluation. Starts from "always place at
/// A+B with the per-w argmin power" and stops when two consecutive lambdas
/// are exactly equal.
AvgPolicy policy_iteration_avg(const Model& model, const ShadowingPmf& pmf, int max_iter = 100);

/// Exact renewal-reward evaluation of a factored rule.
RenewalEvaluation evaluate_stationary_avg(const FactoredRule& rule, const ScoreDistribution& scores,
                                          const Model& model);

/// Renewal-reward evaluation by enumerating all |W|^B window vectors. Rejects
/// instances with more than 10^6 vectors.
RenewalEvaluation evaluate_stationary_avg(const ExplicitRule& rule, const Model& model,
                                          const ShadowingPmf& pmf);

/// Factored form of the lambda-rule: key_u(w) = score_u(w) - lambda * u.
FactoredRule lambda_rule(const ScoreDistribution& scores, double lambda);

/// Factored form of the heuristic: key_u(w) = (score_u(w) + xi_r) / u.
FactoredRule heuristic_rule(const ScoreDistribution& scores, double xi_r);

/// Factored form of a no-backtracking threshold rule replayed on a measured
/// window: place at the first u with score_u(w_u) <= thresholds[u - A - 1],
/// forced at A+B. thresholds has B-1 entries.
FactoredRule threshold_rule(const ScoreDistribution& scores, std::span<const double> thresholds);

struct OffsetChoice {
    int u = 0;
    double gamma = 0.0;
    std::size_t power_index = 0;
};

/// Decision of the lambda-rule for a measured window (any positive w values).
OffsetChoice decide_avg(const AvgPolicy& policy, std::span<const double> w_vec);

/// Decision of the model-free heuristic for a measured window.
OffsetChoice heuristic_decide(std::span<const double> w_vec, const ChannelParams& channel,
                              const DeploymentParams& dep);

HeuristicPolicy make_heuristic_policy(const Model& model, const ShadowingPmf& pmf);

/// Average cost per step without backtracking, as the small-theta limit of
/// theta * J_theta(0) of the sum-power geometric problem.
struct NoBacktrackingAverage {
    double lambda_prime = 0.0;           // two-point Richardson extrapolation
    std::vector<double> thetas;
    std::vector<double> scaled_values;   // theta * v_zero(theta)
    /// Exact optimum over no-backtracking stopping rules on the infinite line
    /// (ratio iteration: optimal stopping at lambda_k, renewal re-evaluation,
    /// until lambda repeats). Free of extrapolation error.
    double lambda_prime_exact = 0.0;
    int exact_iterations = 0;
};

NoBacktrackingAverage average_cost_no_backtracking(const Model& model, const ShadowingPmf& pmf,
                                                   std::span<const double> theta_sequence = {});

std::vector<double> default_theta_sequence();

}  // namespace asyougo
