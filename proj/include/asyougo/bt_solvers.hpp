#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asyougo/channel.hpp"
#include "asyougo/solve_options.hpp"

namespace asyougo {

/// A finite discrete distribution: values[i] carries mass probs[i]. Values
/// need not be sorted or distinct.
struct DiscreteDist {
    std::vector<double> values;
    std::vector<double> probs;
};

/// E[min_i X_i] for independent X_i, evaluated exactly from the merged sorted
/// supports: E[min] = v_0 + sum_k P(min >= v_k) (v_k - v_{k-1}).
double expected_min_independent(std::span<const DiscreteDist> dists);

/// Sum-power objective with backtracking. j_z[z] = J(z; 0) for z = 0..B-1 and
/// v_bar is the expectation of J over measured window vectors.
struct BtSumPolicy {
    Model model;
    std::vector<double> j_z;
    double v_bar = 0.0;
    SolveInfo info;
};

/// Max-power objective with backtracking; second index is the gamma_max level
/// (0 at index 0, powers[j] at j + 1).
struct BtMaxPolicy {
    Model model;
    std::vector<std::vector<double>> j_z_g;
    std::vector<double> v_bar_g;
    SolveInfo info;
};

struct BtDecision {
    int u = 0;                    // offset from the previous node, A+1..A+B
    double gamma = 0.0;           // mW
    std::size_t power_index = 0;
    double objective = 0.0;
};

/// Observer values are [V, J(0;0), ..., J(B-1;0)].
BtSumPolicy solve_bt_sum(const Model& model, const ShadowingPmf& pmf, const SolveOptions& opts = {});

/// Observer values are the V(.) levels followed by the J(z; 0; .) rows.
BtMaxPolicy solve_bt_max(const Model& model, const ShadowingPmf& pmf, const SolveOptions& opts = {});

/// Lexicographically smallest (u, gamma) minimizing
/// gamma + xi_o P_out(u, gamma, w_u) + J(A+B-u; 0). w_vec[k] is the shadowing
/// measured at offset A+1+k.
BtDecision decide_bt(const BtSumPolicy& policy, std::span<const double> w_vec);

/// Lexicographically smallest (u, gamma) minimizing
/// xi_o P_out(u, gamma, w_u) + J(A+B-u; 0; max(gamma, gamma_max)).
BtDecision decide_bt(const BtMaxPolicy& policy, std::span<const double> w_vec, double gamma_max);

}  // namespace asyougo
