#pragma once

#include <cstddef>
#include <vector>

#include "asyougo/channel.hpp"
#include "asyougo/solve_options.hpp"

namespace asyougo {

/// Sum-power objective, geometric line length, no backtracking.
///
/// Tables are indexed by (r - A - 1): v_r covers r = A+1..A+B and c_th covers
/// r = A+1..A+B-1.
struct GeoSumPolicy {
    Model model;
    std::vector<double> v_r;
    double v_zero = 0.0;
    std::vector<double> c_th;
    SolveInfo info;

    double threshold(int r) const;
};

/// Max-power objective, geometric line length, no backtracking.
///
/// The second index runs over gamma_max levels {0} u S, with 0 at index 0 and
/// powers[j] at index j + 1.
struct GeoMaxPolicy {
    Model model;
    std::vector<std::vector<double>> v_r_g;
    std::vector<double> v_zero_g;
    std::vector<std::vector<double>> c_th_g;
    SolveInfo info;

    double threshold(int r, double gamma_max) const;
};

struct PlacementDecision {
    bool place = false;
    double gamma = 0.0;            // mW, meaningful iff place
    std::size_t power_index = 0;   // into DeploymentParams::powers
    double score = 0.0;            // placement score compared to the threshold
};

/// gamma_max level index for a value that is 0 or a member of the power set.
std::size_t gamma_level_index(const DeploymentParams& dep, double gamma_max);
double gamma_level_value(const DeploymentParams& dep, std::size_t level);

/// Reduced function iteration on (V(r), V(0)). Observer values are
/// [V(0), V(A+1), ..., V(A+B)]. Requires 0 < theta < 1.
GeoSumPolicy solve_geo_sum(const Model& model, const ShadowingPmf& pmf,
                           const SolveOptions& opts = {});

/// Reduced iteration on V(r; gamma_max), V(0; gamma_max). Observer values are
/// the V(0; .) levels followed by the V(r; .) rows.
GeoMaxPolicy solve_geo_max(const Model& model, const ShadowingPmf& pmf,
                           const SolveOptions& opts = {});

/// Threshold rule: place iff min_gamma(gamma + xi_o P_out) <= c_th(r);
/// forced placement at r = A+B.
PlacementDecision decide_geo(const GeoSumPolicy& policy, int r, double w);

/// Threshold rule with the gamma_max coupling:
/// score = min_gamma(xi_o P_out(r, gamma, w) + V(0; max(gamma, gamma_max))).
PlacementDecision decide_geo(const GeoMaxPolicy& policy, int r, double w, double gamma_max);

/// Power the source uses on the final hop under the max-power objective:
/// argmin max(gamma, gamma_max) + xi_o P_out(r, gamma, w).
PowerChoice last_hop_max_power(const Model& model, int r, double w, double gamma_max);

}  // namespace asyougo
