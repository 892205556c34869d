#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace asyougo {

/// Physical-layer parameters of the path-loss / shadowing / fading model.
///
/// Received power on a link of length d meters with transmit power P is
/// P * c * (d / r0)^(-eta) * H * W, where H is unit-mean exponential fading
/// and W the (lognormal) shadowing factor.
struct ChannelParams {
    double eta = 3.8;
    double c = 1.0;           // linear reference gain
    double r0 = 1.0;          // meters
    double p_rcv_min = 1e-9;  // mW
    double sigma_db = 7.0;
    std::string fading = "exponential";

    void validate() const;
};

/// Discrete shadowing law: ordered support of linear w values and their
/// probabilities.
struct ShadowingPmf {
    std::vector<double> support;
    std::vector<double> probs;
    /// dB value of each support point (10*log10(w)), kept so expectations of
    /// the dB variable can be taken without round-tripping through log10.
    std::vector<double> support_db;

    std::size_t size() const { return support.size(); }
    void validate() const;
};

/// Shape of the deployment decision problem.
struct DeploymentParams {
    double delta_m = 6.0;
    int A = 5;
    int B = 5;
    std::vector<double> powers;  // mW, strictly ascending
    double theta = 0.04;
    double xi_r = 0.001;
    double xi_o = 1.0;

    int window_end() const { return A + B; }
    std::size_t num_powers() const { return powers.size(); }
    void validate() const;
};

/// Quantization of the lognormal shadowing distribution.
struct GridSpec {
    double step_db = 0.1;
    double range_mult = 4.0;
};

/// Everything a solver, simulator or session needs about the environment.
struct Model {
    ChannelParams channel;
    DeploymentParams dep;
    GridSpec grid;

    ShadowingPmf pmf() const;
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// Uniform dB grid over [-range_mult*sigma, +range_mult*sigma], Gaussian
/// weights renormalized to one. sigma_db == 0 gives the point mass at w = 1.
ShadowingPmf quantize_shadowing(double sigma_db, double step_db, double range_mult);

/// Outage probability of a link r_steps long (each step delta_m meters) when
/// transmitting at gamma mW under shadowing w, with Rayleigh fading:
/// 1 - exp(-p_rcv_min * (r/r0)^eta / (gamma * c * w)).
double outage_probability(const ChannelParams& ch, int r_steps, double delta_m, double gamma,
                          double w);

struct PowerChoice {
    std::size_t index = 0;  // into the power set
    double gamma = 0.0;     // mW
    double cost = 0.0;
};

/// argmin over the power set of gamma + xi_o * P_out(r, gamma, w); ties go to
/// the lowest power.
PowerChoice min_power_cost(const ChannelParams& ch, int r_steps, double delta_m, double w,
                           std::span<const double> powers, double xi_o);

/// Per-link cost tables over a shadowing grid.
///
/// outage[r][j][i] = P_out(r, powers[j], support[i]) for r in 1..A+B (row 0
/// unused), and best[r][i] = min_power_cost at (r, support[i]). All solvers
/// read these tables so every path sees bit-identical per-link costs.
struct LinkTables {
    int max_r = 0;
    std::size_t n_w = 0;
    std::size_t n_p = 0;
    std::vector<std::vector<std::vector<double>>> outage;
    std::vector<std::vector<PowerChoice>> best;

    static LinkTables build(const ChannelParams& ch, const DeploymentParams& dep,
                            const ShadowingPmf& pmf, int max_r);

    /// gamma + xi_o * P_out for one entry.
    double link_cost(const DeploymentParams& dep, int r, std::size_t j, std::size_t i) const {
        return dep.powers[j] + dep.xi_o * outage[r][j][i];
    }
};

/// Expected last-hop cost E_W min_gamma(gamma + xi_o P_out(r, gamma, W)).
double expected_last_hop(const LinkTables& t, const ShadowingPmf& pmf, int r);

/// Recovers the shadowing realization from a fading-averaged received power
/// measurement: w = Prcv_mean / (P_T * c * (d/r0)^-eta), E[H] = 1.
double shadowing_from_rssi(const ChannelParams& ch, int r_steps, double delta_m,
                           double rssi_dbm, double probe_power_dbm);

}  // namespace asyougo
