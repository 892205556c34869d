#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asyougo/policy.hpp"

namespace asyougo {

enum class LineKind { geometric, fixed, infinite };

struct LineModel {
    LineKind kind = LineKind::geometric;
    double theta = 0.04;      // geometric
    long length = 0;          // fixed, steps (>= 1)
    long horizon = 1'000'000; // infinite, steps (>= A+B)

    static LineModel geometric(double theta) { return {LineKind::geometric, theta, 0, 0}; }
    static LineModel fixed(long steps) { return {LineKind::fixed, 0.0, steps, 0}; }
    static LineModel infinite(long horizon) { return {LineKind::infinite, 0.0, 0, horizon}; }
};

/// One deployed link. tx is the new node (relay or source), rx the node it
/// transmits to; positions are steps from the sink at 0.
struct LinkRecord {
    long tx = 0;
    long rx = 0;
    double w = 1.0;
    std::size_t power_index = 0;
    double gamma = 0.0;   // mW
    double outage = 0.0;
    bool source = false;
};

struct TraceTotals {
    double sum_power = 0.0;   // mW
    double max_power = 0.0;   // mW
    double sum_outage = 0.0;
    int relay_count = 0;
    double cost_sum = 0.0;    // sum power + xi_o sum outage + xi_r N
    double cost_max = 0.0;    // max power + xi_o sum outage + xi_r N
};

/// One shadowing measurement in the order the operative takes it.
struct MeasurementEvent {
    long from = 0;   // last placed node
    long at = 0;     // measuring position
    double w = 1.0;
};

struct DeploymentTrace {
    std::vector<LinkRecord> links;  // in placement order; source link last if any
    long line_length = -1;          // -1 on the infinite line
    long source_position = -1;
    std::vector<MeasurementEvent> measurements;
    TraceTotals totals;
    long steps_covered = 0;         // infinite line: position of the last complete cycle
};

/// Recomputes totals from the link list.
TraceTotals compute_totals(const std::vector<LinkRecord>& links, const DeploymentParams& dep);

struct DeploymentStats {
    int n_runs = 0;
    // per-run network cost; half-widths are 1.96 standard errors
    double mean_cost = 0.0;          // under the policy's own objective
    double cost_std_error = 0.0;
    double mean_cost_sum = 0.0;
    double cost_sum_half_width = 0.0;
    double mean_cost_max = 0.0;
    double cost_max_half_width = 0.0;
    double mean_relays = 0.0;
    // per-link averages
    long n_links = 0;
    double mean_power_per_link = 0.0;
    double mean_hop_length = 0.0;
    double mean_outage_per_link = 0.0;
    bool relay_links_only = false;
    // infinite line
    double cost_per_step = 0.0;
    double cost_per_step_std_error = 0.0;
    long n_cycles = 0;
};

struct SimulateOptions {
    std::uint64_t seed = 1;
    int n_runs = 1000;
    int threads = 0;               // 0 = hardware concurrency
    bool keep_traces = false;
    bool relay_links_only = false; // cost breakdown mode
};

struct SimulationResult {
    DeploymentStats stats;
    std::vector<DeploymentTrace> traces;  // filled iff keep_traces
    std::vector<double> run_costs;        // per-run cost under the policy objective
};

/// Counter-based shadowing draw for link (from, at) of run `run`. The same
/// (seed, run, from, at) always yields the same w, so different policies see
/// the same channel.
double sample_shadowing(const ShadowingPmf& pmf, std::uint64_t seed, std::uint64_t run, long from, long at);
long sample_line_length(const LineModel& line, std::uint64_t seed, std::uint64_t run);

/// One deployment walk.
DeploymentTrace simulate_run(const AnyPolicy& policy, const LineModel& line, const ShadowingPmf& pmf,
                             std::uint64_t seed, std::uint64_t run);

SimulationResult simulate(const AnyPolicy& policy, const LineModel& line, const ShadowingPmf& pmf,
                          const SimulateOptions& opts);

/// Per-link averages over all deployed links of the traces.
DeploymentStats cost_breakdown(const std::vector<DeploymentTrace>& traces, bool relay_links_only = false);

/// One CSV row per link: run,tx,rx,w,gamma_mw,outage,source
std::string traces_to_csv(const std::vector<DeploymentTrace>& traces);

}  // namespace asyougo
