#pragma once

#include <string>
#include <variant>

#include "asyougo/avg_solver.hpp"
#include "asyougo/bt_solvers.hpp"
#include "asyougo/geo_solvers.hpp"

namespace asyougo {

using AnyPolicy =
    std::variant<GeoSumPolicy, GeoMaxPolicy, BtSumPolicy, BtMaxPolicy, AvgPolicy, HeuristicPolicy>;

// "geo-sum", "geo-max", "bt-sum", "bt-max", "average-cost", "heuristic"
std::string kind_name(const AnyPolicy& p);
const Model& model_of(const AnyPolicy& p);

/// Window-based policies decide after B measurements; the rest decide per step.
bool uses_backtracking(const AnyPolicy& p);
/// Max-power policies track gamma_max and charge the largest power once.
bool is_max_power(const AnyPolicy& p);
/// Average-cost variants assume an infinite line.
bool is_infinite_line(const AnyPolicy& p);

}  // namespace asyougo
