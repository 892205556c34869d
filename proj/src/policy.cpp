#include "asyougo/policy.hpp"

namespace asyougo {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
}  // namespace

std::string kind_name(const AnyPolicy& p) {
    return std::visit(overloaded{
                          [](const GeoSumPolicy&) { return std::string("geo-sum"); },
                          [](const GeoMaxPolicy&) { return std::string("geo-max"); },
                          [](const BtSumPolicy&) { return std::string("bt-sum"); },
                          [](const BtMaxPolicy&) { return std::string("bt-max"); },
                          [](const AvgPolicy&) { return std::string("average-cost"); },
                          [](const HeuristicPolicy&) { return std::string("heuristic"); },
                      },
                      p);
}

const Model& model_of(const AnyPolicy& p) {
    return std::visit([](const auto& x) -> const Model& { return x.model; }, p);
}

bool uses_backtracking(const AnyPolicy& p) {
    return !std::holds_alternative<GeoSumPolicy>(p) && !std::holds_alternative<GeoMaxPolicy>(p);
}

bool is_max_power(const AnyPolicy& p) {
    return std::holds_alternative<GeoMaxPolicy>(p) || std::holds_alternative<BtMaxPolicy>(p);
}

bool is_infinite_line(const AnyPolicy& p) {
    return std::holds_alternative<AvgPolicy>(p) || std::holds_alternative<HeuristicPolicy>(p);
}

}  // namespace asyougo
