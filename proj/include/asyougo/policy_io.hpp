#pragma once

#include "json.hpp"
#include <stdexcept>
#include <string>

#include "asyougo/policy.hpp"

namespace asyougo {

/// Thrown for malformed configuration or policy documents.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kPolicyFormatVersion = 1;

/// Config document:
///   {"channel": {eta, c, r0_m, p_rcv_min_dbm | p_rcv_min_mw, sigma_db},
///    "deployment": {delta_m, A, B, powers_dbm | powers_mw, theta, xi_r, xi_o},
///    "grid": {step_db, range_mult}}
/// Missing keys keep the defaults of default_model().
Model model_from_json(const nlohmann::json& j);
Model model_from_json(const nlohmann::json& j, const Model& base);
/// Writes mW values so a round trip is exact.
nlohmann::json model_to_json(const Model& m);

Model load_model_file(const std::string& path);

/// eta 3.8, c 10^0.00054, r0 1 m, p_rcv_min -88 dBm, sigma 7 dB, delta 6 m,
/// A = B = 5, powers {-25,-15,-10,-5,0} dBm, theta 0.04, xi_r 0.001, xi_o 1,
/// 0.1 dB grid over +-4 sigma.
Model default_model();

nlohmann::json policy_to_json(const AnyPolicy& p);
AnyPolicy policy_from_json(const nlohmann::json& j);

void save_policy(const AnyPolicy& p, const std::string& path);
AnyPolicy load_policy(const std::string& path);

}  // namespace asyougo
