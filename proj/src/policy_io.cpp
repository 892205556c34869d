#include "asyougo/policy_io.hpp"

#include <cmath>
#include <fstream>

namespace asyougo {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json info_to_json(const SolveInfo& i) {
    return {{"iterations", i.iterations}, {"residual", i.residual}, {"converged", i.converged}, {"tol", i.tol}};
}

SolveInfo info_from_json(const json& j) {
    SolveInfo i;
    read_opt(j, "iterations", i.iterations);
    read_opt(j, "residual", i.residual);
    read_opt(j, "converged", i.converged);
    read_opt(j, "tol", i.tol);
    return i;
}

json breakdown_to_json(const LinkBreakdown& b) {
    return {{"mean_power_mw", b.mean_power}, {"mean_hop_length", b.mean_hop_length}, {"mean_outage", b.mean_outage}};
}

LinkBreakdown breakdown_from_json(const json& j) {
    LinkBreakdown b;
    read_opt(j, "mean_power_mw", b.mean_power);
    read_opt(j, "mean_hop_length", b.mean_hop_length);
    read_opt(j, "mean_outage", b.mean_outage);
    return b;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

Model default_model() {
    Model m;
    m.channel.eta = 3.8;
    m.channel.c = std::pow(10.0, 0.00054);
    m.channel.r0 = 1.0;
    m.channel.p_rcv_min = dbm_to_mw(-88.0);
    m.channel.sigma_db = 7.0;
    m.dep.delta_m = 6.0;
    m.dep.A = 5;
    m.dep.B = 5;
    m.dep.powers.clear();
    for (double d : {-25.0, -15.0, -10.0, -5.0, 0.0}) m.dep.powers.push_back(dbm_to_mw(d));
    m.dep.theta = 0.04;
    m.dep.xi_r = 0.001;
    m.dep.xi_o = 1.0;
    m.grid = {0.1, 4.0};
    return m;
}

Model model_from_json(const json& j) { return model_from_json(j, default_model()); }

Model model_from_json(const json& j, const Model& base) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    Model m = base;
    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        read_opt(c, "eta", m.channel.eta);
        read_opt(c, "c", m.channel.c);
        read_opt(c, "r0_m", m.channel.r0);
        read_opt(c, "sigma_db", m.channel.sigma_db);
        read_opt(c, "fading", m.channel.fading);
        if (c.contains("p_rcv_min_mw")) read_opt(c, "p_rcv_min_mw", m.channel.p_rcv_min);
        else if (c.contains("p_rcv_min_dbm")) {
            double dbm = 0;
            read_opt(c, "p_rcv_min_dbm", dbm);
            m.channel.p_rcv_min = dbm_to_mw(dbm);
        }
    }
    if (j.contains("deployment")) {
        const auto& d = j.at("deployment");
        read_opt(d, "delta_m", m.dep.delta_m);
        read_opt(d, "A", m.dep.A);
        read_opt(d, "B", m.dep.B);
        read_opt(d, "theta", m.dep.theta);
        read_opt(d, "xi_r", m.dep.xi_r);
        read_opt(d, "xi_o", m.dep.xi_o);
        if (d.contains("powers_mw")) read_opt(d, "powers_mw", m.dep.powers);
        else if (d.contains("powers_dbm")) {
            std::vector<double> dbm;
            read_opt(d, "powers_dbm", dbm);
            m.dep.powers.clear();
            for (double x : dbm) m.dep.powers.push_back(dbm_to_mw(x));
        }
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        read_opt(g, "step_db", m.grid.step_db);
        read_opt(g, "range_mult", m.grid.range_mult);
    }
    try {
        m.channel.validate();
        m.dep.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(m.grid.step_db > 0) || !(m.grid.range_mult > 0)) throw ConfigError("grid step and range must be positive");
    return m;
}

json model_to_json(const Model& m) {
    return {{"channel",
             {{"eta", m.channel.eta},
              {"c", m.channel.c},
              {"r0_m", m.channel.r0},
              {"p_rcv_min_mw", m.channel.p_rcv_min},
              {"sigma_db", m.channel.sigma_db},
              {"fading", m.channel.fading}}},
            {"deployment",
             {{"delta_m", m.dep.delta_m},
              {"A", m.dep.A},
              {"B", m.dep.B},
              {"powers_mw", m.dep.powers},
              {"theta", m.dep.theta},
              {"xi_r", m.dep.xi_r},
              {"xi_o", m.dep.xi_o}}},
            {"grid", {{"step_db", m.grid.step_db}, {"range_mult", m.grid.range_mult}}}};
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return model_from_json(j);
}

json policy_to_json(const AnyPolicy& p) {
    json doc = {{"format", "asyougo-policy"}, {"version", kPolicyFormatVersion}, {"kind", kind_name(p)},
                {"model", model_to_json(model_of(p))}};
    std::visit(overloaded{
                   [&](const GeoSumPolicy& x) {
                       doc["solver"] = info_to_json(x.info);
                       doc["values"] = {{"v_zero", x.v_zero}, {"v_r", x.v_r}, {"c_th", x.c_th}};
                   },
                   [&](const GeoMaxPolicy& x) {
                       doc["solver"] = info_to_json(x.info);
                       doc["values"] = {{"v_zero_g", x.v_zero_g}, {"v_r_g", x.v_r_g}, {"c_th_g", x.c_th_g}};
                   },
                   [&](const BtSumPolicy& x) {
                       doc["solver"] = info_to_json(x.info);
                       doc["values"] = {{"j_z", x.j_z}, {"v_bar", x.v_bar}};
                   },
                   [&](const BtMaxPolicy& x) {
                       doc["solver"] = info_to_json(x.info);
                       doc["values"] = {{"j_z_g", x.j_z_g}, {"v_bar_g", x.v_bar_g}};
                   },
                   [&](const AvgPolicy& x) {
                       doc["solver"] = {{"iterations", x.iterations}, {"converged", x.converged}};
                       doc["values"] = {{"lambda_star", x.lambda_star},
                                        {"iteration_history", x.iteration_history},
                                        {"breakdown", breakdown_to_json(x.breakdown)}};
                   },
                   [&](const HeuristicPolicy& x) {
                       doc["solver"] = json::object();
                       doc["values"] = {{"lambda", x.lambda}, {"breakdown", breakdown_to_json(x.breakdown)}};
                   },
               },
               p);
    return doc;
}

AnyPolicy policy_from_json(const json& doc) {
    try {
        if (doc.value("format", "") != "asyougo-policy") throw ConfigError("not a policy document");
        if (doc.value("version", 0) != kPolicyFormatVersion)
            throw ConfigError("unsupported policy version " + doc.value("version", json(0)).dump());
        const std::string kind = doc.at("kind").get<std::string>();
        const Model model = model_from_json(doc.at("model"));
        const json& v = doc.at("values");
        const json solver = doc.value("solver", json::object());
        if (kind == "geo-sum") {
            GeoSumPolicy p{model, v.at("v_r").get<std::vector<double>>(), v.at("v_zero").get<double>(),
                           v.at("c_th").get<std::vector<double>>(), info_from_json(solver)};
            if (p.c_th.size() + 1 != static_cast<std::size_t>(model.dep.B)) throw ConfigError("c_th has the wrong length");
            return p;
        }
        if (kind == "geo-max") {
            GeoMaxPolicy p{model, v.at("v_r_g").get<std::vector<std::vector<double>>>(),
                           v.at("v_zero_g").get<std::vector<double>>(),
                           v.at("c_th_g").get<std::vector<std::vector<double>>>(), info_from_json(solver)};
            if (p.v_zero_g.size() != model.dep.powers.size() + 1) throw ConfigError("v_zero_g has the wrong length");
            return p;
        }
        if (kind == "bt-sum") {
            BtSumPolicy p{model, v.at("j_z").get<std::vector<double>>(), v.at("v_bar").get<double>(),
                          info_from_json(solver)};
            if (p.j_z.size() != static_cast<std::size_t>(model.dep.B)) throw ConfigError("j_z has the wrong length");
            return p;
        }
        if (kind == "bt-max") {
            BtMaxPolicy p{model, v.at("j_z_g").get<std::vector<std::vector<double>>>(),
                          v.at("v_bar_g").get<std::vector<double>>(), info_from_json(solver)};
            if (p.j_z_g.size() != static_cast<std::size_t>(model.dep.B)) throw ConfigError("j_z_g has the wrong length");
            return p;
        }
        if (kind == "average-cost") {
            AvgPolicy p;
            p.model = model;
            p.lambda_star = v.at("lambda_star").get<double>();
            read_opt(v, "iteration_history", p.iteration_history);
            read_opt(solver, "iterations", p.iterations);
            read_opt(solver, "converged", p.converged);
            if (v.contains("breakdown")) p.breakdown = breakdown_from_json(v.at("breakdown"));
            return p;
        }
        if (kind == "heuristic") {
            HeuristicPolicy p;
            p.model = model;
            read_opt(v, "lambda", p.lambda);
            if (v.contains("breakdown")) p.breakdown = breakdown_from_json(v.at("breakdown"));
            return p;
        }
        throw ConfigError("unknown policy kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed policy document: ") + e.what());
    }
}

void save_policy(const AnyPolicy& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << policy_to_json(p).dump(2) << '\n';
}

AnyPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open policy file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return policy_from_json(j);
}

}  // namespace asyougo
