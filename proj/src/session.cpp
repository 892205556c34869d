#include "asyougo/session.hpp"

#include "asyougo/policy_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace asyougo {

using nlohmann::json;

int http_status(SessionErrorCode c) {
    switch (c) {
        case SessionErrorCode::bad_request: return 400;
        case SessionErrorCode::not_found: return 404;
        case SessionErrorCode::ordering: return 409;
        case SessionErrorCode::completed: return 409;
        case SessionErrorCode::mismatch: return 422;
    }
    return 500;
}

const char* code_name(SessionErrorCode c) {
    switch (c) {
        case SessionErrorCode::bad_request: return "bad_request";
        case SessionErrorCode::not_found: return "not_found";
        case SessionErrorCode::ordering: return "ordering";
        case SessionErrorCode::completed: return "completed";
        case SessionErrorCode::mismatch: return "mode_mismatch";
    }
    return "internal";
}

SessionMode parse_mode(const std::string& s) {
    if (s == "backtracking") return SessionMode::backtracking;
    if (s == "no_backtracking") return SessionMode::no_backtracking;
    throw SessionError(SessionErrorCode::bad_request, "mode must be 'backtracking' or 'no_backtracking'");
}

const char* mode_name(SessionMode m) {
    return m == SessionMode::backtracking ? "backtracking" : "no_backtracking";
}

namespace {

std::optional<double> opt_num(const json& j, const char* k) {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    if (!j.at(k).is_number()) throw SessionError(SessionErrorCode::bad_request, std::string(k) + " must be a number");
    return j.at(k).get<double>();
}

std::optional<long> opt_int(const json& j, const char* k) {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    if (!j.at(k).is_number_integer()) throw SessionError(SessionErrorCode::bad_request, std::string(k) + " must be an integer");
    return j.at(k).get<long>();
}

json totals_to_json(const TraceTotals& t) {
    return {{"sum_power_mw", t.sum_power}, {"max_power_mw", t.max_power}, {"sum_outage", t.sum_outage},
            {"relay_count", t.relay_count}, {"cost_sum_power", t.cost_sum}, {"cost_max_power", t.cost_max}};
}

}  // namespace

MeasurementReport MeasurementReport::from_json(const json& j) {
    if (!j.is_object()) throw SessionError(SessionErrorCode::bad_request, "report must be a JSON object");
    MeasurementReport r;
    r.w = opt_num(j, "w");
    r.rssi_dbm = opt_num(j, "rssi_dbm");
    r.probe_power_dbm = opt_num(j, "probe_power_dbm");
    r.position = opt_int(j, "position");
    r.seq = opt_int(j, "seq");
    return r;
}

json Instruction::to_json() const {
    if (kind == Kind::completed) return {{"action", "completed"}};
    json j = {{"action", "measure"}, {"position", position}, {"offset", offset}};
    if (end_min <= position) j["line_end_range"] = {end_min, position};
    return j;
}

json Decision::to_json() const {
    switch (kind) {
        case Kind::buffered: return {{"action", "buffered"}};
        case Kind::advance: return {{"action", "advance"}};
        case Kind::place: break;
    }
    return {{"action", "place"}, {"position", position}, {"offset", offset}, {"walk_back_steps", walk_back},
            {"gamma_mw", gamma}, {"gamma_dbm", mw_to_dbm(gamma)}, {"power_index", power_index}};
}

json ScoreReport::to_json() const {
    json c = json::array();
    for (const auto& s : candidates)
        c.push_back({{"offset", s.offset}, {"power_index", s.power_index}, {"gamma_mw", s.gamma}, {"score", s.score}});
    json j = {{"candidates", c}, {"window", window}, {"first_offset", first_offset}};
    j["threshold"] = threshold ? json(*threshold) : json(nullptr);
    return j;
}

ScoreReport candidate_scores(const AnyPolicy& policy, std::span<const double> w_vec, double gamma_max) {
    const Model& m = model_of(policy);
    const auto& dep = m.dep;
    ScoreReport rep;
    rep.first_offset = dep.A + 1;
    rep.window.assign(w_vec.begin(), w_vec.end());
    if (w_vec.empty()) return rep;
    if (w_vec.size() > static_cast<std::size_t>(dep.B))
        throw std::invalid_argument("candidate_scores: window longer than B");

    const bool per_step = !uses_backtracking(policy);
    const std::size_t g = is_max_power(policy) ? gamma_level_index(dep, gamma_max) : 0;
    const std::size_t first = per_step ? w_vec.size() - 1 : 0;
    for (std::size_t k = first; k < w_vec.size(); ++k) {
        const int u = dep.A + 1 + static_cast<int>(k);
        for (std::size_t j = 0; j < dep.powers.size(); ++j) {
            const double gam = dep.powers[j];
            const double out = outage_probability(m.channel, u, dep.delta_m, gam, w_vec[k]);
            double s = 0.0;
            std::visit(
                [&](const auto& p) {
                    using P = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<P, GeoSumPolicy>) s = gam + dep.xi_o * out;
                    else if constexpr (std::is_same_v<P, GeoMaxPolicy>) s = dep.xi_o * out + p.v_zero_g[std::max(j + 1, g)];
                    else if constexpr (std::is_same_v<P, BtSumPolicy>)
                        s = (gam + dep.xi_o * out) + p.j_z[static_cast<std::size_t>(dep.A + dep.B - u)];
                    else if constexpr (std::is_same_v<P, BtMaxPolicy>)
                        s = dep.xi_o * out + p.j_z_g[static_cast<std::size_t>(dep.A + dep.B - u)][std::max(j + 1, g)];
                    else if constexpr (std::is_same_v<P, AvgPolicy>) s = (gam + dep.xi_o * out) - p.lambda_star * u;
                    else s = ((gam + dep.xi_o * out) + dep.xi_r) / u;
                },
                policy);
            rep.candidates.push_back({u, j, gam, s});
        }
    }
    if (per_step) {
        const int r = dep.A + static_cast<int>(w_vec.size());
        if (r < dep.A + dep.B) {
            if (const auto* p = std::get_if<GeoSumPolicy>(&policy)) rep.threshold = p->threshold(r);
            else if (const auto* q = std::get_if<GeoMaxPolicy>(&policy)) rep.threshold = q->threshold(r, gamma_max);
        }
    }
    std::stable_sort(rep.candidates.begin(), rep.candidates.end(),
                     [](const CandidateScore& a, const CandidateScore& b) { return a.score < b.score; });
    // the candidate the decision rule picks goes first
    if (!per_step && w_vec.size() == static_cast<std::size_t>(dep.B)) {
        int u = 0;
        std::size_t j = 0;
        std::visit(
            [&](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, BtSumPolicy>) {
                    auto d = decide_bt(p, w_vec);
                    u = d.u, j = d.power_index;
                } else if constexpr (std::is_same_v<P, BtMaxPolicy>) {
                    auto d = decide_bt(p, w_vec, gamma_max);
                    u = d.u, j = d.power_index;
                } else if constexpr (std::is_same_v<P, AvgPolicy>) {
                    auto d = decide_avg(p, w_vec);
                    u = d.u, j = d.power_index;
                } else if constexpr (std::is_same_v<P, HeuristicPolicy>) {
                    auto d = heuristic_decide(w_vec, p.model.channel, p.model.dep);
                    u = d.u, j = d.power_index;
                }
            },
            policy);
        auto it = std::find_if(rep.candidates.begin(), rep.candidates.end(),
                               [&](const CandidateScore& c) { return c.offset == u && c.power_index == j; });
        std::rotate(rep.candidates.begin(), it, it + 1);
    }
    return rep;
}

json trace_to_json(const DeploymentTrace& t) {
    json links = json::array();
    for (const auto& l : t.links)
        links.push_back({{"tx", l.tx}, {"rx", l.rx}, {"w", l.w}, {"power_index", l.power_index},
                         {"gamma_mw", l.gamma}, {"outage", l.outage}, {"source", l.source}});
    json meas = json::array();
    for (const auto& m : t.measurements) meas.push_back({{"from", m.from}, {"at", m.at}, {"w", m.w}});
    json j = {{"links", links}, {"measurements", meas}, {"totals", totals_to_json(t.totals)}};
    j["source_position"] = t.source_position >= 0 ? json(t.source_position) : json(nullptr);
    return j;
}

Session::Session(std::string id, std::string policy_id, SessionMode mode, std::shared_ptr<const AnyPolicy> policy)
    : id_(std::move(id)),
      policy_id_(std::move(policy_id)),
      mode_(mode),
      policy_(std::move(policy)),
      model_(model_of(*policy_)) {
    if (uses_backtracking(*policy_) != (mode_ == SessionMode::backtracking))
        throw SessionError(SessionErrorCode::mismatch, "policy kind " + kind_name(*policy_) +
                                                           " cannot run in " + mode_name(mode_) + " mode");
}

int Session::next_offset() const {
    return model_.dep.A + 1 + static_cast<int>(window_.size());
}

long Session::end_lower_offset() const {
    const long measured = window_.empty() ? 0 : next_offset() - 1;
    return std::max(walked_, measured) + 1;
}

Instruction Session::instruction() const {
    Instruction ins;
    if (completed_) {
        ins.kind = Instruction::Kind::completed;
        return ins;
    }
    ins.offset = next_offset();
    ins.position = last_ + ins.offset;
    ins.end_min = last_ + end_lower_offset();
    return ins;
}

void Session::check_seq(const MeasurementReport& r) const {
    if (completed_) throw SessionError(SessionErrorCode::completed, "session " + id_ + " is completed");
    if (r.seq && *r.seq != seq_)
        throw SessionError(SessionErrorCode::ordering,
                           "report seq " + std::to_string(*r.seq) + " but session is at " + std::to_string(seq_));
}

double Session::resolve_w(const MeasurementReport& r, int offset) const {
    double w;
    if (r.w) w = *r.w;
    else if (r.rssi_dbm && r.probe_power_dbm)
        w = shadowing_from_rssi(model_.channel, offset, model_.dep.delta_m, *r.rssi_dbm, *r.probe_power_dbm);
    else throw SessionError(SessionErrorCode::bad_request, "report needs w or rssi_dbm with probe_power_dbm");
    if (!(w > 0) || !std::isfinite(w)) throw SessionError(SessionErrorCode::bad_request, "shadowing must be positive");
    return w;
}

void Session::add_link(long tx, double w, std::size_t j, bool source) {
    const auto& dep = model_.dep;
    LinkRecord l;
    l.tx = tx;
    l.rx = last_;
    l.w = w;
    l.power_index = j;
    l.gamma = dep.powers[j];
    l.outage = outage_probability(model_.channel, static_cast<int>(tx - last_), dep.delta_m, l.gamma, w);
    l.source = source;
    trace_.links.push_back(l);
    gmax_ = std::max(gmax_, l.gamma);
    trace_.totals = compute_totals(trace_.links, dep);
}

Decision Session::report(const MeasurementReport& r) {
    check_seq(r);
    const auto& dep = model_.dep;
    const int offset = next_offset();
    if (r.position && *r.position != last_ + offset)
        throw SessionError(SessionErrorCode::ordering, "expected a measurement at position " +
                                                           std::to_string(last_ + offset) + ", got " +
                                                           std::to_string(*r.position));
    const double w = resolve_w(r, offset);
    ++seq_;
    trace_.measurements.push_back({last_, last_ + offset, w});
    walked_ = std::max<long>(walked_, offset);
    window_.push_back(w);

    Decision d;
    if (mode_ == SessionMode::no_backtracking) {
        last_scores_ = candidate_scores(*policy_, window_, gmax_);
        const auto pd = std::holds_alternative<GeoSumPolicy>(*policy_)
                            ? decide_geo(std::get<GeoSumPolicy>(*policy_), offset, w)
                            : decide_geo(std::get<GeoMaxPolicy>(*policy_), offset, w, gmax_);
        if (!pd.place) {
            d.kind = Decision::Kind::advance;
            return d;
        }
        d = {Decision::Kind::place, last_ + offset, offset, 0, pd.gamma, pd.power_index};
        add_link(last_ + offset, w, pd.power_index, false);
        last_ += offset;
        walked_ = 0;
        window_.clear();
        return d;
    }

    if (window_.size() < static_cast<std::size_t>(dep.B)) return d;
    last_scores_ = candidate_scores(*policy_, window_, gmax_);
    const auto& best = last_scores_.candidates.front();
    const int u = best.offset;
    d = {Decision::Kind::place, last_ + u, u, walked_ - u, best.gamma, best.power_index};
    add_link(last_ + u, window_[static_cast<std::size_t>(u - dep.A - 1)], best.power_index, false);
    last_ += u;
    walked_ -= u;
    window_.clear();
    return d;
}

const DeploymentTrace& Session::end_line(long position, const MeasurementReport& r) {
    check_seq(r);
    const long lo = last_ + end_lower_offset();
    const long hi = last_ + next_offset();
    if (position < lo || position > hi)
        throw SessionError(SessionErrorCode::ordering, "line end at " + std::to_string(position) +
                                                           " outside the open range [" + std::to_string(lo) + ", " +
                                                           std::to_string(hi) + "]");
    const int hop = static_cast<int>(position - last_);
    const double w = resolve_w(r, hop);
    ++seq_;
    trace_.measurements.push_back({last_, position, w});
    const auto& dep = model_.dep;
    const std::size_t j = is_max_power(*policy_)
                              ? last_hop_max_power(model_, hop, w, gmax_).index
                              : min_power_cost(model_.channel, hop, dep.delta_m, w, dep.powers, dep.xi_o).index;
    add_link(position, w, j, true);
    trace_.source_position = position;
    trace_.line_length = position;
    trace_.steps_covered = last_;
    window_.clear();
    completed_ = true;
    return trace_;
}

ScoreReport Session::scores() const {
    if (!window_.empty()) return candidate_scores(*policy_, window_, gmax_);
    return last_scores_;
}

json Session::snapshot() const {
    return {{"id", id_},
            {"policy_id", policy_id_},
            {"kind", kind_name(*policy_)},
            {"mode", mode_name(mode_)},
            {"status", completed_ ? "completed" : "active"},
            {"seq", seq_},
            {"last_node", last_},
            {"walked", walked_},
            {"window", window_},
            {"gamma_max_mw", gmax_},
            {"instruction", instruction().to_json()},
            {"totals", totals_to_json(trace_.totals)}};
}

SessionStore::SessionStore(PolicyMap policies, std::string log_path)
    : policies_(std::move(policies)), log_path_(std::move(log_path)) {
    if (!log_path_.empty()) replay();
}

std::string SessionStore::new_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::ostringstream s;
    s << 's' << std::hex << (rng() & 0xffffffffULL) << '-' << std::dec << ++counter_;
    return s.str();
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
    std::lock_guard lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(SessionErrorCode::not_found, "no session " + id);
    return it->second;
}

void SessionStore::append(const json& event) {
    if (log_path_.empty()) return;
    std::lock_guard lk(log_mu_);
    std::ofstream out(log_path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to " + log_path_);
    out << event.dump() << '\n';
}

void SessionStore::replay() {
    std::ifstream in(log_path_);
    if (!in) return;
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        json e;
        try {
            e = json::parse(line);
        } catch (const json::exception& ex) {
            throw std::runtime_error(log_path_ + ":" + std::to_string(n) + ": " + ex.what());
        }
        const std::string type = e.at("event").get<std::string>();
        const std::string id = e.at("id").get<std::string>();
        if (type == "create") {
            auto pit = policies_.find(e.at("policy_id").get<std::string>());
            if (pit == policies_.end())
                throw std::runtime_error(log_path_ + ": session " + id + " needs a policy that is not loaded");
            auto entry = std::make_shared<Entry>();
            entry->session = std::make_unique<Session>(id, pit->first, parse_mode(e.at("mode")), pit->second);
            sessions_[id] = entry;
            ++counter_;
            continue;
        }
        auto& s = *find(id)->session;
        MeasurementReport r;
        r.w = e.at("w").get<double>();
        if (type == "report") s.report(r);
        else if (type == "end") s.end_line(e.at("position").get<long>(), r);
        else throw std::runtime_error(log_path_ + ": unknown event " + type);
    }
}

std::string SessionStore::create(const std::string& policy_id, SessionMode mode) {
    auto pit = policies_.find(policy_id);
    if (pit == policies_.end()) throw SessionError(SessionErrorCode::not_found, "no policy " + policy_id);
    auto entry = std::make_shared<Entry>();
    std::string id;
    {
        std::lock_guard lk(mu_);
        id = new_id();
        entry->session = std::make_unique<Session>(id, policy_id, mode, pit->second);
        sessions_[id] = entry;
    }
    append({{"event", "create"}, {"id", id}, {"policy_id", policy_id}, {"mode", mode_name(mode)}});
    return id;
}

json SessionStore::report(const std::string& id, const MeasurementReport& r) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    auto& s = *e->session;
    const long at = s.instruction().position;
    const auto d = s.report(r);
    append({{"event", "report"}, {"id", id}, {"w", s.trace().measurements.back().w}, {"position", at}});
    return {{"decision", d.to_json()}, {"instruction", s.instruction().to_json()}, {"session", s.snapshot()}};
}

json SessionStore::end_line(const std::string& id, long position, const MeasurementReport& r) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    auto& s = *e->session;
    const auto& t = s.end_line(position, r);
    append({{"event", "end"}, {"id", id}, {"position", position}, {"w", t.measurements.back().w}});
    return {{"trace", trace_to_json(t)}, {"session", s.snapshot()}};
}

json SessionStore::instruction(const std::string& id) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    return {{"instruction", e->session->instruction().to_json()}, {"seq", e->session->seq()}};
}

json SessionStore::trace(const std::string& id) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    return {{"trace", trace_to_json(e->session->trace())}, {"status", e->session->completed() ? "completed" : "active"}};
}

json SessionStore::scores(const std::string& id) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    return {{"scores", e->session->scores().to_json()}};
}

json SessionStore::snapshot(const std::string& id) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    return {{"session", e->session->snapshot()}};
}

DeploymentTrace SessionStore::raw_trace(const std::string& id) {
    auto e = find(id);
    std::lock_guard lk(e->mu);
    return e->session->trace();
}

std::vector<std::string> SessionStore::ids() const {
    std::lock_guard lk(mu_);
    std::vector<std::string> out;
    for (const auto& [k, v] : sessions_) out.push_back(k);
    return out;
}

SessionStore::PolicyMap load_policy_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error("policy directory " + dir + " does not exist");
    SessionStore::PolicyMap out;
    std::vector<fs::path> files;
    for (const auto& ent : fs::directory_iterator(dir))
        if (ent.is_regular_file() && ent.path().extension() == ".json") files.push_back(ent.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        out[f.stem().string()] = std::make_shared<const AnyPolicy>(load_policy(f.string()));
    if (out.empty()) throw std::runtime_error("no policies in " + dir);
    return out;
}

DeploymentTrace replay_trace(SessionStore& store, const std::string& policy_id, SessionMode mode,
                             const DeploymentTrace& sim) {
    const std::string id = store.create(policy_id, mode);
    long seq = 0;
    for (const auto& m : sim.measurements) {
        MeasurementReport r;
        r.w = m.w;
        r.seq = seq;
        if (m.at == sim.line_length) {
            store.end_line(id, m.at, r);
        } else {
            r.position = m.at;
            store.report(id, r);
        }
        ++seq;
    }
    return store.raw_trace(id);
}

}  // namespace asyougo
