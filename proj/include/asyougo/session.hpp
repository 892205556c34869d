#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "asyougo/policy.hpp"
#include "asyougo/simulator.hpp"

namespace asyougo {

inline constexpr const char* kProtocolVersion = "1.0";

enum class SessionErrorCode { bad_request, not_found, ordering, completed, mismatch };

struct SessionError : std::runtime_error {
    SessionErrorCode code;
    SessionError(SessionErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

int http_status(SessionErrorCode c);
const char* code_name(SessionErrorCode c);

enum class SessionMode { backtracking, no_backtracking };
SessionMode parse_mode(const std::string& s);
const char* mode_name(SessionMode m);

/// Either w directly, or a fading-averaged RSSI plus the probe power.
struct MeasurementReport {
    std::optional<double> w;
    std::optional<double> rssi_dbm;
    std::optional<double> probe_power_dbm;
    std::optional<long> position;  // checked against the expected position when present
    std::optional<long> seq;       // number of events the client has seen applied

    static MeasurementReport from_json(const nlohmann::json& j);
};

/// What the operative should do next.
struct Instruction {
    enum class Kind { measure, completed } kind = Kind::measure;
    long position = 0;  // absolute step where the next measurement is taken
    int offset = 0;     // same, relative to the last placed node
    long end_min = 0;   // the line may end at any position in [end_min, position]
                        // (empty when end_min > position)
    nlohmann::json to_json() const;
};

/// Outcome of one report.
struct Decision {
    enum class Kind { buffered, advance, place } kind = Kind::buffered;
    long position = 0;       // where the relay goes (place)
    int offset = 0;          // u, relative to the previous node
    long walk_back = 0;      // steps back from the operative's furthest position
    double gamma = 0.0;      // mW
    std::size_t power_index = 0;
    nlohmann::json to_json() const;
};

/// Candidate placement scores behind the pending (or most recent) decision,
/// sorted ascending with the chosen candidate first.
struct CandidateScore {
    int offset = 0;
    std::size_t power_index = 0;
    double gamma = 0.0;
    double score = 0.0;
};

struct ScoreReport {
    std::vector<CandidateScore> candidates;
    std::optional<double> threshold;  // no-backtracking, below the window end
    std::vector<double> window;       // w values the scores were computed from
    int first_offset = 0;
    nlohmann::json to_json() const;
};

/// Scores over a window prefix w_vec (offsets A+1..). For no-backtracking
/// policies only the last entry is scored.
ScoreReport candidate_scores(const AnyPolicy& policy, std::span<const double> w_vec, double gamma_max);

nlohmann::json trace_to_json(const DeploymentTrace& t);

/// One deployment walk driven by reports. Not thread-safe; SessionStore
/// serializes access.
class Session {
public:
    Session(std::string id, std::string policy_id, SessionMode mode, std::shared_ptr<const AnyPolicy> policy);

    const std::string& id() const { return id_; }
    const std::string& policy_id() const { return policy_id_; }
    SessionMode mode() const { return mode_; }
    bool completed() const { return completed_; }
    long seq() const { return seq_; }
    const DeploymentTrace& trace() const { return trace_; }

    Instruction instruction() const;
    /// Recovers w for the current expected measurement.
    double resolve_w(const MeasurementReport& r, int offset) const;
    Decision report(const MeasurementReport& r);
    /// Places the source at `position`; the report carries the last-hop w.
    const DeploymentTrace& end_line(long position, const MeasurementReport& r);
    ScoreReport scores() const;
    nlohmann::json snapshot() const;

private:
    void check_seq(const MeasurementReport& r) const;
    void add_link(long tx, double w, std::size_t j, bool source);
    int next_offset() const;
    long end_lower_offset() const;

    std::string id_, policy_id_;
    SessionMode mode_;
    std::shared_ptr<const AnyPolicy> policy_;
    const Model& model_;
    long last_ = 0;        // position of the last placed node
    long walked_ = 0;      // furthest offset known not to be the line end
    int cursor_ = 0;       // no-backtracking: last measured offset (0 after a placement)
    std::vector<double> window_;
    ScoreReport last_scores_;
    double gmax_ = 0.0;
    bool completed_ = false;
    long seq_ = 0;
    DeploymentTrace trace_;
};

/// Sessions keyed by id, with an optional append-only JSON-lines event log.
/// Opening a store on an existing log replays it.
class SessionStore {
public:
    using PolicyMap = std::map<std::string, std::shared_ptr<const AnyPolicy>>;

    explicit SessionStore(PolicyMap policies, std::string log_path = {});

    const PolicyMap& policies() const { return policies_; }

    std::string create(const std::string& policy_id, SessionMode mode);
    nlohmann::json report(const std::string& id, const MeasurementReport& r);
    nlohmann::json end_line(const std::string& id, long position, const MeasurementReport& r);
    nlohmann::json instruction(const std::string& id);
    nlohmann::json trace(const std::string& id);
    nlohmann::json scores(const std::string& id);
    nlohmann::json snapshot(const std::string& id);
    DeploymentTrace raw_trace(const std::string& id);
    std::vector<std::string> ids() const;

private:
    struct Entry {
        std::mutex mu;
        std::unique_ptr<Session> session;
    };
    std::shared_ptr<Entry> find(const std::string& id) const;
    void append(const nlohmann::json& event);
    void replay();
    std::string new_id();

    PolicyMap policies_;
    std::string log_path_;
    mutable std::mutex mu_;
    std::mutex log_mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t counter_ = 0;
};

/// Loads every *.json policy in a directory; id = file stem.
SessionStore::PolicyMap load_policy_directory(const std::string& dir);

/// Drives a session with a simulator trace's measurement stream; returns the
/// session's final trace.
DeploymentTrace replay_trace(SessionStore& store, const std::string& policy_id, SessionMode mode,
                             const DeploymentTrace& sim);

}  // namespace asyougo
