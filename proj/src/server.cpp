#include "asyougo/server.hpp"

#include <httplib.h>

namespace asyougo {

using nlohmann::json;

namespace {

void send(httplib::Response& res, int status, json body) {
    body["protocol_version"] = kProtocolVersion;
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
    send(res, status, {{"error", {{"code", code}, {"message", msg}}}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw SessionError(SessionErrorCode::bad_request, std::string("invalid JSON: ") + e.what());
    }
}

template <typename F>
httplib::Server::Handler guarded(F f, int ok = 200) {
    return [f, ok](const httplib::Request& req, httplib::Response& res) {
        try {
            send(res, ok, f(req));
        } catch (const SessionError& e) {
            send_error(res, http_status(e.code), code_name(e.code), e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::out_of_range& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

}  // namespace

SessionServer::SessionServer(SessionStore& store) : store_(store), http_(std::make_unique<httplib::Server>()) {
    routes();
}

SessionServer::~SessionServer() = default;

void SessionServer::routes() {
    auto& s = *http_;
    auto& st = store_;
    const std::string sid = R"(/api/v1/sessions/([A-Za-z0-9\-]+))";

    s.Get("/api/v1/policies", guarded([&st](const httplib::Request&) {
              json list = json::array();
              for (const auto& [id, p] : st.policies()) {
                  const auto& m = model_of(*p);
                  list.push_back({{"id", id},
                                  {"kind", kind_name(*p)},
                                  {"mode", uses_backtracking(*p) ? "backtracking" : "no_backtracking"},
                                  {"A", m.dep.A},
                                  {"B", m.dep.B},
                                  {"xi_r", m.dep.xi_r},
                                  {"xi_o", m.dep.xi_o},
                                  {"powers_mw", m.dep.powers}});
              }
              return json{{"policies", list}};
          }));

    s.Post("/api/v1/sessions", guarded(
                                   [&st](const httplib::Request& req) {
                                       const json b = parse_body(req);
                                       if (!b.contains("policy_id") || !b.at("policy_id").is_string())
                                           throw SessionError(SessionErrorCode::bad_request, "policy_id is required");
                                       const std::string pid = b.at("policy_id").get<std::string>();
                                       SessionMode mode;
                                       if (b.contains("mode")) {
                                           if (!b.at("mode").is_string())
                                               throw SessionError(SessionErrorCode::bad_request, "mode must be a string");
                                           mode = parse_mode(b.at("mode").get<std::string>());
                                       } else {
                                           auto it = st.policies().find(pid);
                                           if (it == st.policies().end())
                                               throw SessionError(SessionErrorCode::not_found, "no policy " + pid);
                                           mode = uses_backtracking(*it->second) ? SessionMode::backtracking
                                                                                 : SessionMode::no_backtracking;
                                       }
                                       const std::string id = st.create(pid, mode);
                                       json out = st.snapshot(id);
                                       out["instruction"] = out["session"]["instruction"];
                                       return out;
                                   },
                                   201));

    s.Get(sid, guarded([&st](const httplib::Request& req) { return st.snapshot(req.matches[1]); }));

    s.Post(sid + "/reports", guarded([&st](const httplib::Request& req) {
               return st.report(req.matches[1], MeasurementReport::from_json(parse_body(req)));
           }));

    s.Get(sid + "/instruction", guarded([&st](const httplib::Request& req) { return st.instruction(req.matches[1]); }));

    s.Post(sid + "/end", guarded([&st](const httplib::Request& req) {
               const json b = parse_body(req);
               if (!b.contains("position") || !b.at("position").is_number_integer())
                   throw SessionError(SessionErrorCode::bad_request, "position (integer step) is required");
               auto r = MeasurementReport::from_json(b);
               r.position.reset();
               return st.end_line(req.matches[1], b.at("position").get<long>(), r);
           }));

    s.Get(sid + "/trace", guarded([&st](const httplib::Request& req) { return st.trace(req.matches[1]); }));
    s.Get(sid + "/scores", guarded([&st](const httplib::Request& req) { return st.scores(req.matches[1]); }));

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send_error(res, res.status, "not_found", "no such route");
    });
}

bool SessionServer::listen(const std::string& host, int port) { return http_->listen(host, port); }
int SessionServer::bind_any_port(const std::string& host) { return http_->bind_to_any_port(host); }
bool SessionServer::listen_after_bind() { return http_->listen_after_bind(); }
void SessionServer::stop() { http_->stop(); }
void SessionServer::wait_until_ready() const { http_->wait_until_ready(); }

}  // namespace asyougo
