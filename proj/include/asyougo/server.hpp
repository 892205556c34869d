#pragma once

#include <memory>
#include <string>

#include "asyougo/session.hpp"

namespace httplib {
class Server;
}

namespace asyougo {

/// JSON-over-HTTP front end of a SessionStore. Routes live under /api/v1.
class SessionServer {
public:
    explicit SessionServer(SessionStore& store);
    ~SessionServer();

    /// Binds and serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port; returns it (or -1). Serve with listen_after_bind().
    int bind_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    void routes();
    SessionStore& store_;
    std::unique_ptr<httplib::Server> http_;
};

}  // namespace asyougo
