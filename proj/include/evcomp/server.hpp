#pragma once

#include <memory>
#include <string>

#include "evcomp/backend.hpp"

namespace evcomp {

// Serves any LmBackend over the logit wire protocol (see wire.hpp). Requests
// must carry the backend's vocabulary fingerprint; mismatches are rejected
// with a fingerprint_mismatch error and never answered with a distribution.
class LogitServer {
public:
    explicit LogitServer(std::shared_ptr<const LmBackend> backend);
    ~LogitServer();

    LogitServer(const LogitServer&) = delete;
    LogitServer& operator=(const LogitServer&) = delete;

    // Binds to an OS-assigned port and returns it (for tests and tools that
    // start the server on a background thread before calling listen_after_bind).
    int bind_any_port(const std::string& host);
    bool listen_after_bind();

    // Bind + listen; blocks until stop().
    bool listen(const std::string& host, int port);

    void stop();
    bool is_running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace evcomp
