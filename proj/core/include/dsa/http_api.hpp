#pragma once

// HTTP/JSON API over a CycleService.
//
//   GET  /cycles/latest
//   GET  /cycles/{ts}
//   GET  /cycles/{ts}/cases?status=secure|insecure|failed
//   GET  /policy/latest
//   GET  /analytics/summary?from=&to=&granularity=case|cycle
//   GET  /analytics/correlations?var=&flag=&from=&to=&granularity=
//   GET  /analytics/scatter?x=&y=&flag=&from=&to=&format=json|csv
//   POST /whatif

#include <memory>
#include <ostream>
#include <string>

#include "dsa/config.hpp"
#include "dsa/service.hpp"

namespace dsa {

class HttpApi {
public:
    explicit HttpApi(CycleService& service);
    ~HttpApi();

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    /// Throws BindError.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Runs the service until SIGINT/SIGTERM.  DSA_LISTEN overrides the
/// configured listen address.  Returns 0 on clean shutdown, 2 on a
/// configuration or storage error at startup, 3 when the address cannot be
/// bound.
int serve(EngineConfig cfg, std::ostream& log, double poll_s = 1.0);

}  // namespace dsa
