#include "dsa/http_api.hpp"

#include <csignal>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "dsa/analytics.hpp"
#include "dsa/error.hpp"
#include "dsa/report_io.hpp"

namespace dsa {

namespace {

void send_json(httplib::Response& res, const ojson& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
    ojson j;
    j["error"] = msg;
    send_json(res, j, status);
}

std::int64_t parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " '" + s + "'");
    }
}

TimeWindow window_of(const httplib::Request& req) {
    TimeWindow w;
    if (req.has_param("from")) w.from = parse_int(req.get_param_value("from"), "from");
    if (req.has_param("to")) w.to = parse_int(req.get_param_value("to"), "to");
    return w;
}

Granularity granularity_of(const httplib::Request& req) {
    if (!req.has_param("granularity")) return Granularity::case_level;
    const auto g = req.get_param_value("granularity");
    if (g == "case") return Granularity::case_level;
    if (g == "cycle") return Granularity::cycle_level;
    throw ParseError("granularity must be 'case' or 'cycle'");
}

std::string required(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) throw ParseError(std::string("missing query parameter '") + key + "'");
    return req.get_param_value(key);
}

// Maps engine errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const UnknownElementError& e) {
            send_error(res, 404, e.what());
        } catch (const EmptyWindowError& e) {
            send_error(res, 404, e.what());
        } catch (const BusyError& e) {
            send_error(res, 429, e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, e.what());
        } catch (const ConfigError& e) {
            send_error(res, 400, e.what());
        } catch (const PreconditionError& e) {
            send_error(res, 400, e.what());
        } catch (const UnknownProfileError& e) {
            send_error(res, 400, e.what());
        } catch (const ValidationError& e) {
            send_error(res, 422, e.what());
        } catch (const LimitError& e) {
            send_error(res, 422, e.what());
        } catch (const DegenerateError& e) {
            send_error(res, 422, e.what());
        } catch (const BasecaseInsecureError& e) {
            send_error(res, 422, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

}  // namespace

struct HttpApi::Impl {
    CycleService& svc;
    httplib::Server server;

    explicit Impl(CycleService& s) : svc(s) {
        // No SO_REUSEPORT: a second server on the same port must fail to bind.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        routes();
    }

    void routes() {
        server.Get("/cycles/latest", guarded([this](const httplib::Request&, httplib::Response& res) {
                       const auto r = svc.archive().latest();
                       if (!r) throw UnknownElementError("no cycles archived yet");
                       send_json(res, to_json(*r));
                   }));
        server.Get(R"(/cycles/(-?\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto ts = parse_int(req.matches[1], "timestamp");
                       const auto r = svc.archive().load(ts);
                       if (!r) throw UnknownElementError("no cycle at timestamp " + std::to_string(ts));
                       send_json(res, to_json(*r));
                   }));
        server.Get(R"(/cycles/(-?\d+)/cases)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto ts = parse_int(req.matches[1], "timestamp");
                       const auto r = svc.archive().load(ts);
                       if (!r) throw UnknownElementError("no cycle at timestamp " + std::to_string(ts));
                       send_json(res, cases_json(*r, req));
                   }));
        server.Get("/policy/latest", guarded([this](const httplib::Request&, httplib::Response& res) {
                       const auto r = svc.archive().latest();
                       if (!r) throw UnknownElementError("no cycles archived yet");
                       ojson j;
                       j["snapshot_ts"] = r->snapshot_ts;
                       j["system_metrics"] = to_json(r->system_metrics);
                       j["policy"] = to_json(r->policy);
                       send_json(res, j);
                   }));
        server.Get("/analytics/summary", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto t = summarize(svc.archive().records(), window_of(req), granularity_of(req));
                       send_json(res, to_json(t));
                   }));
        server.Get("/analytics/correlations", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto var = parse_variable(required(req, "var"));
                       const auto flag = parse_binding(required(req, "flag"));
                       const auto c = correlate(svc.archive().records(), var, flag, window_of(req), granularity_of(req));
                       send_json(res, to_json(c));
                   }));
        server.Get("/analytics/scatter", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto x = parse_variable(required(req, "x"));
                       const auto y = parse_variable(required(req, "y"));
                       const auto flag = parse_binding(required(req, "flag"));
                       const auto s = scatter_export(svc.archive().records(), x, y, flag, window_of(req));
                       if (req.has_param("format") && req.get_param_value("format") == "csv") {
                           std::ostringstream out;
                           write_scatter_csv(s, out);
                           res.set_content(out.str(), "text/csv");
                           return;
                       }
                       ojson j;
                       j["x"] = to_string(s.x);
                       j["y"] = to_string(s.y);
                       j["x_unit"] = unit_of(s.x);
                       j["y_unit"] = unit_of(s.y);
                       j["flag"] = token(s.flag);
                       auto& rows = j["rows"] = ojson::array();
                       for (const auto& r : s.rows) {
                           ojson o;
                           o["ts"] = r.ts;
                           o["x"] = r.x;
                           o["y"] = r.y;
                           o["insecure"] = r.insecure;
                           rows.push_back(std::move(o));
                       }
                       send_json(res, j);
                   }));
        server.Post("/whatif", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        nlohmann::json body;
                        try {
                            body = nlohmann::json::parse(req.body);
                        } catch (const nlohmann::json::parse_error& e) {
                            throw ParseError(std::string("what-if body: ") + e.what());
                        }
                        const auto r = svc.what_if(whatif_request_from_json(body));
                        send_json(res, to_json(r));
                    }));
    }

    static ojson cases_json(const CycleReport& r, const httplib::Request& req) {
        std::optional<CaseStatus> filter;
        if (req.has_param("status")) filter = parse_case_status(req.get_param_value("status"));
        ojson j;
        j["snapshot_ts"] = r.snapshot_ts;
        j["limits"] = to_json(r.limits);
        auto& arr = j["cases"] = ojson::array();
        if (filter == CaseStatus::insecure) {
            // Triage order: most severe first.
            for (const auto& ranked : rank_insecure(r)) {
                auto it = std::find_if(r.cases.begin(), r.cases.end(),
                                       [&](const CaseResult& c) { return c.contingency_id == ranked.contingency_id; });
                auto cj = to_json(*it);
                cj["severity"] = ranked.severity;
                cj["worst"] = token(ranked.worst);
                arr.push_back(std::move(cj));
            }
            return j;
        }
        for (const auto& c : r.cases)
            if (!filter || c.status == *filter) arr.push_back(to_json(c));
        return j;
    }
};

HttpApi::HttpApi(CycleService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpApi::~HttpApi() = default;

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw BindError("cannot bind " + host + ":0");
        return p;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw BindError("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
    return port;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

void HttpApi::stop() { impl_->server.stop(); }

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

int serve(EngineConfig cfg, std::ostream& log, double poll_s) {
    if (const char* env = std::getenv("DSA_LISTEN"); env && *env) cfg.listen = env;
    std::pair<std::string, int> addr;
    try {
        cfg.validate();
        addr = parse_listen(cfg.listen);
    } catch (const Error& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    }

    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    std::unique_ptr<CycleService> svc;
    try {
        svc = std::make_unique<CycleService>(cfg);
    } catch (const Error& e) {
        log << "startup error: " << e.what() << "\n";
        return 2;
    }
    HttpApi api(*svc);
    int port = 0;
    try {
        port = api.bind(addr.first, addr.second);
    } catch (const BindError& e) {
        log << "bind error: " << e.what() << "\n";
        return 3;
    }
    log << "listening on " << addr.first << ":" << port << ", inbox " << cfg.inbox_path << ", archive "
        << cfg.archive_path << std::endl;

    std::thread http([&api] { api.listen(); });
    std::jthread loop([&svc, poll_s](std::stop_token st) { svc->run(st, poll_s); });

    int sig = 0;
    sigwait(&signals, &sig);
    log << "signal " << sig << " received, finishing in-flight cycle" << std::endl;
    api.stop();
    http.join();
    loop.request_stop();
    loop.join();
    log << "stopped after " << svc->cycles_processed() << " cycle(s)" << std::endl;
    return 0;
}

}  // namespace dsa
