#include "webxaii/http/service.hpp"

#include "webxaii/api_error.hpp"
#include "webxaii/events/export.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>
#include <thread>

namespace webxaii {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

constexpr const char* kPlaceholderPage =
    "<!doctype html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>WebXAII</title></head>\n"
    "<body><p>The participant interface is not installed on this server. Set WEBXAII_UI_DIR to the "
    "directory of the built bundle.</p></body></html>\n";

void reply(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void fail(httplib::Response& res, const ApiError& e) { reply(res, e.http_status, to_json(e)); }

void fail(httplib::Response& res, int status, const char* code, std::string message) {
    fail(res, ApiError{status, code, std::move(message)});
}

std::optional<nlohmann::json> json_body(const httplib::Request& req, httplib::Response& res) {
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded()) {
        fail(res, 400, "bad_request", "request body is not valid JSON");
        return std::nullopt;
    }
    return j;
}

std::string bearer_token(const httplib::Request& req) {
    auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) return {};
    return header.substr(prefix.size());
}

std::optional<std::string> read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ojson diagnostics_json(const std::vector<Diagnostic>& diags) {
    auto arr = ojson::array();
    for (const auto& d : diags) {
        arr.push_back({{"severity", to_string(d.severity)}, {"path", d.path}, {"message", d.message}});
    }
    return arr;
}

}  // namespace

bool has_dot_dot_segment(std::string_view path) {
    std::size_t start = 0;
    while (start <= path.size()) {
        auto end = path.find('/', start);
        if (end == std::string_view::npos) end = path.size();
        if (path.substr(start, end - start) == "..") return true;
        start = end + 1;
    }
    return false;
}

std::string content_type_for(const fs::path& file) {
    auto ext = file.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".webp") return "image/webp";
    if (ext == ".txt") return "text/plain; charset=utf-8";
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".css") return "text/css; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
    if (ext == ".json") return kJson;
    if (ext == ".ico") return "image/x-icon";
    return "application/octet-stream";
}

struct HttpService::Impl {
    Impl(Platform& p, HttpOptions o) : platform(p), options(std::move(o)) {
        server.set_payload_max_length(16 * 1024 * 1024);
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            fail(res, 500, "internal_error", "internal error");
        });
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                fail(res, 404, "not_found", "no such resource: " + req.path);
            } else if (res.status == 400) {
                fail(res, 400, "bad_request", "malformed request");
            }
        });
        participant_routes();
        admin_routes();
        static_routes();
    }

    template <class F>
    void as_participant(const httplib::Request& req, httplib::Response& res, F&& f) {
        const auto now = options.clock();
        const auto token = bearer_token(req);
        if (token.empty()) return fail(res, 401, "unauthorized", "missing bearer token");
        try {
            auto user = platform.connection().resolve_token(token, now);
            auto id = session_id_for(user.protocol_id, user.login);
            ojson body = platform.sessions().with_session(
                id, [&](SessionEngine& engine, SessionState& state) { return f(engine, state, now); });
            reply(res, 200, body);
        } catch (const SessionError& e) {
            fail(res, api_error(e));
        } catch (const ConnectionError& e) {
            fail(res, api_error(e));
        } catch (const std::out_of_range&) {
            fail(res, 401, "unauthorized", "no session for this token");
        }
    }

    bool admin_allowed(const httplib::Request& req, httplib::Response& res) const {
        auto given = req.get_header_value("X-Admin-Token");
        if (options.admin_token.empty() || !constant_time_equals(given, options.admin_token)) {
            fail(res, 401, "unauthorized", "missing or wrong admin token");
            return false;
        }
        return true;
    }

    void participant_routes() {
        server.Post("/api/login", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json_body(req, res);
            if (!body) return;
            if (!body->is_object() || !(*body)["login"].is_string() || !(*body)["access_code"].is_string()) {
                return fail(res, 400, "bad_request", "expected {\"login\", \"access_code\"}");
            }
            try {
                auto auth = platform.connection().authenticate((*body)["login"].get<std::string>(),
                                                               (*body)["access_code"].get<std::string>(),
                                                               options.clock());
                ojson j;
                j["token"] = auth.token.token;
                j["protocol_id"] = auth.protocol_id;
                j["resumed"] = auth.resumed;
                reply(res, 200, j);
            } catch (const ConnectionError& e) {
                fail(res, api_error(e));
            } catch (const SessionError& e) {
                fail(res, api_error(e));
            }
        });

        server.Get("/api/session/view", [this](const httplib::Request& req, httplib::Response& res) {
            as_participant(req, res, [](SessionEngine& engine, SessionState& state, Timestamp now) {
                return to_json(engine.current_view(state, now));
            });
        });

        server.Post("/api/session/submit", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json_body(req, res);
            if (!body) return;
            as_participant(req, res, [&](SessionEngine& engine, SessionState& state, Timestamp now) {
                return to_json(engine.submit(state, submission_from_json(*body), now));
            });
        });

        server.Post("/api/session/timeout", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json_body(req, res);
            if (!body) return;
            if (!body->is_object() || !(*body)["view_id"].is_string()) {
                return fail(res, 400, "bad_request", "expected {\"view_id\"}");
            }
            auto view_id = (*body)["view_id"].get<std::string>();
            as_participant(req, res, [&](SessionEngine& engine, SessionState& state, Timestamp now) {
                ojson j;
                j["advanced"] = engine.notify_timeout(state, view_id, now).advanced;
                return j;
            });
        });
    }

    void admin_routes() {
        server.Post("/api/admin/protocols", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admin_allowed(req, res)) return;
            auto up = platform.upload_protocol(req.body);
            using S = Platform::Upload::Status;
            if (up.status == S::Loaded) {
                ojson j;
                j["id"] = up.protocol_id;
                j["diagnostics"] = diagnostics_json(up.diagnostics);
                return reply(res, 201, j);
            }
            if (up.status == S::Conflict) {
                return fail(res, 409, "conflict", "protocol '" + up.protocol_id + "' is already loaded");
            }
            std::size_t errors = 0;
            for (const auto& d : up.diagnostics) errors += d.is_error();
            auto j = to_json(ApiError{422, "validation_failed", "protocol has " + std::to_string(errors) + " error(s)"});
            j["error"]["diagnostics"] = diagnostics_json(up.diagnostics);
            reply(res, 422, j);
        });

        server.Get("/api/admin/protocols", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admin_allowed(req, res)) return;
            ojson j;
            j["protocols"] = platform.protocol_list();
            reply(res, 200, j);
        });

        server.Post("/api/admin/users", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admin_allowed(req, res)) return;
            auto body = json_body(req, res);
            if (!body) return;
            try {
                auto outcome = platform.provision(parse_provisioning(*body), options.clock());
                ojson j;
                j["added"] = outcome.added;
                j["rejected"] = ojson::array();
                for (const auto& r : outcome.rejected) {
                    auto e = api_error(ConnectionError(r.code, r.message));
                    j["rejected"].push_back({{"login", r.login}, {"code", e.code}, {"message", r.message}});
                }
                reply(res, 200, j);
            } catch (const ConnectionError& e) {
                fail(res, api_error(e));
            }
        });

        server.Get("/api/admin/export", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admin_allowed(req, res)) return;
            auto protocol = req.get_param_value("protocol");
            auto format = export_format_from(req.has_param("format") ? req.get_param_value("format") : "csv");
            if (protocol.empty()) return fail(res, 400, "bad_request", "missing protocol parameter");
            if (!format) return fail(res, 400, "bad_request", "format must be csv or json");
            try {
                auto doc = export_results(platform.store(), platform.catalog(), protocol, *format);
                res.status = 200;
                res.set_header("X-Row-Count", std::to_string(doc.rows));
                res.set_content(std::move(doc.body), *format == ExportFormat::Csv ? "text/csv; charset=utf-8" : kJson);
            } catch (const UnknownProtocolError& e) {
                fail(res, 404, "not_found", e.what());
            }
        });

        server.Get("/api/admin/status", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admin_allowed(req, res)) return;
            reply(res, 200, platform.status());
        });
    }

    void static_routes() {
        server.Get(R"(/assets/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string rel = req.matches[1];
            if (has_dot_dot_segment(req.path) || has_dot_dot_segment(rel) || !is_safe_relative_path(rel)) {
                return fail(res, 403, "forbidden", "path not allowed");
            }
            std::error_code ec;
            if (!options.asset_dir || !fs::is_regular_file(*options.asset_dir / rel, ec)) {
                return fail(res, 404, "not_found", "no such asset: " + rel);
            }
            auto data = read_file(*options.asset_dir / rel);
            if (!data) return fail(res, 404, "not_found", "no such asset: " + rel);
            res.status = 200;
            res.set_content(std::move(*data), content_type_for(rel));
        });

        server.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            if (req.path == "/api" || req.path.rfind("/api/", 0) == 0) {
                return fail(res, 404, "not_found", "no such resource: " + req.path);
            }
            if (has_dot_dot_segment(req.path)) return fail(res, 403, "forbidden", "path not allowed");
            if (options.ui_dir) {
                const std::string rel = req.path.substr(1);
                std::error_code ec;
                if (!rel.empty() && is_safe_relative_path(rel) && fs::is_regular_file(*options.ui_dir / rel, ec)) {
                    if (auto data = read_file(*options.ui_dir / rel)) {
                        res.status = 200;
                        return res.set_content(std::move(*data), content_type_for(rel));
                    }
                }
                if (auto index = read_file(*options.ui_dir / "index.html")) {
                    res.status = 200;
                    return res.set_content(std::move(*index), "text/html; charset=utf-8");
                }
            }
            res.status = 200;
            res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
        });
    }

    Platform& platform;
    HttpOptions options;
    httplib::Server server;
    std::thread thread;
};

HttpService::HttpService(Platform& platform, HttpOptions options)
    : impl_(std::make_unique<Impl>(platform, std::move(options))) {}

HttpService::~HttpService() { stop(); }

std::optional<int> HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        int bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) return std::nullopt;
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) return std::nullopt;
    return port;
}

void HttpService::run() { impl_->server.listen_after_bind(); }

void HttpService::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpService::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace webxaii
