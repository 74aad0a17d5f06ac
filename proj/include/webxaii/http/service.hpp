#pragma once

#include "webxaii/platform/platform.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace webxaii {

struct HttpOptions {
    std::string admin_token;  // empty: every admin route answers 401
    std::optional<std::filesystem::path> asset_dir;
    std::optional<std::filesystem::path> ui_dir;  // built participant UI; a placeholder page otherwise
    Clock clock = system_now;
};

/// Participant API, admin API, assets and the UI bundle on one listener.
class HttpService {
public:
    HttpService(Platform& platform, HttpOptions options);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds the listening socket; port 0 picks a free one. Returns the bound
    /// port, or nullopt when binding failed.
    std::optional<int> bind(const std::string& host, int port);

    /// Serves until stop(). Requires a successful bind().
    void run();
    /// run() on a background thread; returns once the server accepts requests.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// MIME type from a file extension; application/octet-stream when unknown.
std::string content_type_for(const std::filesystem::path& file);

/// True when any '/'-separated segment of `path` is "..".
bool has_dot_dot_segment(std::string_view path);

}  // namespace webxaii
