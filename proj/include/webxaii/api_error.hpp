#pragma once

#include "webxaii/connection/connection.hpp"
#include "webxaii/session/engine.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <string_view>

namespace webxaii {

/// Error reported by the participant and admin APIs.
/// Body shape: {"error": {"code": ..., "message": ...}}.
struct ApiError {
    int http_status = 500;
    std::string code;
    std::string message;
};

/// The complete set of error codes the API can return.
inline constexpr std::array<std::string_view, 13> kApiErrorCodes = {
    "bad_request",  "bad_credentials", "unauthorized",      "token_expired", "forbidden",
    "not_found",    "conflict",        "stale_view",        "timed_out",     "payload_invalid",
    "validation_failed", "premature",  "internal_error",
};

ApiError api_error(const SessionError& e);
ApiError api_error(const ConnectionError& e);

nlohmann::ordered_json to_json(const ApiError& e);

}  // namespace webxaii
