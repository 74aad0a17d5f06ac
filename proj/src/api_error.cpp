#include "webxaii/api_error.hpp"

namespace webxaii {

ApiError api_error(const SessionError& e) {
    using C = SessionError::Code;
    switch (e.code()) {
        case C::AssignmentMismatch: return {403, "forbidden", "the assigned protocol is not available"};
        case C::StaleView: return {409, "stale_view", e.what()};
        case C::PayloadInvalid: return {422, "payload_invalid", e.what()};
        case C::TimedOut: return {410, "timed_out", e.what()};
        case C::Premature: return {425, "premature", e.what()};
        case C::TaskIncomplete: return {409, "conflict", e.what()};
        case C::UnknownTask: return {404, "not_found", e.what()};
        case C::ReplayMismatch: break;
    }
    return {500, "internal_error", "internal error"};
}

ApiError api_error(const ConnectionError& e) {
    using C = ConnectionError::Code;
    switch (e.code()) {
        case C::DuplicateLogin: return {409, "conflict", e.what()};
        case C::UnknownProtocol: return {404, "not_found", e.what()};
        case C::InvalidRecord: return {400, "bad_request", e.what()};
        case C::BadCredentials: return {401, "bad_credentials", e.what()};
        case C::InvalidToken: return {401, "unauthorized", e.what()};
        case C::ExpiredToken: return {401, "token_expired", e.what()};
    }
    return {500, "internal_error", "internal error"};
}

nlohmann::ordered_json to_json(const ApiError& e) {
    nlohmann::ordered_json j;
    j["error"]["code"] = e.code;
    j["error"]["message"] = e.message;
    return j;
}

}  // namespace webxaii
