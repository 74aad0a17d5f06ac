#pragma once

#include "webxaii/time.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace webxaii {

enum class EventKind {
    SessionStarted,
    Login,
    FailedLogin,
    ViewShown,
    InstructionAck,
    QuestionnaireResponse,
    Decision,
    Timeout,
    ScoreShown,
    SessionCompleted,
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::SessionStarted, EventKind::Login,    EventKind::FailedLogin, EventKind::ViewShown,
    EventKind::InstructionAck, EventKind::QuestionnaireResponse, EventKind::Decision,
    EventKind::Timeout,        EventKind::ScoreShown, EventKind::SessionCompleted,
};

const char* to_string(EventKind kind);
std::optional<EventKind> event_kind_from(std::string_view s);

struct EventRefs {
    std::optional<std::string> experiment_id;
    std::optional<std::string> task_id;
    std::optional<std::string> view_id;
    std::optional<std::string> instance_id;
    std::optional<std::size_t> presented_order_index;

    bool operator==(const EventRefs&) const = default;
};

struct Event {
    std::uint64_t seq = 0;
    std::string session_id;
    std::string user_login;
    std::string protocol_id;
    EventKind kind = EventKind::SessionStarted;
    EventRefs refs;
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    Timestamp server_ts{};
    std::optional<std::int64_t> client_elapsed_ms;

    bool operator==(const Event&) const = default;
};

/// One JSON object with fields in declaration order; absent refs are omitted.
nlohmann::ordered_json event_to_json(const Event& e);
/// Throws std::invalid_argument on a malformed record.
Event event_from_json(const nlohmann::ordered_json& j);

}  // namespace webxaii
