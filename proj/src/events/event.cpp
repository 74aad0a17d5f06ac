#include "webxaii/events/event.hpp"

#include <stdexcept>

namespace webxaii {

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::SessionStarted: return "session_started";
        case EventKind::Login: return "login";
        case EventKind::FailedLogin: return "failed_login";
        case EventKind::ViewShown: return "view_shown";
        case EventKind::InstructionAck: return "instruction_ack";
        case EventKind::QuestionnaireResponse: return "questionnaire_response";
        case EventKind::Decision: return "decision";
        case EventKind::Timeout: return "timeout";
        case EventKind::ScoreShown: return "score_shown";
        case EventKind::SessionCompleted: return "session_completed";
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from(std::string_view s) {
    for (auto kind : kAllEventKinds) {
        if (s == to_string(kind)) return kind;
    }
    return std::nullopt;
}

nlohmann::ordered_json event_to_json(const Event& e) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["session_id"] = e.session_id;
    j["user_login"] = e.user_login;
    j["protocol_id"] = e.protocol_id;
    j["kind"] = to_string(e.kind);
    auto& refs = j["refs"] = nlohmann::ordered_json::object();
    if (e.refs.experiment_id) refs["experiment_id"] = *e.refs.experiment_id;
    if (e.refs.task_id) refs["task_id"] = *e.refs.task_id;
    if (e.refs.view_id) refs["view_id"] = *e.refs.view_id;
    if (e.refs.instance_id) refs["instance_id"] = *e.refs.instance_id;
    if (e.refs.presented_order_index) refs["presented_order_index"] = *e.refs.presented_order_index;
    j["payload"] = e.payload;
    j["server_ts"] = to_iso8601(e.server_ts);
    j["client_elapsed_ms"] = e.client_elapsed_ms ? nlohmann::ordered_json(*e.client_elapsed_ms) : nullptr;
    return j;
}

namespace {

std::optional<std::string> opt_str(const nlohmann::ordered_json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

Event event_from_json(const nlohmann::ordered_json& j) {
    try {
        Event e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.session_id = j.at("session_id").get<std::string>();
        e.user_login = j.at("user_login").get<std::string>();
        e.protocol_id = j.at("protocol_id").get<std::string>();
        auto kind = event_kind_from(j.at("kind").get<std::string>());
        if (!kind) throw std::invalid_argument("unknown event kind");
        e.kind = *kind;
        if (auto it = j.find("refs"); it != j.end() && it->is_object()) {
            e.refs.experiment_id = opt_str(*it, "experiment_id");
            e.refs.task_id = opt_str(*it, "task_id");
            e.refs.view_id = opt_str(*it, "view_id");
            e.refs.instance_id = opt_str(*it, "instance_id");
            if (auto p = it->find("presented_order_index"); p != it->end() && !p->is_null()) {
                e.refs.presented_order_index = p->get<std::size_t>();
            }
        }
        if (auto it = j.find("payload"); it != j.end()) {
            e.payload = *it;
        }
        auto ts = parse_iso8601(j.at("server_ts").get<std::string>());
        if (!ts) throw std::invalid_argument("bad server_ts");
        e.server_ts = *ts;
        if (auto it = j.find("client_elapsed_ms"); it != j.end() && !it->is_null()) {
            e.client_elapsed_ms = it->get<std::int64_t>();
        }
        return e;
    } catch (const nlohmann::ordered_json::exception& ex) {
        throw std::invalid_argument(std::string("malformed event record: ") + ex.what());
    }
}

}  // namespace webxaii
