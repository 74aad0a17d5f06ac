#include "webxaii/session/session_manager.hpp"

#include <stdexcept>

namespace webxaii {

SessionManager::SessionManager(const ProtocolCatalog& catalog, EventStore& store, EngineOptions options)
    : catalog_(catalog), store_(store), options_(std::move(options)) {}

std::shared_ptr<SessionEngine> SessionManager::engine_for(const std::string& protocol_id) {
    auto spec = catalog_.find(protocol_id);
    if (!spec) return nullptr;
    auto& engine = engines_[protocol_id];
    if (!engine || &engine->spec() != spec.get()) engine = std::make_shared<SessionEngine>(spec, store_, options_);
    return engine;
}

std::vector<std::string> SessionManager::recover() {
    std::vector<std::string> problems;
    std::lock_guard lock(mutex_);
    for (const auto& id : store_.session_ids()) {
        if (slots_.count(id)) continue;
        auto events = store_.session_events(id);
        if (events.empty()) continue;
        auto engine = engine_for(events.front().protocol_id);
        if (!engine) {
            problems.push_back(id + ": protocol '" + events.front().protocol_id + "' is not loaded");
            continue;
        }
        try {
            auto slot = std::make_shared<Slot>();
            slot->engine = engine;
            slot->state = engine->replay(events);
            slots_.emplace(id, std::move(slot));
        } catch (const SessionError& ex) {
            problems.push_back(id + ": " + ex.what());
        }
    }
    return problems;
}

SessionManager::Started SessionManager::start_or_resume(const UserRecord& user, Timestamp now) {
    const auto id = session_id_for(user.protocol_id, user.login);
    std::lock_guard lock(mutex_);
    if (slots_.count(id)) return {id, true};
    auto engine = engine_for(user.protocol_id);
    if (!engine) {
        throw SessionError(SessionError::Code::AssignmentMismatch,
                           "user '" + user.login + "' is assigned to unknown protocol '" + user.protocol_id + "'");
    }
    auto slot = std::make_shared<Slot>();
    slot->engine = engine;
    slot->state = engine->start_session(user, now);
    slots_.emplace(id, std::move(slot));
    return {id, false};
}

std::shared_ptr<SessionManager::Slot> SessionManager::find_slot(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = slots_.find(session_id);
    if (it == slots_.end()) throw std::out_of_range("unknown session '" + session_id + "'");
    return it->second;
}

std::optional<SessionState> SessionManager::snapshot(const std::string& session_id) const {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(mutex_);
        auto it = slots_.find(session_id);
        if (it == slots_.end()) return std::nullopt;
        slot = it->second;
    }
    std::lock_guard lock(slot->mutex);
    return slot->state;
}

std::vector<SessionSummary> SessionManager::summaries() const {
    std::vector<std::pair<std::string, std::shared_ptr<Slot>>> slots;
    {
        std::lock_guard lock(mutex_);
        slots.assign(slots_.begin(), slots_.end());
    }
    std::vector<SessionSummary> out;
    for (const auto& [id, slot] : slots) {
        std::lock_guard lock(slot->mutex);
        out.push_back({id, slot->state.user_login, slot->state.protocol_id, slot->state.status()});
    }
    return out;
}

}  // namespace webxaii
