#pragma once

#include "webxaii/session/engine.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace webxaii {

struct SessionSummary {
    std::string session_id;
    std::string user_login;
    std::string protocol_id;
    SessionStatus status = SessionStatus::InProgress;
};

/// Owns every live session. Each session is its own serialization domain:
/// with_session() runs the callback under that session's mutex, while
/// different sessions run concurrently.
class SessionManager {
public:
    SessionManager(const ProtocolCatalog& catalog, EventStore& store, EngineOptions options = {});

    /// Rebuilds all sessions found in the event store. Returns one message per
    /// log that could not be replayed (those sessions stay unavailable).
    std::vector<std::string> recover();

    struct Started {
        std::string session_id;
        bool resumed = false;
    };

    /// Returns the user's existing session unchanged, or starts a new one.
    Started start_or_resume(const UserRecord& user, Timestamp now);

    /// Calls f(SessionEngine&, SessionState&) with the session locked.
    /// Throws std::out_of_range for an unknown session id.
    template <class F>
    decltype(auto) with_session(const std::string& session_id, F&& f) {
        auto slot = find_slot(session_id);
        std::lock_guard lock(slot->mutex);
        return f(*slot->engine, slot->state);
    }

    std::optional<SessionState> snapshot(const std::string& session_id) const;
    std::vector<SessionSummary> summaries() const;

    const EventStore& events() const { return store_; }

private:
    struct Slot {
        std::mutex mutex;
        std::shared_ptr<SessionEngine> engine;
        SessionState state;
    };

    std::shared_ptr<Slot> find_slot(const std::string& session_id) const;
    std::shared_ptr<SessionEngine> engine_for(const std::string& protocol_id);  // requires mutex_

    const ProtocolCatalog& catalog_;
    EventStore& store_;
    EngineOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
    std::map<std::string, std::shared_ptr<SessionEngine>> engines_;
};

}  // namespace webxaii
