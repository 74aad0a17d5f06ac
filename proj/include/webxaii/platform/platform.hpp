#pragma once

#include "webxaii/config/catalog.hpp"
#include "webxaii/connection/connection.hpp"
#include "webxaii/events/event_store.hpp"
#include "webxaii/session/session_manager.hpp"

#include <json.hpp>

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace webxaii {

struct PlatformOptions {
    std::optional<std::filesystem::path> data_dir;  // unset: nothing touches the disk
    std::optional<std::filesystem::path> asset_root;
    HashCost hash_cost = HashCost::Interactive;
    EngineOptions engine;
    Millis token_ttl = std::chrono::hours{24};
};

/// Everything a running deployment shares: protocols, users, tokens, sessions
/// and the event log. With a data directory, the layout is
///
///   <data>/protocols/<id>.json   canonical protocol files
///   <data>/users.json            user registry
///   <data>/sessions/*.jsonl      per-session event logs
///   <data>/audit.jsonl           failed logins
class Platform {
public:
    explicit Platform(PlatformOptions options = {});

    Platform(const Platform&) = delete;
    Platform& operator=(const Platform&) = delete;

    const PlatformOptions& options() const { return options_; }
    ProtocolCatalog& catalog() { return catalog_; }
    const ProtocolCatalog& catalog() const { return catalog_; }
    EventStore& store() { return store_; }
    const EventStore& store() const { return store_; }
    UserRegistry& users() { return users_; }
    const UserRegistry& users() const { return users_; }
    TokenService& tokens() { return tokens_; }
    SessionManager& sessions() { return sessions_; }
    const SessionManager& sessions() const { return sessions_; }
    Connection& connection() { return connection_; }

    /// Logs that could not be replayed at startup.
    const std::vector<std::string>& recovery_problems() const { return recovery_problems_; }

    enum class InstallStatus { Installed, Unchanged, Conflict };

    /// Adds a validated protocol and persists it. A different protocol under an
    /// id that already has sessions is refused.
    InstallStatus install(ProtocolSpec spec);

    struct Upload {
        enum class Status { Loaded, Invalid, Conflict } status = Status::Invalid;
        std::string protocol_id;
        std::vector<Diagnostic> diagnostics;
    };

    /// Parses, validates and installs a protocol document. Never replaces an
    /// existing protocol.
    Upload upload_protocol(std::string_view text);

    struct Rejection {
        std::string login;
        ConnectionError::Code code;
        std::string message;
    };
    struct Provisioned {
        std::vector<std::string> added;
        std::vector<Rejection> rejected;
    };

    Provisioned provision(const std::vector<ProvisioningRecord>& records, Timestamp now);

    /// [{"id","title","sessions"}] ordered by id.
    nlohmann::ordered_json protocol_list() const;
    /// {"protocols":[{"id","registered_users","sessions":{"in_progress","completed"}}]}
    nlohmann::ordered_json status() const;

private:
    void persist(const ProtocolSpec& spec) const;
    std::size_t session_count(std::string_view protocol_id) const;

    PlatformOptions options_;
    ProtocolCatalog catalog_;
    EventStore store_;
    UserRegistry users_;
    TokenService tokens_;
    SessionManager sessions_;
    Connection connection_;
    std::vector<std::string> recovery_problems_;
    std::mutex install_mutex_;
};

/// Percent-encodes every byte outside [A-Za-z0-9_-] so `id` is a safe file name.
std::string file_safe_name(std::string_view id);

}  // namespace webxaii
