#pragma once

#include "webxaii/config/catalog.hpp"
#include "webxaii/connection/credentials.hpp"
#include "webxaii/connection/user.hpp"
#include "webxaii/events/event_store.hpp"
#include "webxaii/session/session_manager.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace webxaii {

class ConnectionError : public std::runtime_error {
public:
    enum class Code { DuplicateLogin, UnknownProtocol, InvalidRecord, BadCredentials, InvalidToken, ExpiredToken };

    ConnectionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

/// One entry of a users provisioning file: [{"login","access_code","protocol"}].
struct ProvisioningRecord {
    std::string login;
    std::string access_code;
    std::string protocol_id;
};

/// Throws ConnectionError(InvalidRecord) naming the offending index.
std::vector<ProvisioningRecord> parse_provisioning(const nlohmann::json& doc);

/// Participant registry. With a file path, the registry mirrors that JSON
/// file: it is re-read whenever it changed on disk and rewritten atomically,
/// under an advisory lock, on every registration. The CLI can therefore
/// provision users while a server runs on the same data directory.
class UserRegistry {
public:
    UserRegistry() = default;
    explicit UserRegistry(std::filesystem::path file, HashCost cost = HashCost::Interactive);
    explicit UserRegistry(HashCost cost) : cost_(cost) {}

    UserRecord register_user(const std::string& login, std::string_view access_code, const std::string& protocol_id,
                             const ProtocolCatalog& catalog, Timestamp now);

    std::optional<UserRecord> find(std::string_view login) const;
    std::vector<UserRecord> list() const;  // ordered by login
    std::size_t count_for(std::string_view protocol_id) const;
    HashCost cost() const { return cost_; }

private:
    // All require mutex_.
    void refresh() const;
    void load() const;
    void save() const;

    std::optional<std::filesystem::path> file_;
    HashCost cost_ = HashCost::Interactive;
    mutable std::mutex mutex_;
    mutable std::map<std::string, UserRecord, std::less<>> users_;
    mutable std::optional<std::pair<std::filesystem::file_time_type, std::uintmax_t>> loaded_stamp_;
};

struct SessionToken {
    std::string token;
    std::string login;
    Timestamp issued_at{};
    Timestamp expires_at{};
};

/// Bearer tokens, one active per login. Kept in memory: after a restart
/// participants log in again and resume.
class TokenService {
public:
    explicit TokenService(Millis ttl = std::chrono::hours{24}) : ttl_(ttl) {}

    /// Issues a fresh token, revoking the login's previous one.
    SessionToken issue(const std::string& login, Timestamp now);
    /// Returns the login. Throws ConnectionError(InvalidToken | ExpiredToken).
    std::string resolve(std::string_view token, Timestamp now) const;

private:
    static std::string key(std::string_view token);

    Millis ttl_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, SessionToken> by_key_;
    std::unordered_map<std::string, std::string> key_by_login_;
};

struct AuthResult {
    SessionToken token;
    std::string protocol_id;
    std::string session_id;
    bool resumed = false;
};

/// Checks credentials and dispatches participants to their assigned protocol.
class Connection {
public:
    Connection(UserRegistry& users, TokenService& tokens, SessionManager& sessions, EventStore& store);

    /// Unknown logins and wrong codes fail identically (BadCredentials) and
    /// leave a failed_login audit record.
    AuthResult authenticate(const std::string& login, std::string_view access_code, Timestamp now);

    UserRecord resolve_token(std::string_view token, Timestamp now) const;

private:
    UserRegistry& users_;
    TokenService& tokens_;
    SessionManager& sessions_;
    EventStore& store_;
    std::mutex audit_mutex_;
};

}  // namespace webxaii
