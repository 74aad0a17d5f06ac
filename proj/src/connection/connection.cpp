#include "webxaii/connection/connection.hpp"

#include <sodium.h>
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace webxaii {

namespace fs = std::filesystem;

std::vector<ProvisioningRecord> parse_provisioning(const nlohmann::json& doc) {
    if (!doc.is_array()) throw ConnectionError(ConnectionError::Code::InvalidRecord, "users file must be a JSON array");
    std::vector<ProvisioningRecord> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& r = doc[i];
        auto str = [&](const char* key) -> std::string {
            auto it = r.is_object() ? r.find(key) : r.end();
            if (!r.is_object() || it == r.end() || !it->is_string() || it->get<std::string>().empty()) {
                throw ConnectionError(ConnectionError::Code::InvalidRecord,
                                      "record " + std::to_string(i) + ": '" + key + "' must be a non-empty string");
            }
            return it->get<std::string>();
        };
        out.push_back({str("login"), str("access_code"), str("protocol")});
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

/// Exclusive advisory lock on "<file>.lock", held for the object's lifetime.
class FileLock {
public:
    explicit FileLock(const fs::path& file) {
        auto lock_path = file;
        lock_path += ".lock";
        fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw std::runtime_error("cannot open " + lock_path.string());
        while (::flock(fd_, LOCK_EX) != 0) {
            if (errno != EINTR) {
                ::close(fd_);
                throw std::runtime_error("cannot lock " + lock_path.string());
            }
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace

UserRegistry::UserRegistry(fs::path file, HashCost cost) : file_(std::move(file)), cost_(cost) {
    std::lock_guard lock(mutex_);
    load();
}

void UserRegistry::load() const {
    std::error_code ec;
    auto mtime = fs::last_write_time(*file_, ec);
    if (ec) {
        users_.clear();
        loaded_stamp_.reset();
        return;
    }
    auto size = fs::file_size(*file_, ec);
    std::ifstream in(*file_);
    std::stringstream buf;
    buf << in.rdbuf();
    auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) throw std::runtime_error("corrupt user registry " + file_->string());
    std::map<std::string, UserRecord, std::less<>> users;
    for (const auto& r : doc) {
        UserRecord u;
        u.login = r.at("login").get<std::string>();
        u.access_code_hash = r.at("access_code_hash").get<std::string>();
        u.protocol_id = r.at("protocol_id").get<std::string>();
        if (auto ts = parse_iso8601(r.at("created_at").get<std::string>())) u.created_at = *ts;
        users.emplace(u.login, std::move(u));
    }
    users_ = std::move(users);
    loaded_stamp_ = {mtime, size};
}

void UserRegistry::refresh() const {
    if (!file_) return;
    std::error_code ec;
    auto mtime = fs::last_write_time(*file_, ec);
    if (ec) {
        if (loaded_stamp_) load();
        return;
    }
    auto size = fs::file_size(*file_, ec);
    if (!loaded_stamp_ || loaded_stamp_->first != mtime || loaded_stamp_->second != size) load();
}

void UserRegistry::save() const {
    if (!file_) return;
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& [_, u] : users_) {
        nlohmann::ordered_json r;
        r["login"] = u.login;
        r["access_code_hash"] = u.access_code_hash;
        r["protocol_id"] = u.protocol_id;
        r["created_at"] = to_iso8601(u.created_at);
        doc.push_back(std::move(r));
    }
    auto tmp = *file_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << doc.dump(2) << "\n";
        out.flush();
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, *file_);
    std::error_code ec;
    loaded_stamp_ = {fs::last_write_time(*file_, ec), fs::file_size(*file_, ec)};
}

UserRecord UserRegistry::register_user(const std::string& login, std::string_view access_code,
                                       const std::string& protocol_id, const ProtocolCatalog& catalog, Timestamp now) {
    if (login.empty()) throw ConnectionError(ConnectionError::Code::InvalidRecord, "login must be non-empty");
    if (!catalog.contains(protocol_id)) {
        throw ConnectionError(ConnectionError::Code::UnknownProtocol, "unknown protocol '" + protocol_id + "'");
    }
    if (find(login)) throw ConnectionError(ConnectionError::Code::DuplicateLogin, "login '" + login + "' already exists");

    UserRecord u{login, hash_access_code(access_code, cost_), protocol_id, now};
    std::lock_guard lock(mutex_);
    std::optional<FileLock> file_lock;
    if (file_) file_lock.emplace(*file_);
    refresh();
    if (!users_.emplace(login, u).second) {
        throw ConnectionError(ConnectionError::Code::DuplicateLogin, "login '" + login + "' already exists");
    }
    try {
        save();
    } catch (...) {
        users_.erase(login);
        throw;
    }
    return u;
}

std::optional<UserRecord> UserRegistry::find(std::string_view login) const {
    std::lock_guard lock(mutex_);
    refresh();
    auto it = users_.find(login);
    if (it == users_.end()) return std::nullopt;
    return it->second;
}

std::vector<UserRecord> UserRegistry::list() const {
    std::lock_guard lock(mutex_);
    refresh();
    std::vector<UserRecord> out;
    for (const auto& [_, u] : users_) out.push_back(u);
    return out;
}

std::size_t UserRegistry::count_for(std::string_view protocol_id) const {
    std::lock_guard lock(mutex_);
    refresh();
    std::size_t n = 0;
    for (const auto& [_, u] : users_) n += u.protocol_id == protocol_id;
    return n;
}

// ---------------------------------------------------------------------------

std::string TokenService::key(std::string_view token) {
    unsigned char digest[crypto_generichash_BYTES];
    crypto_generichash(digest, sizeof digest, reinterpret_cast<const unsigned char*>(token.data()), token.size(),
                       nullptr, 0);
    return std::string(reinterpret_cast<const char*>(digest), sizeof digest);
}

SessionToken TokenService::issue(const std::string& login, Timestamp now) {
    SessionToken t{random_token(), login, now, now + ttl_};
    auto k = key(t.token);
    std::lock_guard lock(mutex_);
    if (auto old = key_by_login_.find(login); old != key_by_login_.end()) by_key_.erase(old->second);
    key_by_login_[login] = k;
    by_key_[k] = t;
    return t;
}

std::string TokenService::resolve(std::string_view token, Timestamp now) const {
    auto k = key(token);
    std::lock_guard lock(mutex_);
    auto it = by_key_.find(k);
    if (it == by_key_.end()) throw ConnectionError(ConnectionError::Code::InvalidToken, "invalid session token");
    if (now >= it->second.expires_at) throw ConnectionError(ConnectionError::Code::ExpiredToken, "session token expired");
    return it->second.login;
}

// ---------------------------------------------------------------------------

Connection::Connection(UserRegistry& users, TokenService& tokens, SessionManager& sessions, EventStore& store)
    : users_(users), tokens_(tokens), sessions_(sessions), store_(store) {}

AuthResult Connection::authenticate(const std::string& login, std::string_view access_code, Timestamp now) {
    auto user = users_.find(login);
    bool ok = false;
    if (user) {
        ok = verify_access_code(user->access_code_hash, access_code);
    } else {
        verify_against_dummy(access_code, users_.cost());
    }
    if (!ok) {
        {
            std::lock_guard lock(audit_mutex_);
            Event e;
            e.seq = store_.last_seq("") + 1;
            e.user_login = login;
            e.protocol_id = user ? user->protocol_id : "";
            e.kind = EventKind::FailedLogin;
            e.payload["reason"] = "bad_credentials";
            e.server_ts = now;
            store_.append(e);
        }
        throw ConnectionError(ConnectionError::Code::BadCredentials, "invalid login or access code");
    }

    auto started = sessions_.start_or_resume(*user, now);
    AuthResult result;
    result.token = tokens_.issue(login, now);
    result.protocol_id = user->protocol_id;
    result.session_id = started.session_id;
    result.resumed = started.resumed;
    sessions_.with_session(started.session_id, [&](SessionEngine& engine, SessionState& state) {
        nlohmann::ordered_json payload;
        payload["resumed"] = started.resumed;
        engine.record(state, EventKind::Login, std::move(payload), now);
    });
    return result;
}

UserRecord Connection::resolve_token(std::string_view token, Timestamp now) const {
    auto login = tokens_.resolve(token, now);
    auto user = users_.find(login);
    if (!user) throw ConnectionError(ConnectionError::Code::InvalidToken, "invalid session token");
    return *user;
}

}  // namespace webxaii
