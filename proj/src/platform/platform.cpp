#include "webxaii/platform/platform.hpp"

#include <cctype>
#include <fstream>

namespace webxaii {

namespace fs = std::filesystem;

namespace {

EventStore open_store(const std::optional<fs::path>& dir) { return dir ? EventStore(*dir) : EventStore(); }

UserRegistry open_users(const PlatformOptions& o) {
    if (!o.data_dir) return UserRegistry(o.hash_cost);
    fs::create_directories(*o.data_dir);
    return UserRegistry(*o.data_dir / "users.json", o.hash_cost);
}

}  // namespace

std::string file_safe_name(std::string_view id) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id) {
        if (std::isalnum(c) || c == '_' || c == '-') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

Platform::Platform(PlatformOptions options)
    : options_(std::move(options)),
      store_(open_store(options_.data_dir)),
      users_(open_users(options_)),
      tokens_(options_.token_ttl),
      sessions_(catalog_, store_, options_.engine),
      connection_(users_, tokens_, sessions_, store_) {
    if (options_.data_dir && fs::is_directory(*options_.data_dir / "protocols")) {
        auto load = load_protocol_directory(*options_.data_dir / "protocols");
        for (auto& spec : load.specs) catalog_.put(std::make_shared<const ProtocolSpec>(std::move(spec)));
        for (const auto& [file, diags] : load.reports) {
            for (const auto& d : diags) {
                if (d.is_error()) recovery_problems_.push_back(file.string() + ": " + format_diagnostic(d));
            }
        }
    }
    auto problems = sessions_.recover();
    recovery_problems_.insert(recovery_problems_.end(), problems.begin(), problems.end());
}

void Platform::persist(const ProtocolSpec& spec) const {
    if (!options_.data_dir) return;
    auto dir = *options_.data_dir / "protocols";
    fs::create_directories(dir);
    auto file = dir / (file_safe_name(spec.id) + ".json");
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << serialize_protocol(spec);
        if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, file);
}

std::size_t Platform::session_count(std::string_view protocol_id) const {
    std::size_t n = 0;
    for (const auto& s : sessions_.summaries()) n += s.protocol_id == protocol_id;
    return n;
}

Platform::InstallStatus Platform::install(ProtocolSpec spec) {
    std::lock_guard lock(install_mutex_);
    if (auto existing = catalog_.find(spec.id)) {
        if (*existing == spec) return InstallStatus::Unchanged;
        if (session_count(spec.id) > 0) return InstallStatus::Conflict;
    }
    persist(spec);
    catalog_.put(std::make_shared<const ProtocolSpec>(std::move(spec)));
    return InstallStatus::Installed;
}

Platform::Upload Platform::upload_protocol(std::string_view text) {
    Upload up;
    auto parsed = parse_protocol(text, options_.asset_root);
    up.diagnostics = std::move(parsed.diagnostics);
    if (!parsed.spec) return up;
    up.protocol_id = parsed.spec->id;
    std::lock_guard lock(install_mutex_);
    if (catalog_.contains(up.protocol_id)) {
        up.status = Upload::Status::Conflict;
        return up;
    }
    persist(*parsed.spec);
    catalog_.put(std::make_shared<const ProtocolSpec>(std::move(*parsed.spec)));
    up.status = Upload::Status::Loaded;
    return up;
}

Platform::Provisioned Platform::provision(const std::vector<ProvisioningRecord>& records, Timestamp now) {
    Provisioned out;
    for (const auto& r : records) {
        try {
            users_.register_user(r.login, r.access_code, r.protocol_id, catalog_, now);
            out.added.push_back(r.login);
        } catch (const ConnectionError& e) {
            out.rejected.push_back({r.login, e.code(), e.what()});
        }
    }
    return out;
}

nlohmann::ordered_json Platform::protocol_list() const {
    auto summaries = sessions_.summaries();
    auto list = nlohmann::ordered_json::array();
    for (const auto& spec : catalog_.list()) {
        std::size_t n = 0;
        for (const auto& s : summaries) n += s.protocol_id == spec->id;
        list.push_back({{"id", spec->id}, {"title", spec->title}, {"sessions", n}});
    }
    return list;
}

nlohmann::ordered_json Platform::status() const {
    auto summaries = sessions_.summaries();
    auto protocols = nlohmann::ordered_json::array();
    for (const auto& spec : catalog_.list()) {
        std::size_t in_progress = 0;
        std::size_t completed = 0;
        for (const auto& s : summaries) {
            if (s.protocol_id != spec->id) continue;
            (s.status == SessionStatus::Completed ? completed : in_progress) += 1;
        }
        nlohmann::ordered_json p;
        p["id"] = spec->id;
        p["registered_users"] = users_.count_for(spec->id);
        p["sessions"] = {{"in_progress", in_progress}, {"completed", completed}};
        protocols.push_back(std::move(p));
    }
    nlohmann::ordered_json j;
    j["protocols"] = std::move(protocols);
    return j;
}

}  // namespace webxaii
