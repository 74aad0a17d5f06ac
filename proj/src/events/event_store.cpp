#include "webxaii/events/event_store.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace webxaii {

namespace fs = std::filesystem;

namespace {

constexpr const char* kAuditFile = "audit.jsonl";

[[noreturn]] void storage_failure(const std::string& what) {
    throw EventStoreError(EventStoreError::Code::StorageFailure, what);
}

bool valid_stream_name(const std::string& id) {
    if (id.empty()) return true;  // audit stream
    if (id.front() == '.') return false;
    return id.find('/') == std::string::npos && id.find('\\') == std::string::npos;
}

void fsync_directory(const fs::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

}  // namespace

EventStore::EventStore(fs::path data_dir) : dir_(std::move(data_dir)) {
    std::error_code ec;
    fs::create_directories(*dir_ / "sessions", ec);
    if (ec) storage_failure("cannot create " + (*dir_ / "sessions").string() + ": " + ec.message());

    if (fs::exists(*dir_ / kAuditFile)) load_file(*dir_ / kAuditFile);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*dir_ / "sessions")) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    for (const auto& f : files) load_file(f);
}

void EventStore::load_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) storage_failure("cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    std::vector<Event> events;
    std::size_t pos = 0;
    std::size_t good_end = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        ++line_no;
        if (nl == std::string::npos) break;  // torn tail, never acknowledged
        auto line = std::string_view(content).substr(pos, nl - pos);
        if (!line.empty()) {
            auto j = nlohmann::ordered_json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                storage_failure(file.string() + ":" + std::to_string(line_no) + ": unparsable event record");
            }
            try {
                events.push_back(event_from_json(j));
            } catch (const std::invalid_argument& ex) {
                storage_failure(file.string() + ":" + std::to_string(line_no) + ": " + ex.what());
            }
            if (events.back().seq != events.size()) {
                storage_failure(file.string() + ":" + std::to_string(line_no) + ": sequence gap");
            }
        }
        pos = nl + 1;
        good_end = pos;
    }
    if (good_end < content.size()) {
        if (::truncate(file.c_str(), static_cast<off_t>(good_end)) != 0) {
            storage_failure("cannot truncate torn record in " + file.string());
        }
    }
    if (events.empty()) return;

    auto s = std::make_shared<Stream>();
    std::string id = events.front().session_id;
    s->events = std::move(events);
    std::unique_lock lock(mutex_);
    streams_[id] = std::move(s);
}

fs::path EventStore::file_for(const std::string& session_id) const {
    if (session_id.empty()) return *dir_ / kAuditFile;
    return *dir_ / "sessions" / (session_id + ".jsonl");
}

void EventStore::write_durably(const fs::path& file, const std::string& line) {
    bool existed = fs::exists(file);
    int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) storage_failure("cannot open " + file.string() + ": " + std::strerror(errno));
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        ssize_t n = ::write(fd, data, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            storage_failure("cannot write " + file.string() + ": " + std::strerror(err));
        }
        data += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        int err = errno;
        ::close(fd);
        storage_failure("cannot sync " + file.string() + ": " + std::strerror(err));
    }
    ::close(fd);
    if (!existed) fsync_directory(file.parent_path());
}

std::shared_ptr<EventStore::Stream> EventStore::stream(const std::string& session_id, bool create) {
    {
        std::shared_lock lock(mutex_);
        auto it = streams_.find(session_id);
        if (it != streams_.end()) return it->second;
    }
    if (!create) return nullptr;
    std::unique_lock lock(mutex_);
    auto& slot = streams_[session_id];
    if (!slot) slot = std::make_shared<Stream>();
    return slot;
}

std::shared_ptr<const EventStore::Stream> EventStore::stream(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = streams_.find(session_id);
    return it == streams_.end() ? nullptr : it->second;
}

std::uint64_t EventStore::append(const Event& e) {
    if (!valid_stream_name(e.session_id)) storage_failure("invalid session id '" + e.session_id + "'");
    auto s = stream(e.session_id, true);
    std::lock_guard lock(s->mutex);
    const std::uint64_t expected = s->events.size() + 1;
    if (e.seq != expected) {
        throw EventStoreError(EventStoreError::Code::SequenceConflict,
                              "session '" + e.session_id + "' expects seq " + std::to_string(expected) + ", got " +
                                  std::to_string(e.seq));
    }
    if (dir_) write_durably(file_for(e.session_id), event_to_json(e).dump() + "\n");
    s->events.push_back(e);
    return e.seq;
}

std::uint64_t EventStore::last_seq(const std::string& session_id) const {
    auto s = stream(session_id);
    if (!s) return 0;
    std::lock_guard lock(s->mutex);
    return s->events.size();
}

std::vector<Event> EventStore::list(const EventFilter& filter) const {
    std::vector<std::pair<std::string, std::shared_ptr<Stream>>> streams;
    {
        std::shared_lock lock(mutex_);
        if (filter.session_id) {
            auto it = streams_.find(*filter.session_id);
            if (it != streams_.end()) streams.emplace_back(*it);
        } else {
            streams.assign(streams_.begin(), streams_.end());
        }
    }
    std::vector<Event> out;
    for (const auto& [_, s] : streams) {
        std::lock_guard lock(s->mutex);
        for (const auto& e : s->events) {
            if (filter.protocol_id && e.protocol_id != *filter.protocol_id) continue;
            if (filter.kind && e.kind != *filter.kind) continue;
            out.push_back(e);
        }
    }
    return out;
}

std::vector<Event> EventStore::session_events(const std::string& session_id) const {
    EventFilter f;
    f.session_id = session_id;
    return list(f);
}

std::vector<std::string> EventStore::session_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : streams_) {
        if (!id.empty()) out.push_back(id);
    }
    return out;
}

}  // namespace webxaii
