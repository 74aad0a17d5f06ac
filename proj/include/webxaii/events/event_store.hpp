#pragma once

#include "webxaii/events/event.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace webxaii {

class EventStoreError : public std::runtime_error {
public:
    enum class Code { SequenceConflict, StorageFailure };

    EventStoreError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

struct EventFilter {
    std::optional<std::string> protocol_id;
    std::optional<std::string> session_id;
    std::optional<EventKind> kind;
};

/// Append-only event log, one stream per session.
///
/// With a data directory every session lives in `<dir>/sessions/<session_id>.jsonl`
/// and audit records that belong to no session (failed logins) in
/// `<dir>/audit.jsonl`. Each append is written and fsync'ed before it is
/// acknowledged. Without a directory the log is kept in memory only.
///
/// Appends to different sessions proceed concurrently; readers see a prefix.
class EventStore {
public:
    EventStore() = default;
    /// Opens (creating if needed) and loads an on-disk log. A torn final line
    /// left by a crash is dropped and truncated away. Throws EventStoreError
    /// (StorageFailure) on unreadable or corrupt files.
    explicit EventStore(std::filesystem::path data_dir);

    EventStore(const EventStore&) = delete;
    EventStore& operator=(const EventStore&) = delete;

    /// `e.seq` must equal last_seq(e.session_id) + 1, otherwise SequenceConflict.
    std::uint64_t append(const Event& e);

    std::uint64_t last_seq(const std::string& session_id) const;

    /// Events matching every set field, ordered by (session_id, seq).
    std::vector<Event> list(const EventFilter& filter = {}) const;
    std::vector<Event> session_events(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;  // excludes the audit stream

    bool durable() const { return dir_.has_value(); }

private:
    struct Stream {
        mutable std::mutex mutex;
        std::vector<Event> events;
    };

    std::shared_ptr<Stream> stream(const std::string& session_id, bool create);
    std::shared_ptr<const Stream> stream(const std::string& session_id) const;
    std::filesystem::path file_for(const std::string& session_id) const;
    void load_file(const std::filesystem::path& file);
    void write_durably(const std::filesystem::path& file, const std::string& line);

    std::optional<std::filesystem::path> dir_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Stream>> streams_;
};

}  // namespace webxaii
