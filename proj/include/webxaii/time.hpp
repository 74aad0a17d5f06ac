#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace webxaii {

/// UTC instant with millisecond precision.
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

/// Source of "now". The server uses the system clock; simulations inject a virtual one.
using Clock = std::function<Timestamp()>;

Timestamp system_now();

/// Formats as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string to_iso8601(Timestamp ts);

/// Accepts exactly the format produced by to_iso8601.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Manually advanced clock; starts at 2000-01-01T00:00:00.000Z unless told otherwise.
class VirtualClock {
public:
    VirtualClock();
    explicit VirtualClock(Timestamp start) : now_(start) {}

    Timestamp now() const { return now_; }
    void advance(Millis by) { now_ += by; }
    void set(Timestamp t) { now_ = t; }

    Clock as_clock() { return [this] { return now_; }; }

private:
    Timestamp now_;
};

}  // namespace webxaii
