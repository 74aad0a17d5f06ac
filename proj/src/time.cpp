#include "webxaii/time.hpp"

#include <charconv>
#include <cstdio>

namespace webxaii {

Timestamp system_now() {
    return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

VirtualClock::VirtualClock()
    : now_(std::chrono::sys_days{std::chrono::year{2000} / 1 / 1}) {}

std::string to_iso8601(Timestamp ts) {
    using namespace std::chrono;
    auto day = floor<days>(ts);
    year_month_day ymd{day};
    hh_mm_ss<milliseconds> tod{ts - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()),
                  static_cast<int>(tod.subseconds().count()));
    return buf;
}

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    auto first = text.data() + pos;
    auto last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && out >= 0;
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    // 2000-01-01T00:00:00.000Z
    if (text.size() != 24 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
        return std::nullopt;
    }
    int y, mo, d, h, mi, s, ms;
    if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
        !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi) || !read_int(text, 17, 2, s) ||
        !read_int(text, 20, 3, ms)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

}  // namespace webxaii
