#include "webxaii/json_util.hpp"

#include <charconv>
#include <cmath>

namespace webxaii {

std::string child_path(const std::string& parent, std::string_view key) {
    std::string out = parent;
    out.push_back('/');
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out.push_back(c);
    }
    return out;
}

std::string index_path(const std::string& parent, std::size_t index) {
    return parent + "/" + std::to_string(index);
}

nlohmann::ordered_json number_json(double value) {
    constexpr double kExactIntLimit = 9007199254740992.0;  // 2^53
    if (std::isfinite(value) && std::floor(value) == value && std::fabs(value) < kExactIntLimit) {
        return static_cast<std::int64_t>(value);
    }
    return value;
}

std::string format_number(double value) {
    constexpr double kExactIntLimit = 9007199254740992.0;
    if (std::isfinite(value) && std::floor(value) == value && std::fabs(value) < kExactIntLimit) {
        return std::to_string(static_cast<std::int64_t>(value));
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc{} ? ptr : buf);
}

}  // namespace webxaii
