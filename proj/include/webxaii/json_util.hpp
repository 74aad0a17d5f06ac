#pragma once

#include "webxaii/config/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <string_view>

namespace webxaii {

// JSON-pointer path helpers. Internally the root is the empty string; it is
// shown to users as "/".
std::string child_path(const std::string& parent, std::string_view key);
std::string index_path(const std::string& parent, std::size_t index);
inline std::string display_path(const std::string& path) { return path.empty() ? "/" : path; }

/// Integral values are emitted as JSON integers so that "20" stays "20".
nlohmann::ordered_json number_json(double value);

/// Shortest decimal text for a number: 3 -> "3", 2.5 -> "2.5".
std::string format_number(double value);

nlohmann::ordered_json protocol_to_json(const ProtocolSpec& spec);
nlohmann::ordered_json media_to_json(const MediaRef& m);
nlohmann::ordered_json question_to_json(const QuestionSpec& q);

}  // namespace webxaii
