#pragma once

#include "webxaii/config/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webxaii {

struct Diagnostic {
    enum class Severity { Error, Warning };

    Severity severity = Severity::Error;
    std::string path;  // JSON-pointer style, "/" is the document root
    std::string message;

    bool is_error() const { return severity == Severity::Error; }
    bool operator==(const Diagnostic&) const = default;
};

const char* to_string(Diagnostic::Severity s);  // "ERROR" / "WARNING"

/// "SEVERITY path message"
std::string format_diagnostic(const Diagnostic& d);

bool has_errors(const std::vector<Diagnostic>& diags);

struct ParseResult {
    std::optional<ProtocolSpec> spec;  // set iff diagnostics hold no error
    std::vector<Diagnostic> diagnostics;

    explicit operator bool() const { return spec.has_value(); }
};

/// Decodes and validates a protocol document. Never throws on bad input.
/// Unknown keys are reported as warnings; everything else that is wrong is an
/// error and no spec is returned. With an asset root, missing image files are
/// reported as warnings.
ParseResult parse_protocol(std::string_view text, const std::optional<std::filesystem::path>& asset_root = {});

/// Reads `path` and parses it. An unreadable file yields a single root error.
ParseResult load_protocol_file(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& asset_root = {});

/// Checks every structural invariant of the model. With an asset root, image
/// sources that do not exist beneath it are reported as warnings.
std::vector<Diagnostic> validate_protocol(const ProtocolSpec& spec,
                                          const std::optional<std::filesystem::path>& asset_root = {});

/// Canonical JSON form, 2-space indented, keys in schema order, defaults explicit.
std::string serialize_protocol(const ProtocolSpec& spec);

/// Validates instruction-body markup: plain text, blank-line paragraphs,
/// *emphasis*, **strong**, "- " list items and line breaks. Raw HTML is rejected.
std::optional<std::string> check_rich_text(std::string_view body);

/// True for relative paths without "..", backslashes, schemes or a leading slash.
bool is_safe_relative_path(std::string_view path);

}  // namespace webxaii
