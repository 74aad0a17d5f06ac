#pragma once

#include "webxaii/config/protocol_io.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

namespace webxaii {

using ProtocolPtr = std::shared_ptr<const ProtocolSpec>;

/// Thread-safe set of loaded protocols, keyed by protocol id.
class ProtocolCatalog {
public:
    ProtocolPtr find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    /// Returns false (and leaves the catalog unchanged) if the id is taken.
    bool add(ProtocolPtr spec);
    /// Inserts or replaces.
    void put(ProtocolPtr spec);

    std::vector<ProtocolPtr> list() const;  // ordered by id
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, ProtocolPtr, std::less<>> specs_;
};

struct DirectoryLoad {
    std::vector<ProtocolSpec> specs;
    // file -> diagnostics (warnings for good files, errors for broken ones)
    std::vector<std::pair<std::filesystem::path, std::vector<Diagnostic>>> reports;
    bool ok = true;
};

/// Parses every *.json file in `dir` (non-recursive, sorted by name). Duplicate
/// protocol ids across files are reported as errors.
DirectoryLoad load_protocol_directory(const std::filesystem::path& dir,
                                      const std::optional<std::filesystem::path>& asset_root = {});

}  // namespace webxaii
