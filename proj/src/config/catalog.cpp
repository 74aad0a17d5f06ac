#include "webxaii/config/catalog.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace webxaii {

ProtocolPtr ProtocolCatalog::find(std::string_view id) const {
    std::shared_lock lock(mutex_);
    auto it = specs_.find(id);
    return it == specs_.end() ? nullptr : it->second;
}

bool ProtocolCatalog::add(ProtocolPtr spec) {
    std::unique_lock lock(mutex_);
    return specs_.emplace(spec->id, std::move(spec)).second;
}

void ProtocolCatalog::put(ProtocolPtr spec) {
    std::unique_lock lock(mutex_);
    specs_[spec->id] = std::move(spec);
}

std::vector<ProtocolPtr> ProtocolCatalog::list() const {
    std::shared_lock lock(mutex_);
    std::vector<ProtocolPtr> out;
    for (const auto& [_, spec] : specs_) out.push_back(spec);
    return out;
}

std::size_t ProtocolCatalog::size() const {
    std::shared_lock lock(mutex_);
    return specs_.size();
}

DirectoryLoad load_protocol_directory(const std::filesystem::path& dir,
                                      const std::optional<std::filesystem::path>& asset_root) {
    namespace fs = std::filesystem;
    DirectoryLoad load;
    std::vector<fs::path> files;
    std::error_code ec;
    for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
    }
    if (ec) {
        load.ok = false;
        load.reports.push_back({dir, {{Diagnostic::Severity::Error, "/", "cannot list directory: " + ec.message()}}});
        return load;
    }
    std::sort(files.begin(), files.end());

    std::set<std::string> ids;
    for (const auto& file : files) {
        auto result = load_protocol_file(file, asset_root);
        auto diags = std::move(result.diagnostics);
        if (result.spec) {
            if (!ids.insert(result.spec->id).second) {
                diags.push_back({Diagnostic::Severity::Error, "/id",
                                 "protocol id '" + result.spec->id + "' is already defined by another file"});
            } else {
                load.specs.push_back(std::move(*result.spec));
            }
        }
        if (has_errors(diags)) load.ok = false;
        if (!diags.empty()) load.reports.emplace_back(file, std::move(diags));
    }
    return load;
}

}  // namespace webxaii
