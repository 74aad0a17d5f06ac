#pragma once

#include "webxaii/config/protocol_io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(WEBXAII_SOURCE_DIR); }
inline fs::path fixtures() { return source_dir() / "fixtures"; }
inline fs::path fixture_protocol(char letter) {
    return fixtures() / "protocols" / (std::string("protocol-") + letter + ".json");
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline nlohmann::json fixture_json(char letter) { return nlohmann::json::parse(read_file(fixture_protocol(letter))); }

inline webxaii::ProtocolSpec load_fixture(char letter) {
    auto r = webxaii::load_protocol_file(fixture_protocol(letter));
    if (!r.spec) throw std::runtime_error("fixture does not parse");
    return *r.spec;
}

inline webxaii::ProtocolSpec parse_or_throw(const nlohmann::json& doc) {
    auto r = webxaii::parse_protocol(doc.dump());
    if (!r.spec) {
        std::string msg;
        for (const auto& d : r.diagnostics) msg += webxaii::format_diagnostic(d) + "\n";
        throw std::runtime_error("protocol does not parse:\n" + msg);
    }
    return *r.spec;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "webxaii-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

/// Protocol with a single experiment holding one task of `n` instances with
/// options A-D and expected answers cycling through them.
inline nlohmann::json single_task_protocol(std::size_t n, nlohmann::json task_overrides = nlohmann::json::object()) {
    nlohmann::json instances = nlohmann::json::array();
    const char* labels[] = {"A", "B", "C", "D"};
    for (std::size_t i = 0; i < n; ++i) {
        instances.push_back({{"id", "i" + std::to_string(i)},
                             {"instance", {{"kind", "text"}, {"value", "sample " + std::to_string(i)}}},
                             {"expected", {labels[i % 4]}}});
    }
    nlohmann::json task = {{"kind", "task"},
                           {"id", "t"},
                           {"title", "Task"},
                           {"decision", {{"prompt", "Pick one"}, {"options", {"A", "B", "C", "D"}}, {"exclusive", true}}},
                           {"instances", instances}};
    task.update(task_overrides);
    return {{"id", "p"},
            {"title", "P"},
            {"completion", {{"message", "done"}}},
            {"elements",
             {{{"kind", "experiment"}, {"id", "e"}, {"title", "E"}, {"elements", {task}}}}}};
}

/// Fixture protocol A with every task expanded to `n` instances.
inline nlohmann::json expanded_protocol_a(std::size_t n) {
    auto doc = fixture_json('A');
    for (auto& el : doc["elements"]) {
        if (el["kind"] != "experiment") continue;
        for (auto& child : el["elements"]) {
            if (child["kind"] != "task") continue;
            auto proto = child["instances"][0];
            nlohmann::json insts = nlohmann::json::array();
            for (std::size_t i = 0; i < n; ++i) {
                auto inst = proto;
                inst["id"] = child["id"].get<std::string>() + "-x" + std::to_string(i);
                inst["expected"] = {std::string(1, static_cast<char>('A' + i % 4))};
                insts.push_back(inst);
            }
            child["instances"] = insts;
        }
    }
    return doc;
}

}  // namespace testing
