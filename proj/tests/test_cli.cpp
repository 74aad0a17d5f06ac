#include "support.hpp"

#include "webxaii/cli/cli.hpp"
#include "webxaii/events/export.hpp"

#include <doctest.h>
#include <httplib.h>

#include <csignal>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace webxaii;
using nlohmann::json;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::size_t count_lines(const std::string& text, const std::string& prefix) {
    std::size_t n = 0;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
    return n;
}

std::string fixture_path(const std::string& rel) { return (testing::fixtures() / rel).string(); }

/// `webxaii serve` as a child process with stdout on a pipe.
class ServeProcess {
public:
    explicit ServeProcess(std::vector<std::string> args, std::vector<std::string> env = {}) {
        int out[2];
        REQUIRE(::pipe(out) == 0);
        pid_ = ::fork();
        REQUIRE(pid_ >= 0);
        if (pid_ == 0) {
            ::dup2(out[1], STDOUT_FILENO);
            ::dup2(out[1], STDERR_FILENO);
            ::close(out[0]);
            ::close(out[1]);
            for (const auto& e : env) ::putenv(const_cast<char*>(e.c_str()));
            std::vector<char*> argv{const_cast<char*>(WEBXAII_BINARY), const_cast<char*>("serve")};
            for (auto& a : args) argv.push_back(a.data());
            argv.push_back(nullptr);
            ::execv(WEBXAII_BINARY, argv.data());
            ::_exit(127);
        }
        ::close(out[1]);
        fd_ = out[0];
    }

    ~ServeProcess() {
        if (pid_ > 0 && !exited_) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
        }
        if (fd_ >= 0) ::close(fd_);
    }

    /// Reads output until `needle` shows up, the process closes its output, or the timeout passes.
    bool read_until(const std::string& needle, int timeout_ms = 10000) {
        while (output_.find(needle) == std::string::npos) {
            pollfd p{fd_, POLLIN, 0};
            if (::poll(&p, 1, timeout_ms) <= 0) return false;
            char buf[512];
            auto n = ::read(fd_, buf, sizeof buf);
            if (n <= 0) return false;
            output_.append(buf, static_cast<std::size_t>(n));
        }
        return true;
    }

    int wait_exit() {
        int status = 0;
        ::waitpid(pid_, &status, 0);
        exited_ = true;
        read_until("\x01", 200);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    void signal(int sig) { ::kill(pid_, sig); }
    const std::string& output() const { return output_; }

    int port() const {
        auto pos = output_.find("listening on http://127.0.0.1:");
        if (pos == std::string::npos) return 0;
        return std::atoi(output_.c_str() + pos + std::strlen("listening on http://127.0.0.1:"));
    }

private:
    pid_t pid_ = -1;
    int fd_ = -1;
    bool exited_ = false;
    std::string output_;
};

}  // namespace

TEST_CASE("validate") {
    for (char c : {'A', 'B', 'C', 'D'}) {
        auto r = cli({"validate", testing::fixture_protocol(c).string(), "--assets", fixture_path("assets")});
        CHECK(r.code == 0);
        CHECK(r.out.empty());
    }
    TempDir dir;
    testing::write_file(dir / "bad.json", R"({"id":"x","title":"x","completion":{"message":"m"},"elements":[]})");
    auto bad = cli({"validate", (dir / "bad.json").string()});
    CHECK(bad.code == 1);
    CHECK(bad.out == "ERROR /elements must be non-empty\n");

    testing::write_file(dir / "warn.json",
                        R"({"id":"x","title":"x","completion":{"message":"m"},"elements":[{"kind":"instruction","id":"i","title":"t","body":"b","extra":1}]})");
    auto warn = cli({"validate", (dir / "warn.json").string()});
    CHECK(warn.code == 0);
    CHECK(warn.out == "WARNING /elements/0/extra unknown key 'extra' ignored\n");

    CHECK(cli({"validate", (dir / "missing.json").string()}).code == 2);
    CHECK(cli({"validate"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("users add, list and export") {
    TempDir data;
    const auto data_dir = data.path().string();
    const auto config = fixture_path("protocols");

    auto first = cli({"users", "add", "--file", fixture_path("users.json"), "--data-dir", data_dir, "--config-dir", config});
    CHECK(first.code == 0);
    CHECK(first.out == "imported 40 of 40 users\n");
    auto stored = testing::read_file(data / "users.json");
    for (const auto& u : json::parse(testing::read_file(testing::fixtures() / "users.json"))) {
        CHECK(stored.find(u["access_code"].get<std::string>()) == std::string::npos);
    }

    auto again = cli({"users", "add", "--file", fixture_path("users.json"), "--data-dir", data_dir, "--config-dir", config});
    CHECK(again.code == 1);
    CHECK(count_lines(again.out, "ERROR DuplicateLogin ") == 40);
    CHECK(again.out.find("imported 0 of 40 users\n") != std::string::npos);

    // protocols were not persisted by the overlay, so they must be named again
    auto unknown = cli({"users", "add", "--file", fixture_path("users.json"), "--data-dir", (data / "other").string()});
    CHECK(unknown.code == 1);
    CHECK(count_lines(unknown.out, "ERROR UnknownProtocol ") == 40);

    auto list = cli({"users", "list", "--data-dir", data_dir});
    CHECK(list.code == 0);
    CHECK(count_lines(list.out, "u0") == 40);
    CHECK(list.out.rfind("u001\tprotocol-A\tnot_started\n", 0) == 0);

    auto exported = cli({"export", "--protocol", "protocol-A", "--format", "csv", "--out", (data / "a.csv").string(),
                         "--data-dir", data_dir, "--config-dir", config});
    CHECK(exported.code == 0);
    CHECK(exported.out == "0 rows\n");
    CHECK(testing::read_file(data / "a.csv") == std::string(kExportCsvHeader) + "\r\n");

    auto missing = cli({"export", "--protocol", "protocol-Z", "--out", (data / "z.csv").string(), "--data-dir", data_dir});
    CHECK(missing.code == 1);
    CHECK(cli({"export", "--protocol", "protocol-A", "--format", "xml", "--out", (data / "a.xml").string(),
               "--data-dir", data_dir, "--config-dir", config})
              .code == 2);
}

TEST_CASE("simulate") {
    TempDir dir;
    auto r1 = cli({"simulate", "--protocol", testing::fixture_protocol('B').string(), "--n", "3", "--policy", "random",
                   "--seed", "11", "--out", (dir / "r1.json").string()});
    CHECK(r1.code == 0);
    CHECK(r1.out == "3 of 3 participants completed\n");
    auto r2 = cli({"simulate", "--protocol", testing::fixture_protocol('B').string(), "--n", "3", "--policy", "random",
                   "--seed", "11", "--out", (dir / "r2.json").string()});
    CHECK(testing::read_file(dir / "r1.json") == testing::read_file(dir / "r2.json"));
    auto report = json::parse(testing::read_file(dir / "r1.json"));
    CHECK(report["seed"] == 11);
    CHECK(report["participants"].size() == 3);

    CHECK(cli({"simulate", "--protocol", testing::fixture_protocol('B').string(), "--n", "3", "--policy", "lucky",
               "--out", (dir / "r3.json").string()})
              .code == 2);
    CHECK(cli({"simulate", "--protocol", testing::fixture_protocol('B').string(), "--n", "0", "--out",
               (dir / "r3.json").string()})
              .code == 2);
}

TEST_CASE("serve runs until terminated") {
    TempDir data;
    ServeProcess server({"--config-dir", fixture_path("protocols"), "--port", "0", "--host", "127.0.0.1", "--data-dir",
                         data.path().string(), "--asset-dir", fixture_path("assets")},
                        {"WEBXAII_ADMIN_TOKEN=tok"});
    REQUIRE(server.read_until("protocols)"));
    CHECK(server.output().find("(4 protocols)") != std::string::npos);
    int port = server.port();
    REQUIRE(port > 0);

    httplib::Client c("127.0.0.1", port);
    auto status = c.Get("/api/admin/status", httplib::Headers{{"X-Admin-Token", "tok"}});
    REQUIRE(status);
    CHECK(status->status == 200);
    CHECK(json::parse(status->body)["protocols"].size() == 4);
    CHECK(c.Get("/assets/mazes/easy-1.png")->status == 200);
    CHECK(fs::exists(data / "protocols/protocol-D.json"));

    // a port that is already taken
    ServeProcess clash({"--config-dir", fixture_path("protocols"), "--port", std::to_string(port), "--host", "127.0.0.1",
                        "--data-dir", (data / "second").string()});
    CHECK(clash.wait_exit() == 2);

    server.signal(SIGTERM);
    CHECK(server.wait_exit() == 0);
    CHECK(server.output().find("stopped") != std::string::npos);
}

TEST_CASE("serve refuses a broken configuration") {
    TempDir cfg, data;
    testing::write_file(cfg / "ok.json", testing::read_file(testing::fixture_protocol('A')));
    testing::write_file(cfg / "broken.json", R"({"id":"b","title":"b","completion":{"message":"m"},"elements":[]})");
    ServeProcess server({"--config-dir", cfg.path().string(), "--port", "0", "--data-dir", data.path().string()});
    CHECK(server.wait_exit() == 1);
    CHECK(server.output().find("broken.json: ERROR /elements must be non-empty") != std::string::npos);
    CHECK(server.output().find("refusing to start") != std::string::npos);

    TempDir empty;
    ServeProcess none({"--config-dir", empty.path().string(), "--port", "0", "--data-dir", data.path().string()});
    CHECK(none.wait_exit() == 1);
}
