#include "support.hpp"

#include "webxaii/platform/platform.hpp"

#include <doctest.h>

#include <set>

using namespace webxaii;
using nlohmann::json;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

const Timestamp kT0{Millis{946684800000}};

ConnectionError::Code code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConnectionError& e) {
        return e.code();
    }
    FAIL("no ConnectionError thrown");
    return ConnectionError::Code::InvalidRecord;
}

PlatformOptions memory_options() {
    PlatformOptions o;
    o.hash_cost = HashCost::Minimal;
    return o;
}

void add_fixtures(Platform& p) {
    for (char c : {'A', 'B', 'C', 'D'}) CHECK(p.install(testing::load_fixture(c)) == Platform::InstallStatus::Installed);
}

}  // namespace

TEST_CASE("access code hashing") {
    auto h = hash_access_code("s3cret", HashCost::Minimal);
    CHECK(h.rfind("$argon2id$", 0) == 0);
    CHECK(h.find("s3cret") == std::string::npos);
    CHECK(verify_access_code(h, "s3cret"));
    CHECK_FALSE(verify_access_code(h, "s3cret "));
    CHECK_FALSE(verify_access_code("garbage", "s3cret"));
    CHECK(hash_access_code("s3cret", HashCost::Minimal) != h);
}

TEST_CASE("tokens and constant-time comparison") {
    auto a = random_token();
    CHECK(a.size() == 43);
    CHECK(a.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_") == std::string::npos);
    CHECK(random_token() != a);
    CHECK(constant_time_equals("abc", "abc"));
    CHECK_FALSE(constant_time_equals("abc", "abd"));
    CHECK_FALSE(constant_time_equals("abc", "abcd"));
    CHECK(constant_time_equals("", ""));
}

TEST_CASE("provisioning records") {
    auto recs = parse_provisioning(json::parse(R"([{"login":"u1","access_code":"c","protocol":"protocol-A"}])"));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].protocol_id == "protocol-A");
    CHECK(code_of([] { parse_provisioning(json::object()); }) == ConnectionError::Code::InvalidRecord);
    try {
        parse_provisioning(json::parse(R"([{"login":"u1","access_code":"c","protocol":"p"},{"login":"","access_code":"c","protocol":"p"}])"));
    } catch (const ConnectionError& e) {
        CHECK(std::string(e.what()).find("record 1") != std::string::npos);
    }
    CHECK(code_of([] { parse_provisioning(json::parse(R"([{"login":"u1","protocol":"p"}])")); }) ==
          ConnectionError::Code::InvalidRecord);
}

TEST_CASE("user registry") {
    ProtocolCatalog catalog;
    catalog.add(std::make_shared<const ProtocolSpec>(testing::load_fixture('A')));
    UserRegistry users(HashCost::Minimal);
    auto u = users.register_user("u001", "code-1", "protocol-A", catalog, kT0);
    CHECK(u.login == "u001");
    CHECK(verify_access_code(u.access_code_hash, "code-1"));
    CHECK(users.find("u001") == u);
    CHECK_FALSE(users.find("u002"));

    CHECK(code_of([&] { users.register_user("u001", "other", "protocol-A", catalog, kT0); }) ==
          ConnectionError::Code::DuplicateLogin);
    CHECK(code_of([&] { users.register_user("u002", "c", "protocol-Z", catalog, kT0); }) ==
          ConnectionError::Code::UnknownProtocol);
    CHECK(code_of([&] { users.register_user("", "c", "protocol-A", catalog, kT0); }) ==
          ConnectionError::Code::InvalidRecord);
    users.register_user("a000", "c", "protocol-A", catalog, kT0);
    CHECK(users.list().front().login == "a000");
    CHECK(users.count_for("protocol-A") == 2);
    CHECK(users.count_for("protocol-B") == 0);
}

TEST_CASE("registry files hold hashes only and are shared between instances") {
    TempDir dir;
    ProtocolCatalog catalog;
    catalog.add(std::make_shared<const ProtocolSpec>(testing::load_fixture('B')));
    UserRegistry first(dir / "users.json", HashCost::Minimal);
    UserRegistry second(dir / "users.json", HashCost::Minimal);
    first.register_user("u011", "plain-code-xyz", "protocol-B", catalog, kT0);
    auto text = testing::read_file(dir / "users.json");
    CHECK(text.find("plain-code-xyz") == std::string::npos);
    CHECK(json::parse(text)[0]["login"] == "u011");

    REQUIRE(second.find("u011"));
    CHECK(code_of([&] { second.register_user("u011", "x", "protocol-B", catalog, kT0); }) ==
          ConnectionError::Code::DuplicateLogin);
    second.register_user("u012", "y", "protocol-B", catalog, kT0);
    CHECK(first.list().size() == 2);
    CHECK(UserRegistry(dir / "users.json").list().size() == 2);
}

TEST_CASE("token service") {
    TokenService tokens;
    auto t1 = tokens.issue("u001", kT0);
    CHECK(t1.expires_at - t1.issued_at == std::chrono::hours{24});
    CHECK(tokens.resolve(t1.token, kT0 + std::chrono::hours{23}) == "u001");
    CHECK(code_of([&] { tokens.resolve(t1.token, kT0 + std::chrono::hours{25}); }) ==
          ConnectionError::Code::ExpiredToken);
    auto t2 = tokens.issue("u001", kT0 + Millis{10});
    CHECK(t2.token != t1.token);
    CHECK(code_of([&] { tokens.resolve(t1.token, kT0 + Millis{20}); }) == ConnectionError::Code::InvalidToken);
    CHECK(tokens.resolve(t2.token, kT0 + Millis{20}) == "u001");
    CHECK(code_of([&] { tokens.resolve("", kT0); }) == ConnectionError::Code::InvalidToken);
    CHECK(code_of([&] { tokens.resolve("forged", kT0); }) == ConnectionError::Code::InvalidToken);
}

TEST_CASE("authentication dispatches and resumes") {
    Platform p(memory_options());
    add_fixtures(p);
    auto prov = p.provision({{"u001", "code-1", "protocol-A"}, {"u031", "code-31", "protocol-D"}}, kT0);
    CHECK(prov.added.size() == 2);
    CHECK(prov.rejected.empty());

    auto& conn = p.connection();
    auto first = conn.authenticate("u031", "code-31", kT0);
    CHECK(first.protocol_id == "protocol-D");
    CHECK(first.session_id == "protocol-D.u031");
    CHECK_FALSE(first.resumed);
    CHECK(conn.resolve_token(first.token.token, kT0).login == "u031");

    auto second = conn.authenticate("u031", "code-31", kT0 + Millis{5000});
    CHECK(second.resumed);
    CHECK(second.session_id == first.session_id);
    CHECK(code_of([&] { conn.resolve_token(first.token.token, kT0 + Millis{6000}); }) ==
          ConnectionError::Code::InvalidToken);
    CHECK(code_of([&] { conn.resolve_token(second.token.token, kT0 + std::chrono::hours{25}); }) ==
          ConnectionError::Code::ExpiredToken);

    auto events = p.store().session_events(first.session_id);
    REQUIRE(events.size() == 3);
    CHECK(events[0].kind == EventKind::SessionStarted);
    CHECK(events[1].kind == EventKind::Login);
    CHECK(events[1].payload["resumed"] == false);
    CHECK(events[2].payload["resumed"] == true);
}

TEST_CASE("bad credentials leave only an audit record") {
    Platform p(memory_options());
    add_fixtures(p);
    p.provision({{"u001", "code-1", "protocol-A"}}, kT0);
    auto& conn = p.connection();
    CHECK(code_of([&] { conn.authenticate("u001", "wrong", kT0); }) == ConnectionError::Code::BadCredentials);
    CHECK(code_of([&] { conn.authenticate("nobody", "code-1", kT0); }) == ConnectionError::Code::BadCredentials);
    CHECK(p.store().session_ids().empty());
    auto audit = p.store().session_events("");
    REQUIRE(audit.size() == 2);
    CHECK(audit[0].kind == EventKind::FailedLogin);
    CHECK(audit[0].user_login == "u001");
    CHECK(audit[0].protocol_id == "protocol-A");
    CHECK(audit[1].user_login == "nobody");
    CHECK(audit[1].protocol_id.empty());
    CHECK(event_to_json(audit[0]).dump().find("wrong") == std::string::npos);
}

TEST_CASE("provisioning reports each rejection") {
    Platform p(memory_options());
    add_fixtures(p);
    auto r = p.provision({{"u1", "a", "protocol-A"}, {"u1", "b", "protocol-A"}, {"u2", "c", "protocol-Q"}}, kT0);
    CHECK(r.added == std::vector<std::string>{"u1"});
    REQUIRE(r.rejected.size() == 2);
    CHECK(r.rejected[0].code == ConnectionError::Code::DuplicateLogin);
    CHECK(r.rejected[1].code == ConnectionError::Code::UnknownProtocol);
}

TEST_CASE("platform persists protocols and refuses conflicting reinstalls") {
    TempDir dir;
    auto opts = memory_options();
    opts.data_dir = dir.path();
    auto changed = testing::load_fixture('A');
    changed.title = "changed";
    {
        Platform p(opts);
        add_fixtures(p);
        CHECK(fs::exists(dir / "protocols/protocol-A.json"));
        CHECK(p.install(testing::load_fixture('A')) == Platform::InstallStatus::Unchanged);
        p.provision({{"u001", "c", "protocol-A"}}, kT0);
        p.connection().authenticate("u001", "c", kT0);
        CHECK(p.install(changed) == Platform::InstallStatus::Conflict);
        // protocols without sessions may be replaced
        auto b = testing::load_fixture('B');
        b.title = "new title";
        CHECK(p.install(b) == Platform::InstallStatus::Installed);
    }
    Platform p(opts);
    CHECK(p.recovery_problems().empty());
    CHECK(p.catalog().size() == 4);
    CHECK(p.catalog().find("protocol-B")->title == "new title");
    CHECK(p.sessions().snapshot("protocol-A.u001"));
    auto resumed = p.connection().authenticate("u001", "c", kT0 + Millis{1000});
    CHECK(resumed.resumed);

    auto status = p.status();
    REQUIRE(status["protocols"].size() == 4);
    CHECK(status["protocols"][0]["id"] == "protocol-A");
    CHECK(status["protocols"][0]["registered_users"] == 1);
    CHECK(status["protocols"][0]["sessions"]["in_progress"] == 1);
    CHECK(status["protocols"][0]["sessions"]["completed"] == 0);
    CHECK(p.protocol_list()[0]["sessions"] == 1);
}

TEST_CASE("uploads never replace") {
    Platform p(memory_options());
    auto text = testing::read_file(testing::fixture_protocol('C'));
    auto up = p.upload_protocol(text);
    CHECK(up.status == Platform::Upload::Status::Loaded);
    CHECK(up.protocol_id == "protocol-C");
    CHECK(p.upload_protocol(text).status == Platform::Upload::Status::Conflict);
    auto bad = p.upload_protocol("{}");
    CHECK(bad.status == Platform::Upload::Status::Invalid);
    CHECK_FALSE(bad.diagnostics.empty());
}

TEST_CASE("file-safe names") {
    CHECK(file_safe_name("protocol-A") == "protocol-A");
    CHECK(file_safe_name("../x") == "%2E%2E%2Fx");
}
