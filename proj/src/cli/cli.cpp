#include "webxaii/cli/cli.hpp"

#include "webxaii/events/export.hpp"
#include "webxaii/http/service.hpp"
#include "webxaii/platform/platform.hpp"
#include "webxaii/sim/simulation.hpp"

#include <CLI11.hpp>

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace webxaii {

namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::optional<std::string> read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) return std::nullopt;
    return buf.str();
}

std::optional<fs::path> existing_dir(const std::string& dir) {
    std::error_code ec;
    if (dir.empty() || !fs::is_directory(dir, ec)) return std::nullopt;
    return fs::path(dir);
}

/// Adds the protocols of a config directory to the catalog without persisting them.
bool overlay_config_dir(Platform& platform, const std::string& dir, std::ostream& err) {
    auto load = load_protocol_directory(dir);
    for (const auto& [file, diags] : load.reports) {
        for (const auto& d : diags) err << file.filename().string() << ": " << format_diagnostic(d) << "\n";
    }
    if (!load.ok) return false;
    for (auto& spec : load.specs) platform.catalog().put(std::make_shared<const ProtocolSpec>(std::move(spec)));
    return true;
}

int cmd_validate(const std::string& file, const std::string& assets, std::ostream& out, std::ostream& err) {
    auto text = read_text(file);
    if (!text) {
        err << "cannot read " << file << "\n";
        return 2;
    }
    std::optional<fs::path> asset_root;
    if (!assets.empty()) asset_root = fs::path(assets);
    auto result = parse_protocol(*text, asset_root);
    for (const auto& d : result.diagnostics) out << format_diagnostic(d) << "\n";
    return has_errors(result.diagnostics) ? 1 : 0;
}

struct ServeArgs {
    std::string config_dir;
    std::string host = "0.0.0.0";
    int port = 8080;
    std::string data_dir;
    std::string asset_dir;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    auto asset_root = existing_dir(a.asset_dir);
    if (!asset_root) err << "warning: asset directory " << a.asset_dir << " not found; /assets/ will answer 404\n";

    auto load = load_protocol_directory(a.config_dir, asset_root);
    for (const auto& [file, diags] : load.reports) {
        for (const auto& d : diags) out << file.filename().string() << ": " << format_diagnostic(d) << "\n";
    }
    if (!load.ok) {
        err << "refusing to start: invalid protocol configuration\n";
        return 1;
    }
    if (load.specs.empty()) {
        err << "refusing to start: no protocol files in " << a.config_dir << "\n";
        return 1;
    }

    PlatformOptions po;
    po.data_dir = fs::path(a.data_dir);
    po.asset_root = asset_root;
    std::unique_ptr<Platform> platform;
    try {
        platform = std::make_unique<Platform>(po);
    } catch (const std::exception& e) {
        err << "cannot open data directory " << a.data_dir << ": " << e.what() << "\n";
        return 2;
    }
    for (const auto& p : platform->recovery_problems()) err << "warning: " << p << "\n";
    const std::size_t count = load.specs.size();
    for (auto& spec : load.specs) {
        auto id = spec.id;
        if (platform->install(std::move(spec)) == Platform::InstallStatus::Conflict) {
            err << "refusing to start: protocol '" << id << "' changed but already has sessions in " << a.data_dir
                << "\n";
            return 1;
        }
    }

    HttpOptions ho;
    ho.admin_token = env_or("WEBXAII_ADMIN_TOKEN", "");
    ho.asset_dir = asset_root;
    ho.ui_dir = existing_dir(env_or("WEBXAII_UI_DIR", ""));
    if (ho.admin_token.empty()) err << "warning: WEBXAII_ADMIN_TOKEN is not set; admin routes are disabled\n";

    // Signals are taken by a dedicated thread; block them before the server spawns workers.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGUSR1);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    HttpService service(*platform, ho);
    auto port = service.bind(a.host, a.port);
    if (!port) {
        err << "cannot bind " << a.host << ":" << a.port << "\n";
        pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
        return 2;
    }
    out << "listening on http://" << a.host << ":" << *port << " (" << count
        << " protocols)" << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    service.stop();
    pthread_kill(waiter.native_handle(), SIGUSR1);
    waiter.join();
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    out << "stopped" << std::endl;
    return 0;
}

int cmd_users_add(const std::string& file, const std::string& data_dir, const std::string& config_dir,
                  std::ostream& out, std::ostream& err) {
    auto text = read_text(file);
    if (!text) {
        err << "cannot read " << file << "\n";
        return 2;
    }
    auto doc = nlohmann::json::parse(*text, nullptr, false);
    if (doc.is_discarded()) {
        err << file << ": malformed JSON document\n";
        return 2;
    }
    std::vector<ProvisioningRecord> records;
    try {
        records = parse_provisioning(doc);
    } catch (const ConnectionError& e) {
        err << file << ": " << e.what() << "\n";
        return 1;
    }
    PlatformOptions po;
    po.data_dir = fs::path(data_dir);
    Platform platform(po);
    if (!config_dir.empty() && !overlay_config_dir(platform, config_dir, err)) return 1;

    auto outcome = platform.provision(records, system_now());
    for (const auto& r : outcome.rejected) {
        const char* kind = r.code == ConnectionError::Code::DuplicateLogin    ? "DuplicateLogin"
                           : r.code == ConnectionError::Code::UnknownProtocol ? "UnknownProtocol"
                                                                              : "InvalidRecord";
        out << "ERROR " << kind << " " << r.login << ": " << r.message << "\n";
    }
    out << "imported " << outcome.added.size() << " of " << records.size() << " users\n";
    return outcome.rejected.empty() ? 0 : 1;
}

int cmd_users_list(const std::string& data_dir, const std::string& config_dir, std::ostream& out, std::ostream& err) {
    PlatformOptions po;
    po.data_dir = fs::path(data_dir);
    Platform platform(po);
    if (!config_dir.empty() && !overlay_config_dir(platform, config_dir, err)) return 1;
    for (const auto& u : platform.users().list()) {
        auto state = platform.sessions().snapshot(session_id_for(u.protocol_id, u.login));
        const char* status = !state ? "not_started" : state->completed() ? "completed" : "in_progress";
        out << u.login << "\t" << u.protocol_id << "\t" << status << "\n";
    }
    return 0;
}

int cmd_export(const std::string& protocol, const std::string& format, const std::string& out_file,
               const std::string& data_dir, const std::string& config_dir, std::ostream& out, std::ostream& err) {
    auto fmt = export_format_from(format);
    if (!fmt) {
        err << "format must be csv or json\n";
        return 2;
    }
    PlatformOptions po;
    po.data_dir = fs::path(data_dir);
    Platform platform(po);
    if (!config_dir.empty() && !overlay_config_dir(platform, config_dir, err)) return 1;
    ExportDocument doc;
    try {
        doc = export_results(platform.store(), platform.catalog(), protocol, *fmt);
    } catch (const UnknownProtocolError& e) {
        err << "ERROR " << e.what() << "\n";
        return 1;
    }
    std::ofstream f(out_file, std::ios::binary | std::ios::trunc);
    f << doc.body;
    if (!f.flush()) {
        err << "cannot write " << out_file << "\n";
        return 2;
    }
    out << doc.rows << " rows\n";
    return 0;
}

struct SimulateArgs {
    std::string protocol_file;
    std::size_t n = 1;
    std::string policy = "random";
    std::uint64_t seed = 0;
    std::string out_file;
    std::int64_t answer_delay_ms = 1000;
    std::int64_t grace_ms = 2000;
    bool late_answers = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    auto kind = policy_kind_from(a.policy);
    if (!kind) {
        err << "policy must be random, always_correct or always_first\n";
        return 2;
    }
    auto text = read_text(a.protocol_file);
    if (!text) {
        err << "cannot read " << a.protocol_file << "\n";
        return 2;
    }
    auto parsed = parse_protocol(*text);
    if (!parsed.spec) {
        for (const auto& d : parsed.diagnostics) err << format_diagnostic(d) << "\n";
        return 1;
    }
    SimulationOptions so;
    so.n = a.n;
    so.policy = {*kind, a.seed, Millis{a.answer_delay_ms}};
    so.engine.grace = Millis{a.grace_ms};
    so.drive.client_timers = !a.late_answers;
    auto outcome = run_simulation(*parsed.spec, so);

    std::ofstream f(a.out_file, std::ios::binary | std::ios::trunc);
    f << dump_report(outcome.report);
    if (!f.flush()) {
        err << "cannot write " << a.out_file << "\n";
        return 2;
    }
    out << outcome.report["completed"].get<std::size_t>() << " of " << a.n << " participants completed\n";
    return outcome.all_completed ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"WebXAII experiment server and operator tool", "webxaii"};
    app.require_subcommand(1);

    std::string validate_file;
    std::string validate_assets;
    auto* validate = app.add_subcommand("validate", "Check a protocol file");
    validate->add_option("file", validate_file, "Protocol JSON file")->required();
    validate->add_option("--assets", validate_assets, "Asset directory; missing images become warnings");

    ServeArgs serve_args;
    serve_args.port = std::atoi(env_or("WEBXAII_PORT", "8080").c_str());
    serve_args.data_dir = env_or("WEBXAII_DATA_DIR", "./data");
    serve_args.asset_dir = env_or("WEBXAII_ASSET_DIR", "./assets");
    auto* serve = app.add_subcommand("serve", "Run the HTTP server");
    serve->add_option("--config-dir", serve_args.config_dir, "Directory of protocol files")->required();
    serve->add_option("--port", serve_args.port, "Listening port; 0 picks a free one");
    serve->add_option("--host", serve_args.host, "Listening address");
    serve->add_option("--data-dir", serve_args.data_dir, "Event logs, users and loaded protocols");
    serve->add_option("--asset-dir", serve_args.asset_dir, "Images and other media");

    std::string data_dir = env_or("WEBXAII_DATA_DIR", "./data");
    std::string config_dir;
    auto* users = app.add_subcommand("users", "Provision or list participants");
    users->require_subcommand(1);
    std::string users_file;
    auto* users_add = users->add_subcommand("add", "Import a users file");
    users_add->add_option("--file", users_file, "JSON array of {login, access_code, protocol}")->required();
    auto* users_list = users->add_subcommand("list", "Print login, protocol and session status");
    for (auto* sub : {users_add, users_list}) {
        sub->add_option("--data-dir", data_dir, "Data directory");
        sub->add_option("--config-dir", config_dir, "Also accept protocols from this directory");
    }

    std::string export_protocol;
    std::string export_format = "csv";
    std::string export_out;
    auto* exp = app.add_subcommand("export", "Write the result rows of one protocol");
    exp->add_option("--protocol", export_protocol, "Protocol id")->required();
    exp->add_option("--format", export_format, "csv or json");
    exp->add_option("--out", export_out, "Output file")->required();
    exp->add_option("--data-dir", data_dir, "Data directory");
    exp->add_option("--config-dir", config_dir, "Also accept protocols from this directory");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run synthetic participants in process");
    simulate->add_option("--protocol", sim.protocol_file, "Protocol JSON file")->required();
    simulate->add_option("--n", sim.n, "Number of participants")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--policy", sim.policy, "random, always_correct or always_first");
    simulate->add_option("--seed", sim.seed, "Seed of the random policy");
    simulate->add_option("--out", sim.out_file, "Report file")->required();
    simulate->add_option("--answer-delay-ms", sim.answer_delay_ms, "Simulated time spent on each view")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--grace-ms", sim.grace_ms, "Accepted lateness of answers on timed views")
        ->check(CLI::NonNegativeNumber);
    simulate->add_flag("--late-answers", sim.late_answers, "Send answers after the deadline instead of timing out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) return cmd_validate(validate_file, validate_assets, out, err);
        if (*serve) return cmd_serve(serve_args, out, err);
        if (*users_add) return cmd_users_add(users_file, data_dir, config_dir, out, err);
        if (*users_list) return cmd_users_list(data_dir, config_dir, out, err);
        if (*exp) return cmd_export(export_protocol, export_format, export_out, data_dir, config_dir, out, err);
        if (*simulate) return cmd_simulate(sim, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"webxaii"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace webxaii
