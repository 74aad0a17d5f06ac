#pragma once

#include "webxaii/sim/driver.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace webxaii {

struct SimulationOptions {
    std::size_t n = 1;
    SimulationPolicy policy;
    EngineOptions engine;  // clock_label is forced to "synthetic"
    DriveOptions drive;
};

struct ParticipantRun {
    std::string login;
    std::string session_id;
    DriveResult drive;
    SessionState final_state;
};

struct SimulationOutcome {
    nlohmann::ordered_json report;
    std::vector<ParticipantRun> participants;
    std::vector<Event> events;  // every session log, ordered by (session_id, seq)
    bool all_completed = false;
};

/// "sim-001", "sim-002", ...
std::string simulation_login(std::size_t index);
std::string simulation_access_code(std::size_t index);

/// Runs n synthetic participants through `spec` in process, on a virtual clock
/// starting at 2000-01-01T00:00:00Z. The outcome depends only on the arguments.
SimulationOutcome run_simulation(const ProtocolSpec& spec, const SimulationOptions& options);

/// The report as written to disk: 2-space indented JSON with a trailing newline.
std::string dump_report(const nlohmann::ordered_json& report);

}  // namespace webxaii
