#include "webxaii/sim/simulation.hpp"

#include "webxaii/json_util.hpp"

#include <cstdio>

namespace webxaii {

using ojson = nlohmann::ordered_json;

std::string simulation_login(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim-%03zu", index + 1);
    return buf;
}

std::string simulation_access_code(std::size_t index) { return "code-" + simulation_login(index); }

std::string dump_report(const ojson& report) { return report.dump(2) + "\n"; }

SimulationOutcome run_simulation(const ProtocolSpec& spec, const SimulationOptions& options) {
    PlatformOptions po;
    po.hash_cost = HashCost::Minimal;
    po.engine = options.engine;
    po.engine.clock_label = "synthetic";
    Platform platform(po);
    platform.install(spec);

    VirtualClock clock;
    std::vector<ProvisioningRecord> records;
    for (std::size_t i = 0; i < options.n; ++i) {
        records.push_back({simulation_login(i), simulation_access_code(i), spec.id});
    }
    platform.provision(records, clock.now());

    SimulationOutcome out;
    out.all_completed = true;
    auto participants = ojson::array();
    std::size_t completed = 0;

    for (std::size_t i = 0; i < options.n; ++i) {
        ParticipantRun run;
        run.login = simulation_login(i);
        run.session_id = session_id_for(spec.id, run.login);
        InProcessTransport transport(platform, clock);
        AnswerPolicy policy(spec, options.policy, i);
        run.drive = drive_participant(transport, policy, run.login, simulation_access_code(i), options.drive);
        if (auto state = platform.sessions().snapshot(run.session_id)) run.final_state = *state;
        const bool done = run.drive.completed && run.final_state.completed();
        completed += done;
        out.all_completed = out.all_completed && done;

        ojson p;
        p["login"] = run.login;
        p["session_id"] = run.session_id;
        p["completed"] = done;
        if (run.drive.failure) p["failure"] = *run.drive.failure;

        auto events = platform.store().session_events(run.session_id);
        ojson counts = ojson::object();
        for (auto kind : kAllEventKinds) {
            std::size_t c = 0;
            for (const auto& e : events) c += e.kind == kind;
            counts[to_string(kind)] = c;
        }
        p["event_counts"] = std::move(counts);

        ojson scores = ojson::object();
        for_each_task(spec, [&](const ExperimentSpec&, const TaskSpec& task) {
            ojson s;
            try {
                auto score = platform.sessions().with_session(run.session_id, [&](SessionEngine& engine, SessionState& st) {
                    return engine.compute_task_score(st, task.id);
                });
                s["score"] = number_json(score.score);
                s["max"] = number_json(score.max);
            } catch (const std::exception&) {
                s["score"] = nullptr;
                s["max"] = nullptr;
            }
            auto tally = run.drive.tasks.count(task.id) ? run.drive.tasks.at(task.id) : TaskTally{};
            s["submits"] = tally.submits;
            s["feedback_returned"] = tally.feedback_returned;
            s["timeouts"] = tally.timeouts;
            scores[task.id] = std::move(s);
        });
        p["task_scores"] = std::move(scores);
        p["presented_orders"] =
            !events.empty() && events.front().kind == EventKind::SessionStarted
                ? events.front().payload.value("presented_orders", ojson::object())
                : ojson::object();
        participants.push_back(std::move(p));
        out.participants.push_back(std::move(run));
    }

    ojson report;
    report["protocol"] = spec.id;
    report["n"] = options.n;
    report["policy"] = to_string(options.policy.kind);
    report["seed"] = options.policy.seed;
    report["answer_delay_ms"] = options.policy.answer_delay.count();
    report["synthetic_clock"] = true;
    report["completed"] = completed;
    report["participants"] = std::move(participants);
    out.report = std::move(report);

    EventFilter all;
    all.protocol_id = spec.id;
    for (auto& e : platform.store().list(all)) {
        if (!e.session_id.empty()) out.events.push_back(std::move(e));
    }
    return out;
}

}  // namespace webxaii
