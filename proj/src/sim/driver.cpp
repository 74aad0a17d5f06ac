#include "webxaii/sim/driver.hpp"

#include "webxaii/api_error.hpp"

#include <cmath>

namespace webxaii {

using ojson = nlohmann::ordered_json;

template <class F>
ojson InProcessTransport::call(F&& f) {
    try {
        auto user = platform_.connection().resolve_token(token_, clock_.now());
        auto id = session_id_for(user.protocol_id, user.login);
        return platform_.sessions().with_session(id, [&](SessionEngine& engine, SessionState& state) {
            return f(engine, state);
        });
    } catch (const SessionError& e) {
        return to_json(api_error(e));
    } catch (const ConnectionError& e) {
        return to_json(api_error(e));
    }
}

ojson InProcessTransport::login(const std::string& login, const std::string& access_code) {
    try {
        auto auth = platform_.connection().authenticate(login, access_code, clock_.now());
        token_ = auth.token.token;
        ojson j;
        j["token"] = auth.token.token;
        j["protocol_id"] = auth.protocol_id;
        j["resumed"] = auth.resumed;
        return j;
    } catch (const ConnectionError& e) {
        return to_json(api_error(e));
    } catch (const SessionError& e) {
        return to_json(api_error(e));
    }
}

ojson InProcessTransport::view() {
    return call([&](SessionEngine& engine, SessionState& state) {
        return to_json(engine.current_view(state, clock_.now()));
    });
}

ojson InProcessTransport::submit(const nlohmann::json& body) {
    return call([&](SessionEngine& engine, SessionState& state) {
        return to_json(engine.submit(state, submission_from_json(body), clock_.now()));
    });
}

ojson InProcessTransport::timeout(const std::string& view_id) {
    return call([&](SessionEngine& engine, SessionState& state) {
        ojson j;
        j["advanced"] = engine.notify_timeout(state, view_id, clock_.now()).advanced;
        return j;
    });
}

namespace {

std::string error_code(const ojson& reply) {
    if (!reply.is_object() || !reply.contains("error")) return {};
    return reply["error"].value("code", "unknown");
}

}  // namespace

DriveResult drive_participant(ParticipantTransport& transport, AnswerPolicy& policy, const std::string& login,
                              const std::string& access_code, const DriveOptions& options) {
    DriveResult result;
    auto reply = transport.login(login, access_code);
    if (auto code = error_code(reply); !code.empty()) {
        result.failure = "login failed: " + code;
        return result;
    }
    const Millis delay = policy.policy().answer_delay;

    for (std::size_t step = 0; step < options.max_steps; ++step) {
        auto view = transport.view();
        if (auto code = error_code(view); !code.empty()) {
            result.failure = "view failed: " + code;
            return result;
        }
        if (view.value("status", "") == "completed") {
            result.completed = true;
            return result;
        }
        const auto view_id = view.at("view_id").get<std::string>();
        const bool decision = view.at("kind") == "instance_decision";
        const std::string task_id = decision ? view.at("task_id").get<std::string>() : "";

        if (options.client_timers && view.contains("remaining_time_s")) {
            const Millis remaining{static_cast<std::int64_t>(std::ceil(view["remaining_time_s"].get<double>() * 1000))};
            if (delay >= remaining) {
                transport.wait(remaining);
                auto r = transport.timeout(view_id);
                if (error_code(r) == "premature") {
                    transport.wait(Millis{1500});
                    r = transport.timeout(view_id);
                }
                if (auto code = error_code(r); !code.empty() && code != "stale_view") {
                    result.failure = "timeout failed: " + code;
                    return result;
                }
                ++result.tasks[task_id].timeouts;
                continue;
            }
        }

        transport.wait(delay);
        auto r = transport.submit(policy.answer(view));
        auto code = error_code(r);
        if (!task_id.empty()) ++result.tasks[task_id].submits;
        if (code == "timed_out") {
            ++result.tasks[task_id].timeouts;
            continue;
        }
        if (code == "stale_view") continue;
        if (!code.empty()) {
            result.failure = "submit failed: " + code;
            return result;
        }
        if (r.contains("feedback") && !task_id.empty()) ++result.tasks[task_id].feedback_returned;
    }
    result.failure = "step limit reached";
    return result;
}

}  // namespace webxaii
