#pragma once

#include "webxaii/platform/platform.hpp"
#include "webxaii/sim/policy.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>

namespace webxaii {

/// The participant-facing API as a client sees it. Replies are the JSON bodies
/// of the HTTP API, errors included ({"error":{"code","message"}}).
class ParticipantTransport {
public:
    virtual ~ParticipantTransport() = default;

    /// Returns the login reply or an error body.
    virtual nlohmann::ordered_json login(const std::string& login, const std::string& access_code) = 0;
    virtual nlohmann::ordered_json view() = 0;
    virtual nlohmann::ordered_json submit(const nlohmann::json& body) = 0;
    virtual nlohmann::ordered_json timeout(const std::string& view_id) = 0;
    /// Lets `d` pass for the participant.
    virtual void wait(Millis d) = 0;
};

/// Calls the platform directly, on a virtual clock.
class InProcessTransport : public ParticipantTransport {
public:
    InProcessTransport(Platform& platform, VirtualClock& clock) : platform_(platform), clock_(clock) {}

    nlohmann::ordered_json login(const std::string& login, const std::string& access_code) override;
    nlohmann::ordered_json view() override;
    nlohmann::ordered_json submit(const nlohmann::json& body) override;
    nlohmann::ordered_json timeout(const std::string& view_id) override;
    void wait(Millis d) override { clock_.advance(d); }

private:
    template <class F>
    nlohmann::ordered_json call(F&& f);

    Platform& platform_;
    VirtualClock& clock_;
    std::string token_;
};

struct TaskTally {
    std::size_t submits = 0;
    std::size_t feedback_returned = 0;
    std::size_t timeouts = 0;
};

struct DriveResult {
    bool completed = false;
    std::map<std::string, TaskTally> tasks;
    std::optional<std::string> failure;
};

struct DriveOptions {
    /// Like the browser client: when the answer would come after the deadline,
    /// report the timeout at the deadline instead. Off, the late answer is sent.
    bool client_timers = true;
    std::size_t max_steps = 100000;
};

/// Logs in and answers every view until the session completes or something
/// unexpected comes back.
DriveResult drive_participant(ParticipantTransport& transport, AnswerPolicy& policy, const std::string& login,
                              const std::string& access_code, const DriveOptions& options = {});

}  // namespace webxaii
