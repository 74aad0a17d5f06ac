#pragma once

#include "webxaii/config/model.hpp"
#include "webxaii/session/instance_order.hpp"
#include "webxaii/time.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string_view>

namespace webxaii {

enum class PolicyKind { Random, AlwaysCorrect, AlwaysFirst };

const char* to_string(PolicyKind k);
std::optional<PolicyKind> policy_kind_from(std::string_view s);

struct SimulationPolicy {
    PolicyKind kind = PolicyKind::Random;
    std::uint64_t seed = 0;
    Millis answer_delay{1000};
};

/// Seed of participant `index`: draw index+1 of SplitMix64(seed).
std::uint64_t participant_seed(std::uint64_t seed, std::size_t index);

/// Picks a synthetic participant's answers. Works from the rendered view, the
/// same JSON a browser receives; the protocol is consulted only for expected
/// answers under always_correct.
class AnswerPolicy {
public:
    AnswerPolicy(const ProtocolSpec& spec, SimulationPolicy policy, std::size_t participant_index);

    const SimulationPolicy& policy() const { return policy_; }

    /// Submission body {"view_id", "payload", "client_elapsed_ms"} for a view.
    nlohmann::json answer(const nlohmann::ordered_json& view);

private:
    nlohmann::json question_answer(const nlohmann::ordered_json& q);
    nlohmann::json pick(const nlohmann::ordered_json& options, bool exclusive);
    const InstanceSpec* find_instance(std::string_view task_id, std::string_view instance_id) const;

    const ProtocolSpec& spec_;
    SimulationPolicy policy_;
    SplitMix64 rng_;
};

}  // namespace webxaii
