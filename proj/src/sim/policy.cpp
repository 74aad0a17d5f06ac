#include "webxaii/sim/policy.hpp"

#include <cmath>

namespace webxaii {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Random: return "random";
        case PolicyKind::AlwaysCorrect: return "always_correct";
        case PolicyKind::AlwaysFirst: return "always_first";
    }
    return "random";
}

std::optional<PolicyKind> policy_kind_from(std::string_view s) {
    if (s == "random") return PolicyKind::Random;
    if (s == "always_correct") return PolicyKind::AlwaysCorrect;
    if (s == "always_first") return PolicyKind::AlwaysFirst;
    return std::nullopt;
}

std::uint64_t participant_seed(std::uint64_t seed, std::size_t index) {
    SplitMix64 g(seed + 0x9e3779b97f4a7c15ULL * index);
    return g();
}

AnswerPolicy::AnswerPolicy(const ProtocolSpec& spec, SimulationPolicy policy, std::size_t participant_index)
    : spec_(spec), policy_(policy), rng_(participant_seed(policy.seed, participant_index)) {}

const InstanceSpec* AnswerPolicy::find_instance(std::string_view task_id, std::string_view instance_id) const {
    const TaskSpec* task = find_task(spec_, task_id);
    if (!task) return nullptr;
    for (const auto& inst : task->instances) {
        if (inst.id == instance_id) return &inst;
    }
    return nullptr;
}

json AnswerPolicy::pick(const ojson& options, bool exclusive) {
    const std::size_t n = options.size();
    if (n == 0) return exclusive ? json("") : json::array();
    if (policy_.kind != PolicyKind::Random) {
        const auto first = options[0].get<std::string>();
        return exclusive ? json(first) : json::array({first});
    }
    if (exclusive) return options[rng_.below(n)].get<std::string>();
    // Non-empty subset, uniformly over the 2^n - 1 candidates.
    std::uint64_t mask = n >= 63 ? rng_() | 1 : rng_.below((std::uint64_t{1} << n) - 1) + 1;
    json out = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        if (i < 64 && (mask >> i) & 1) out.push_back(options[i].get<std::string>());
    }
    return out;
}

json AnswerPolicy::question_answer(const ojson& q) {
    const auto kind = q.at("kind").get<std::string>();
    if (kind == "choice") return pick(q.at("options"), q.at("exclusive").get<bool>());
    if (kind == "text") {
        std::string text = policy_.kind == PolicyKind::Random ? "answer " + std::to_string(rng_.below(1000)) : "answer";
        auto max_len = q.at("max_len").get<std::size_t>();
        if (text.size() > max_len) text.resize(max_len);
        return text;
    }
    const double min = q.at("min").get<double>();
    const double step = q.at("step").get<double>();
    const auto steps = static_cast<std::uint64_t>(std::llround((q.at("max").get<double>() - min) / step));
    const std::uint64_t k = policy_.kind == PolicyKind::Random ? rng_.below(steps + 1) : 0;
    const double v = min + static_cast<double>(k) * step;
    if (v == std::floor(v) && std::fabs(v) < 1e15) return static_cast<std::int64_t>(v);
    return v;
}

json AnswerPolicy::answer(const ojson& view) {
    json body;
    body["view_id"] = view.at("view_id");
    const auto kind = view.at("kind").get<std::string>();
    if (kind == "questionnaire") {
        json answers = json::object();
        for (const auto& q : view.at("questions")) answers[q.at("id").get<std::string>()] = question_answer(q);
        body["payload"]["answers"] = std::move(answers);
    } else if (kind == "instance_decision") {
        const bool exclusive = view.at("exclusive").get<bool>();
        const InstanceSpec* inst = nullptr;
        if (policy_.kind == PolicyKind::AlwaysCorrect && view.at("task_id").is_string()) {
            inst = find_instance(view.at("task_id").get<std::string>(), view.at("view_id").get<std::string>());
        }
        if (inst && inst->expected) {
            body["payload"]["selected"] = *inst->expected;
        } else {
            json sel = pick(view.at("options"), exclusive);
            body["payload"]["selected"] = sel.is_array() ? sel : json::array({sel});
        }
    } else {
        body["payload"]["ack"] = true;
    }
    body["client_elapsed_ms"] = policy_.answer_delay.count();
    return body;
}

}  // namespace webxaii
