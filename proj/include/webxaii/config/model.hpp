#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace webxaii {

// Protocol data model. A ProtocolSpec is built by parse_protocol() with every
// default materialized, and is treated as immutable afterwards.

struct MediaRef {
    enum class Kind { Image, Text };

    Kind kind = Kind::Text;
    std::string src;    // image only: path relative to the asset root
    std::string alt;    // image only
    std::string value;  // text only
    std::optional<std::string> label;

    static MediaRef image(std::string src, std::string alt) {
        MediaRef m;
        m.kind = Kind::Image;
        m.src = std::move(src);
        m.alt = std::move(alt);
        return m;
    }
    static MediaRef text(std::string value) {
        MediaRef m;
        m.value = std::move(value);
        return m;
    }

    bool operator==(const MediaRef&) const = default;
};

enum class PredictionPosition { Top, BelowInstance };

struct PredictionRef {
    MediaRef media;
    PredictionPosition position = PredictionPosition::Top;

    bool operator==(const PredictionRef&) const = default;
};

struct InstanceSpec {
    std::string id;
    std::optional<MediaRef> instance;
    std::optional<PredictionRef> prediction;
    std::vector<MediaRef> explanations;
    std::optional<std::vector<std::string>> expected;
    std::optional<std::string> prompt_override;

    bool operator==(const InstanceSpec&) const = default;
};

struct DecisionSpec {
    std::string prompt;
    std::vector<std::string> options;
    bool exclusive = true;

    bool operator==(const DecisionSpec&) const = default;
};

enum class FeedbackPolicy { None, CorrectnessOnly, CorrectnessAndExpected };

inline constexpr const char* kDefaultScoreTemplate = "You scored {score} out of {max}.";
inline constexpr const char* kDefaultAckLabel = "Continue";
inline constexpr std::int64_t kDefaultTextMaxLen = 2000;

struct ScoringSpec {
    double points_per_correct = 1.0;
    std::string template_text = kDefaultScoreTemplate;

    bool operator==(const ScoringSpec&) const = default;
};

struct TaskSpec {
    std::string id;
    std::string title;
    DecisionSpec decision;
    std::vector<InstanceSpec> instances;
    bool randomize_instances = false;
    FeedbackPolicy instance_feedback = FeedbackPolicy::None;
    std::optional<double> time_limit_s;
    bool show_progress = false;
    ScoringSpec scoring;

    bool operator==(const TaskSpec&) const = default;
};

struct InstructionView {
    std::string id;
    std::string title;
    std::string body;
    std::optional<MediaRef> image;
    std::string ack_label = kDefaultAckLabel;

    bool operator==(const InstructionView&) const = default;
};

struct ChoiceQuestion {
    std::vector<std::string> options;
    bool exclusive = true;

    bool operator==(const ChoiceQuestion&) const = default;
};

struct TextQuestion {
    std::int64_t max_len = kDefaultTextMaxLen;

    bool operator==(const TextQuestion&) const = default;
};

struct SliderQuestion {
    double min = 0;
    double max = 1;
    double step = 1;
    std::string min_label;
    std::string max_label;

    bool operator==(const SliderQuestion&) const = default;
};

struct QuestionSpec {
    std::string id;
    std::string prompt;
    bool required = true;
    std::variant<ChoiceQuestion, TextQuestion, SliderQuestion> body;

    bool operator==(const QuestionSpec&) const = default;
};

struct QuestionnaireView {
    std::string id;
    std::string title;
    std::vector<QuestionSpec> questions;

    bool operator==(const QuestionnaireView&) const = default;
};

struct ScoreFeedbackView {
    std::string id;
    std::string task_ref;

    bool operator==(const ScoreFeedbackView&) const = default;
};

using ExperimentElement = std::variant<InstructionView, QuestionnaireView, TaskSpec, ScoreFeedbackView>;

struct ExperimentSpec {
    std::string id;
    std::string title;
    std::vector<ExperimentElement> elements;

    bool operator==(const ExperimentSpec&) const = default;
};

using ProtocolElement = std::variant<InstructionView, QuestionnaireView, ExperimentSpec>;

struct CompletionSpec {
    std::string message;
    std::optional<std::string> redirect_url;

    bool operator==(const CompletionSpec&) const = default;
};

struct ProtocolSpec {
    std::string id;
    std::string title;
    CompletionSpec completion;
    std::vector<ProtocolElement> elements;

    bool operator==(const ProtocolSpec&) const = default;
};

// Wire names used by the JSON schema.
const char* to_string(FeedbackPolicy p);
const char* to_string(PredictionPosition p);
std::optional<FeedbackPolicy> feedback_policy_from(std::string_view s);
std::optional<PredictionPosition> prediction_position_from(std::string_view s);

/// Visits every task of the protocol in declared order.
template <class F>
void for_each_task(const ProtocolSpec& spec, F&& f) {
    for (const auto& el : spec.elements) {
        if (const auto* exp = std::get_if<ExperimentSpec>(&el)) {
            for (const auto& child : exp->elements) {
                if (const auto* task = std::get_if<TaskSpec>(&child)) f(*exp, *task);
            }
        }
    }
}

const TaskSpec* find_task(const ProtocolSpec& spec, std::string_view task_id);

}  // namespace webxaii
