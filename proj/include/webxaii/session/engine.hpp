#pragma once

#include "webxaii/config/catalog.hpp"
#include "webxaii/connection/user.hpp"
#include "webxaii/events/event_store.hpp"
#include "webxaii/time.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace webxaii {

class SessionError : public std::runtime_error {
public:
    enum class Code {
        AssignmentMismatch,
        StaleView,
        PayloadInvalid,
        TimedOut,  // the late answer was discarded and a timeout recorded; the cursor advanced
        Premature,
        TaskIncomplete,
        UnknownTask,
        ReplayMismatch,
    };

    SessionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

enum class ViewKind { Instruction, Questionnaire, InstanceDecision, ScoreFeedback };
const char* to_string(ViewKind kind);

/// One entry of a participant's linearized journey.
struct ViewInstance {
    ViewKind kind = ViewKind::Instruction;
    std::string view_id;  // element id, or instance id for decisions; unique in the sequence
    std::optional<std::string> experiment_id;
    std::optional<std::string> task_id;
    std::optional<std::string> instance_id;
    std::optional<std::size_t> declared_index;         // index in TaskSpec::instances
    std::optional<std::size_t> presented_order_index;  // position in the task's presented order
    std::optional<Millis> time_limit;
    std::optional<Timestamp> shown_at;
    std::optional<Timestamp> deadline;

    bool timed() const { return time_limit.has_value(); }
    bool operator==(const ViewInstance&) const = default;
};

/// What was recorded for a view: the advancing event's kind and payload.
struct ResultRecord {
    EventKind kind = EventKind::InstructionAck;
    nlohmann::ordered_json payload;
    Timestamp at{};
    std::optional<std::int64_t> client_elapsed_ms;

    bool operator==(const ResultRecord&) const = default;
};

enum class SessionStatus { InProgress, Completed };

struct SessionState {
    std::string session_id;
    std::string user_login;
    std::string protocol_id;
    std::vector<ViewInstance> sequence;
    std::size_t cursor = 0;
    std::map<std::size_t, ResultRecord> results;
    Timestamp created_at{};
    std::optional<Timestamp> completed_at;
    std::uint64_t last_seq = 0;
    Timestamp last_ts{};

    SessionStatus status() const {
        return cursor == sequence.size() ? SessionStatus::Completed : SessionStatus::InProgress;
    }
    bool completed() const { return status() == SessionStatus::Completed; }
    bool operator==(const SessionState&) const = default;
};

// ---------------------------------------------------------------------------
// Rendered views

struct Progress {
    std::size_t index = 0;  // 1-based
    std::size_t total = 0;
};

struct InstructionContent {
    std::string title;
    std::string body;
    std::optional<MediaRef> image;
    std::string ack_label;
};

struct QuestionnaireContent {
    std::string title;
    std::vector<QuestionSpec> questions;
};

struct DecisionContent {
    std::string title;
    std::optional<MediaRef> instance;
    std::optional<PredictionRef> prediction;
    std::vector<MediaRef> explanations;
    std::string prompt;
    std::vector<std::string> options;
    bool exclusive = true;
    std::optional<double> time_limit_s;
    std::optional<double> remaining_time_s;
    std::optional<Progress> progress;
};

struct ScoreResult {
    double score = 0;
    double max = 0;
    std::string rendered;
};

struct ScoreContent {
    std::string task_id;
    ScoreResult score;
};

struct RenderedView {
    std::size_t index = 0;  // position in the sequence
    std::size_t total = 0;  // sequence length
    ViewKind kind = ViewKind::Instruction;
    std::string view_id;
    std::optional<std::string> experiment_id;
    std::optional<std::string> task_id;
    std::variant<InstructionContent, QuestionnaireContent, DecisionContent, ScoreContent> content;
};

struct CompletedView {
    std::string message;
    std::optional<std::string> redirect_url;
};

using ViewResponse = std::variant<RenderedView, CompletedView>;

nlohmann::ordered_json to_json(const ViewResponse& view);

// ---------------------------------------------------------------------------
// Submissions

struct AckPayload {};
struct AnswersPayload {
    nlohmann::ordered_json answers = nlohmann::ordered_json::object();
};
struct DecisionPayload {
    std::vector<std::string> selected;
};

struct Submission {
    std::string view_id;
    std::variant<AckPayload, AnswersPayload, DecisionPayload> payload;
    std::optional<std::int64_t> client_elapsed_ms;
};

/// {"view_id", "payload": {"ack":true} | {"answers":{...}} | {"selected":[...]}, "client_elapsed_ms"?}
/// Throws SessionError(PayloadInvalid) on a malformed body.
Submission submission_from_json(const nlohmann::json& body);
nlohmann::ordered_json to_json(const Submission& sub);

enum class Verdict { Correct, Incorrect, NotEvaluated };
const char* to_string(Verdict v);

struct FeedbackResult {
    Verdict verdict = Verdict::NotEvaluated;
    std::optional<std::vector<std::string>> expected;  // only under correctness_and_expected

    bool operator==(const FeedbackResult&) const = default;
};

struct SubmitResult {
    std::optional<FeedbackResult> feedback;
    bool advanced = false;
};

struct TimeoutResult {
    bool advanced = false;
};

/// {"advanced": bool, "feedback"?: {"verdict", "expected"?}}
nlohmann::ordered_json to_json(const SubmitResult& r);

struct EngineOptions {
    Millis grace{2000};            // accepted lateness of a submit past the deadline
    Millis clock_tolerance{1000};  // accepted earliness of a client timeout notice
    std::string clock_label = "system";
};

/// Deterministic, filesystem-safe session id: "<protocol>.<login>" with every
/// byte outside [A-Za-z0-9_-] percent-encoded.
std::string session_id_for(std::string_view protocol_id, std::string_view login);

/// Folds one event into a state. Throws SessionError(ReplayMismatch) when the
/// event does not fit the state (wrong seq, wrong view, wrong kind).
void apply_event(SessionState& state, const Event& e);

/// Drives participants through one protocol. Stateless apart from the protocol and
/// an index over it; callers serialize access to each SessionState.
///
/// Every mutation is first appended to the event store and then applied to the
/// state with apply_event(), so the log alone reconstructs the state.
class SessionEngine {
public:
    SessionEngine(ProtocolPtr spec, EventStore& store, EngineOptions options = {});

    const ProtocolSpec& spec() const { return *spec_; }
    const EngineOptions& options() const { return options_; }

    /// Depth-first flattening in declared order; tasks expand to their
    /// instances in derive_instance_order() order.
    std::vector<ViewInstance> linearize(std::string_view user_login) const;

    /// Creates a fresh session and records session_started.
    SessionState start_session(const UserRecord& user, Timestamp now);

    /// Rebuilds a session from its log.
    SessionState replay(std::span<const Event> events) const;

    ViewResponse current_view(SessionState& state, Timestamp now);
    SubmitResult submit(SessionState& state, const Submission& sub, Timestamp now);
    TimeoutResult notify_timeout(SessionState& state, std::string_view view_id, Timestamp now);
    ScoreResult compute_task_score(const SessionState& state, std::string_view task_id) const;

    /// Appends an event that does not move the cursor (e.g. login).
    void record(SessionState& state, EventKind kind, nlohmann::ordered_json payload, Timestamp now);

private:
    struct DecisionRef {
        const ExperimentSpec* experiment;
        const TaskSpec* task;
        const InstanceSpec* instance;
    };
    using Located = std::variant<const InstructionView*, const QuestionnaireView*, DecisionRef, const ScoreFeedbackView*>;

    void append(SessionState& state, EventKind kind, const ViewInstance* view, nlohmann::ordered_json payload,
                Timestamp now, std::optional<std::int64_t> client_elapsed_ms = std::nullopt);
    void finish_if_done(SessionState& state, Timestamp now);
    void show(SessionState& state, Timestamp now);
    RenderedView render(const SessionState& state, const ViewInstance& view, Timestamp now) const;
    const Located& locate(const ViewInstance& view) const;
    nlohmann::ordered_json presented_orders(const std::vector<ViewInstance>& sequence) const;

    ProtocolPtr spec_;
    EventStore& store_;
    EngineOptions options_;
    std::unordered_map<std::string, Located> index_;
    std::unordered_map<std::string, const TaskSpec*> tasks_;
};

/// Score for a ScoringSpec: points × matches, max over instances with an expected answer.
std::string render_score_template(const std::string& tmpl, double score, double max);

}  // namespace webxaii
