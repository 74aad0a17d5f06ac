#include "webxaii/session/engine.hpp"

#include "webxaii/json_util.hpp"
#include "webxaii/session/instance_order.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace webxaii {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(SessionError::Code code, const std::string& what) { throw SessionError(code, what); }

[[noreturn]] void invalid(const std::string& what) { fail(SessionError::Code::PayloadInvalid, what); }

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

bool on_grid(double v, const SliderQuestion& s) {
    if (!std::isfinite(v)) return false;
    const double eps = 1e-9 * std::max({1.0, std::fabs(s.min), std::fabs(s.max)});
    if (v < s.min - eps || v > s.max + eps) return false;
    double k = (v - s.min) / s.step;
    return std::fabs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::fabs(k));
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

/// Checks a questionnaire answer map and returns it normalized to question order.
ojson validate_answers(const QuestionnaireView& view, const ojson& answers) {
    if (!answers.is_object()) invalid("answers must be an object");
    for (const auto& [key, _] : answers.items()) {
        bool known = std::any_of(view.questions.begin(), view.questions.end(),
                                 [&](const QuestionSpec& q) { return q.id == key; });
        if (!known) invalid("unknown question '" + key + "'");
    }
    ojson out = ojson::object();
    for (const auto& q : view.questions) {
        auto it = answers.find(q.id);
        bool present = it != answers.end() && !it->is_null();
        if (!present) {
            if (q.required) invalid("question '" + q.id + "' is required");
            continue;
        }
        const ojson& value = *it;
        if (const auto* c = std::get_if<ChoiceQuestion>(&q.body)) {
            if (c->exclusive) {
                if (!value.is_string() || !contains(c->options, value.get<std::string>())) {
                    invalid("answer to '" + q.id + "' must be one of its options");
                }
                out[q.id] = value;
            } else {
                if (!value.is_array()) invalid("answer to '" + q.id + "' must be a list of options");
                std::set<std::string> picked;
                for (const auto& v : value) {
                    if (!v.is_string() || !contains(c->options, v.get<std::string>())) {
                        invalid("answer to '" + q.id + "' contains a label that is not an option");
                    }
                    if (!picked.insert(v.get<std::string>()).second) invalid("answer to '" + q.id + "' repeats a label");
                }
                if (q.required && picked.empty()) invalid("question '" + q.id + "' is required");
                ojson ordered = ojson::array();
                for (const auto& opt : c->options) {
                    if (picked.count(opt)) ordered.push_back(opt);
                }
                out[q.id] = std::move(ordered);
            }
        } else if (const auto* t = std::get_if<TextQuestion>(&q.body)) {
            if (!value.is_string()) invalid("answer to '" + q.id + "' must be text");
            const auto& text = value.get_ref<const std::string&>();
            if (static_cast<std::int64_t>(utf8_length(text)) > t->max_len) {
                invalid("answer to '" + q.id + "' exceeds " + std::to_string(t->max_len) + " characters");
            }
            if (q.required && text.empty()) invalid("question '" + q.id + "' is required");
            out[q.id] = value;
        } else if (const auto* s = std::get_if<SliderQuestion>(&q.body)) {
            if (!value.is_number() || !on_grid(value.get<double>(), *s)) {
                invalid("answer to '" + q.id + "' must lie on the slider grid");
            }
            out[q.id] = value;
        }
    }
    return out;
}

std::vector<std::string> canonical_selection(const DecisionSpec& decision, const std::vector<std::string>& selected) {
    std::set<std::string> picked;
    for (const auto& s : selected) {
        if (!contains(decision.options, s)) invalid("'" + s + "' is not an option of this decision");
        if (!picked.insert(s).second) invalid("'" + s + "' selected twice");
    }
    if (decision.exclusive && picked.size() != 1) invalid("an exclusive decision needs exactly one selected option");
    std::vector<std::string> out;
    for (const auto& opt : decision.options) {
        if (picked.count(opt)) out.push_back(opt);
    }
    return out;
}

bool same_set(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return std::set<std::string>(a.begin(), a.end()) == std::set<std::string>(b.begin(), b.end());
}

ojson seconds_json(Millis ms) { return number_json(static_cast<double>(ms.count()) / 1000.0); }

void require_view(const SessionState& state, const Event& e) {
    if (state.cursor >= state.sequence.size()) {
        fail(SessionError::Code::ReplayMismatch, std::string(to_string(e.kind)) + " event after the last view");
    }
    const auto& view = state.sequence[state.cursor];
    if (e.refs.view_id != view.view_id) {
        fail(SessionError::Code::ReplayMismatch, std::string(to_string(e.kind)) + " event for view '" +
                                                     e.refs.view_id.value_or("") + "' but the current view is '" +
                                                     view.view_id + "'");
    }
}

bool kind_matches(ViewKind view, EventKind event) {
    switch (event) {
        case EventKind::InstructionAck: return view == ViewKind::Instruction;
        case EventKind::QuestionnaireResponse: return view == ViewKind::Questionnaire;
        case EventKind::Decision:
        case EventKind::Timeout: return view == ViewKind::InstanceDecision;
        case EventKind::ScoreShown: return view == ViewKind::ScoreFeedback;
        default: return false;
    }
}

}  // namespace

const char* to_string(ViewKind kind) {
    switch (kind) {
        case ViewKind::Instruction: return "instruction";
        case ViewKind::Questionnaire: return "questionnaire";
        case ViewKind::InstanceDecision: return "instance_decision";
        case ViewKind::ScoreFeedback: return "score_feedback";
    }
    return "unknown";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Correct: return "correct";
        case Verdict::Incorrect: return "incorrect";
        case Verdict::NotEvaluated: return "not_evaluated";
    }
    return "not_evaluated";
}

std::string session_id_for(std::string_view protocol_id, std::string_view login) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    auto encode = [](std::string& out, std::string_view s) {
        for (unsigned char c : s) {
            if (std::isalnum(c) || c == '_' || c == '-') {
                out.push_back(static_cast<char>(c));
            } else {
                out.push_back('%');
                out.push_back(kHex[c >> 4]);
                out.push_back(kHex[c & 0xF]);
            }
        }
    };
    std::string out;
    encode(out, protocol_id);
    out.push_back('.');
    encode(out, login);
    return out;
}

std::string render_score_template(const std::string& tmpl, double score, double max) {
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 7, "{score}") == 0) {
            out += format_number(score);
            i += 7;
        } else if (tmpl.compare(i, 5, "{max}") == 0) {
            out += format_number(max);
            i += 5;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

void apply_event(SessionState& state, const Event& e) {
    if (e.seq != state.last_seq + 1) {
        fail(SessionError::Code::ReplayMismatch,
             "expected seq " + std::to_string(state.last_seq + 1) + ", got " + std::to_string(e.seq));
    }
    if (e.session_id != state.session_id) fail(SessionError::Code::ReplayMismatch, "event of another session");

    switch (e.kind) {
        case EventKind::SessionStarted:
            if (e.seq != 1) fail(SessionError::Code::ReplayMismatch, "session_started must be the first event");
            state.created_at = e.server_ts;
            break;
        case EventKind::ViewShown: {
            require_view(state, e);
            auto& view = state.sequence[state.cursor];
            if (!view.timed() || view.shown_at) {
                fail(SessionError::Code::ReplayMismatch, "unexpected view_shown for '" + view.view_id + "'");
            }
            view.shown_at = e.server_ts;
            view.deadline = e.server_ts + *view.time_limit;
            break;
        }
        case EventKind::InstructionAck:
        case EventKind::QuestionnaireResponse:
        case EventKind::Decision:
        case EventKind::Timeout:
        case EventKind::ScoreShown: {
            require_view(state, e);
            if (!kind_matches(state.sequence[state.cursor].kind, e.kind)) {
                fail(SessionError::Code::ReplayMismatch,
                     std::string(to_string(e.kind)) + " does not answer a " +
                         to_string(state.sequence[state.cursor].kind) + " view");
            }
            state.results[state.cursor] = ResultRecord{e.kind, e.payload, e.server_ts, e.client_elapsed_ms};
            ++state.cursor;
            break;
        }
        case EventKind::SessionCompleted:
            if (!state.completed()) fail(SessionError::Code::ReplayMismatch, "session_completed before the last view");
            state.completed_at = e.server_ts;
            break;
        case EventKind::Login:
        case EventKind::FailedLogin:
            break;
    }
    state.last_seq = e.seq;
    state.last_ts = e.server_ts;
}

// ---------------------------------------------------------------------------

SessionEngine::SessionEngine(ProtocolPtr spec, EventStore& store, EngineOptions options)
    : spec_(std::move(spec)), store_(store), options_(std::move(options)) {
    for (const auto& el : spec_->elements) {
        if (const auto* v = std::get_if<InstructionView>(&el)) index_.emplace(v->id, v);
        else if (const auto* q = std::get_if<QuestionnaireView>(&el)) index_.emplace(q->id, q);
        else if (const auto* exp = std::get_if<ExperimentSpec>(&el)) {
            for (const auto& child : exp->elements) {
                if (const auto* v = std::get_if<InstructionView>(&child)) index_.emplace(v->id, v);
                else if (const auto* q = std::get_if<QuestionnaireView>(&child)) index_.emplace(q->id, q);
                else if (const auto* s = std::get_if<ScoreFeedbackView>(&child)) index_.emplace(s->id, s);
                else if (const auto* t = std::get_if<TaskSpec>(&child)) {
                    tasks_.emplace(t->id, t);
                    for (const auto& inst : t->instances) index_.emplace(inst.id, DecisionRef{exp, t, &inst});
                }
            }
        }
    }
}

std::vector<ViewInstance> SessionEngine::linearize(std::string_view user_login) const {
    std::vector<ViewInstance> seq;
    auto simple = [&](ViewKind kind, const std::string& id, const ExperimentSpec* exp) {
        ViewInstance v;
        v.kind = kind;
        v.view_id = id;
        if (exp) v.experiment_id = exp->id;
        seq.push_back(std::move(v));
    };
    auto expand = [&](const ExperimentSpec& exp, const TaskSpec& task) {
        auto order = derive_instance_order(spec_->id, task.id, user_login, task.instances.size(),
                                           task.randomize_instances);
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const auto& inst = task.instances[order[pos]];
            ViewInstance v;
            v.kind = ViewKind::InstanceDecision;
            v.view_id = inst.id;
            v.experiment_id = exp.id;
            v.task_id = task.id;
            v.instance_id = inst.id;
            v.declared_index = order[pos];
            v.presented_order_index = pos;
            if (task.time_limit_s) v.time_limit = Millis{static_cast<std::int64_t>(std::llround(*task.time_limit_s * 1000.0))};
            seq.push_back(std::move(v));
        }
    };
    for (const auto& el : spec_->elements) {
        if (const auto* v = std::get_if<InstructionView>(&el)) simple(ViewKind::Instruction, v->id, nullptr);
        else if (const auto* q = std::get_if<QuestionnaireView>(&el)) simple(ViewKind::Questionnaire, q->id, nullptr);
        else if (const auto* exp = std::get_if<ExperimentSpec>(&el)) {
            for (const auto& child : exp->elements) {
                if (const auto* v = std::get_if<InstructionView>(&child)) simple(ViewKind::Instruction, v->id, exp);
                else if (const auto* q = std::get_if<QuestionnaireView>(&child)) simple(ViewKind::Questionnaire, q->id, exp);
                else if (const auto* t = std::get_if<TaskSpec>(&child)) expand(*exp, *t);
                else if (const auto* s = std::get_if<ScoreFeedbackView>(&child)) {
                    simple(ViewKind::ScoreFeedback, s->id, exp);
                    seq.back().task_id = s->task_ref;
                }
            }
        }
    }
    return seq;
}

ojson SessionEngine::presented_orders(const std::vector<ViewInstance>& sequence) const {
    ojson orders = ojson::object();
    for (const auto& v : sequence) {
        if (v.kind != ViewKind::InstanceDecision) continue;
        if (!orders.contains(*v.task_id)) orders[*v.task_id] = ojson::array();
        orders[*v.task_id].push_back(*v.instance_id);
    }
    return orders;
}

void SessionEngine::append(SessionState& state, EventKind kind, const ViewInstance* view, ojson payload,
                           Timestamp now, std::optional<std::int64_t> client_elapsed_ms) {
    Event e;
    e.seq = state.last_seq + 1;
    e.session_id = state.session_id;
    e.user_login = state.user_login;
    e.protocol_id = state.protocol_id;
    e.kind = kind;
    if (view) {
        e.refs.experiment_id = view->experiment_id;
        e.refs.task_id = view->task_id;
        e.refs.view_id = view->view_id;
        e.refs.instance_id = view->instance_id;
        e.refs.presented_order_index = view->presented_order_index;
    }
    e.payload = std::move(payload);
    e.server_ts = std::max(now, state.last_ts);
    e.client_elapsed_ms = client_elapsed_ms;
    store_.append(e);
    apply_event(state, e);
}

void SessionEngine::record(SessionState& state, EventKind kind, ojson payload, Timestamp now) {
    append(state, kind, nullptr, std::move(payload), now);
}

SessionState SessionEngine::start_session(const UserRecord& user, Timestamp now) {
    if (user.protocol_id != spec_->id) {
        fail(SessionError::Code::AssignmentMismatch,
             "user '" + user.login + "' is assigned to '" + user.protocol_id + "', not '" + spec_->id + "'");
    }
    SessionState state;
    state.session_id = session_id_for(spec_->id, user.login);
    state.user_login = user.login;
    state.protocol_id = spec_->id;
    state.sequence = linearize(user.login);
    state.last_ts = now;

    ojson payload;
    payload["clock"] = options_.clock_label;
    payload["sequence_length"] = state.sequence.size();
    payload["presented_orders"] = presented_orders(state.sequence);
    append(state, EventKind::SessionStarted, nullptr, std::move(payload), now);
    return state;
}

SessionState SessionEngine::replay(std::span<const Event> events) const {
    if (events.empty() || events.front().kind != EventKind::SessionStarted) {
        fail(SessionError::Code::ReplayMismatch, "log does not start with session_started");
    }
    const Event& first = events.front();
    if (first.protocol_id != spec_->id) fail(SessionError::Code::ReplayMismatch, "log belongs to another protocol");

    SessionState state;
    state.session_id = first.session_id;
    state.user_login = first.user_login;
    state.protocol_id = first.protocol_id;
    state.sequence = linearize(first.user_login);
    if (auto it = first.payload.find("presented_orders");
        it != first.payload.end() && *it != presented_orders(state.sequence)) {
        fail(SessionError::Code::ReplayMismatch, "presented order differs from the protocol's derivation");
    }
    for (const auto& e : events) apply_event(state, e);
    return state;
}

void SessionEngine::finish_if_done(SessionState& state, Timestamp now) {
    if (state.completed() && !state.completed_at) append(state, EventKind::SessionCompleted, nullptr, ojson::object(), now);
}

void SessionEngine::show(SessionState& state, Timestamp now) {
    auto& view = state.sequence[state.cursor];
    ojson payload;
    payload["time_limit_s"] = seconds_json(*view.time_limit);
    payload["deadline"] = to_iso8601(std::max(now, state.last_ts) + *view.time_limit);
    append(state, EventKind::ViewShown, &view, std::move(payload), now);
}

const SessionEngine::Located& SessionEngine::locate(const ViewInstance& view) const {
    auto it = index_.find(view.view_id);
    if (it == index_.end()) fail(SessionError::Code::ReplayMismatch, "view '" + view.view_id + "' is not in the protocol");
    return it->second;
}

ViewResponse SessionEngine::current_view(SessionState& state, Timestamp now) {
    while (!state.completed()) {
        auto& view = state.sequence[state.cursor];
        if (view.timed()) {
            if (!view.shown_at) {
                show(state, now);
            } else if (now > *view.deadline + options_.grace) {
                ojson payload;
                payload["reason"] = "expired";
                payload["late_discarded"] = false;
                append(state, EventKind::Timeout, &view, std::move(payload), now);
                finish_if_done(state, now);
                continue;
            }
        }
        return render(state, state.sequence[state.cursor], now);
    }
    return CompletedView{spec_->completion.message, spec_->completion.redirect_url};
}

RenderedView SessionEngine::render(const SessionState& state, const ViewInstance& view, Timestamp now) const {
    RenderedView out;
    out.index = state.cursor;
    out.total = state.sequence.size();
    out.kind = view.kind;
    out.view_id = view.view_id;
    out.experiment_id = view.experiment_id;
    out.task_id = view.task_id;
    const Located& where = locate(view);
    if (const auto* v = std::get_if<const InstructionView*>(&where)) {
        out.content = InstructionContent{(*v)->title, (*v)->body, (*v)->image, (*v)->ack_label};
    } else if (const auto* q = std::get_if<const QuestionnaireView*>(&where)) {
        out.content = QuestionnaireContent{(*q)->title, (*q)->questions};
    } else if (const auto* s = std::get_if<const ScoreFeedbackView*>(&where)) {
        out.content = ScoreContent{(*s)->task_ref, compute_task_score(state, (*s)->task_ref)};
    } else {
        const auto& d = std::get<DecisionRef>(where);
        DecisionContent c;
        c.title = d.task->title;
        c.instance = d.instance->instance;
        c.prediction = d.instance->prediction;
        c.explanations = d.instance->explanations;
        c.prompt = d.instance->prompt_override.value_or(d.task->decision.prompt);
        c.options = d.task->decision.options;
        c.exclusive = d.task->decision.exclusive;
        if (view.timed()) {
            c.time_limit_s = d.task->time_limit_s;
            auto left = view.deadline ? std::max(Millis{0}, *view.deadline - now) : *view.time_limit;
            c.remaining_time_s = static_cast<double>(left.count()) / 1000.0;
        }
        if (d.task->show_progress) c.progress = Progress{*view.presented_order_index + 1, d.task->instances.size()};
        out.content = std::move(c);
    }
    return out;
}

SubmitResult SessionEngine::submit(SessionState& state, const Submission& sub, Timestamp now) {
    if (state.completed()) fail(SessionError::Code::StaleView, "the session is already completed");
    if (sub.client_elapsed_ms && *sub.client_elapsed_ms < 0) invalid("client_elapsed_ms must be non-negative");
    const ViewInstance* view = &state.sequence[state.cursor];
    if (sub.view_id != view->view_id) {
        fail(SessionError::Code::StaleView, "view '" + sub.view_id + "' is not the current view");
    }

    if (view->timed()) {
        if (!view->shown_at) show(state, now);
        view = &state.sequence[state.cursor];
        if (now > *view->deadline + options_.grace) {
            ojson payload;
            payload["reason"] = "late_submit";
            payload["late_discarded"] = true;
            append(state, EventKind::Timeout, view, std::move(payload), now, sub.client_elapsed_ms);
            finish_if_done(state, now);
            fail(SessionError::Code::TimedOut, "the time limit for this view has expired");
        }
    }

    SubmitResult result;
    const Located& where = locate(*view);
    if (std::get_if<const InstructionView*>(&where)) {
        if (!std::holds_alternative<AckPayload>(sub.payload)) invalid("an instruction view expects an acknowledgment");
        append(state, EventKind::InstructionAck, view, ojson::object(), now, sub.client_elapsed_ms);
    } else if (const auto* s = std::get_if<const ScoreFeedbackView*>(&where)) {
        if (!std::holds_alternative<AckPayload>(sub.payload)) invalid("a score view expects an acknowledgment");
        auto score = compute_task_score(state, (*s)->task_ref);
        ojson payload;
        payload["score"] = number_json(score.score);
        payload["max"] = number_json(score.max);
        payload["text"] = score.rendered;
        append(state, EventKind::ScoreShown, view, std::move(payload), now, sub.client_elapsed_ms);
    } else if (const auto* q = std::get_if<const QuestionnaireView*>(&where)) {
        const auto* answers = std::get_if<AnswersPayload>(&sub.payload);
        if (!answers) invalid("a questionnaire view expects answers");
        ojson payload;
        payload["answers"] = validate_answers(**q, answers->answers);
        append(state, EventKind::QuestionnaireResponse, view, std::move(payload), now, sub.client_elapsed_ms);
    } else {
        const auto& d = std::get<DecisionRef>(where);
        const auto* decision = std::get_if<DecisionPayload>(&sub.payload);
        if (!decision) invalid("an instance decision view expects selected options");
        auto selected = canonical_selection(d.task->decision, decision->selected);
        std::optional<bool> correct;
        if (d.instance->expected) correct = same_set(selected, *d.instance->expected);

        ojson payload;
        payload["selected"] = selected;
        payload["correct"] = correct ? ojson(*correct) : ojson(nullptr);
        append(state, EventKind::Decision, view, std::move(payload), now, sub.client_elapsed_ms);

        const auto policy = d.task->instance_feedback;
        if (policy != FeedbackPolicy::None) {
            FeedbackResult fb;
            fb.verdict = !correct ? Verdict::NotEvaluated : (*correct ? Verdict::Correct : Verdict::Incorrect);
            if (policy == FeedbackPolicy::CorrectnessAndExpected && d.instance->expected) fb.expected = d.instance->expected;
            result.feedback = std::move(fb);
        }
    }
    result.advanced = true;
    finish_if_done(state, now);
    return result;
}

TimeoutResult SessionEngine::notify_timeout(SessionState& state, std::string_view view_id, Timestamp now) {
    std::size_t index = state.sequence.size();
    for (std::size_t i = 0; i < state.sequence.size(); ++i) {
        if (state.sequence[i].view_id == view_id) {
            index = i;
            break;
        }
    }
    if (index == state.sequence.size()) fail(SessionError::Code::StaleView, "unknown view '" + std::string(view_id) + "'");
    if (index < state.cursor) return {false};
    if (index > state.cursor) fail(SessionError::Code::StaleView, "view '" + std::string(view_id) + "' is not current");

    auto& view = state.sequence[state.cursor];
    if (!view.timed()) invalid("view '" + view.view_id + "' has no time limit");
    if (!view.shown_at || now < *view.deadline - options_.clock_tolerance) {
        fail(SessionError::Code::Premature, "the time limit for this view has not expired yet");
    }
    ojson payload;
    payload["reason"] = "client_notify";
    payload["late_discarded"] = false;
    append(state, EventKind::Timeout, &view, std::move(payload), now);
    finish_if_done(state, now);
    return {true};
}

ScoreResult SessionEngine::compute_task_score(const SessionState& state, std::string_view task_id) const {
    auto it = tasks_.find(std::string(task_id));
    if (it == tasks_.end()) fail(SessionError::Code::UnknownTask, "unknown task '" + std::string(task_id) + "'");
    const TaskSpec& task = *it->second;

    std::size_t correct = 0;
    std::size_t with_expected = 0;
    for (std::size_t i = 0; i < state.sequence.size(); ++i) {
        const auto& view = state.sequence[i];
        if (view.kind != ViewKind::InstanceDecision || view.task_id != task.id) continue;
        auto rec = state.results.find(i);
        if (rec == state.results.end()) {
            fail(SessionError::Code::TaskIncomplete, "task '" + task.id + "' has unanswered instances");
        }
        const auto& inst = task.instances[*view.declared_index];
        if (!inst.expected) continue;
        ++with_expected;
        if (rec->second.kind != EventKind::Decision) continue;
        auto selected = rec->second.payload.at("selected").get<std::vector<std::string>>();
        if (same_set(selected, *inst.expected)) ++correct;
    }
    ScoreResult r;
    r.score = task.scoring.points_per_correct * static_cast<double>(correct);
    r.max = task.scoring.points_per_correct * static_cast<double>(with_expected);
    r.rendered = render_score_template(task.scoring.template_text, r.score, r.max);
    return r;
}

// ---------------------------------------------------------------------------
// JSON forms

ojson to_json(const ViewResponse& response) {
    if (const auto* done = std::get_if<CompletedView>(&response)) {
        ojson j;
        j["status"] = "completed";
        j["message"] = done->message;
        j["redirect_url"] = done->redirect_url ? ojson(*done->redirect_url) : ojson(nullptr);
        return j;
    }
    const auto& v = std::get<RenderedView>(response);
    ojson j;
    j["status"] = "in_progress";
    j["index"] = v.index;
    j["total"] = v.total;
    j["kind"] = to_string(v.kind);
    j["view_id"] = v.view_id;
    j["experiment_id"] = v.experiment_id ? ojson(*v.experiment_id) : ojson(nullptr);
    j["task_id"] = v.task_id ? ojson(*v.task_id) : ojson(nullptr);
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, InstructionContent>) {
                j["title"] = c.title;
                j["body"] = c.body;
                j["image"] = c.image ? media_to_json(*c.image) : ojson(nullptr);
                j["ack_label"] = c.ack_label;
            } else if constexpr (std::is_same_v<T, QuestionnaireContent>) {
                j["title"] = c.title;
                j["questions"] = ojson::array();
                for (const auto& q : c.questions) j["questions"].push_back(question_to_json(q));
            } else if constexpr (std::is_same_v<T, DecisionContent>) {
                j["title"] = c.title;
                j["instance"] = c.instance ? media_to_json(*c.instance) : ojson(nullptr);
                if (c.prediction) {
                    ojson p = media_to_json(c.prediction->media);
                    p["position"] = to_string(c.prediction->position);
                    j["prediction"] = std::move(p);
                } else {
                    j["prediction"] = nullptr;
                }
                j["explanations"] = ojson::array();
                for (const auto& e : c.explanations) j["explanations"].push_back(media_to_json(e));
                j["prompt"] = c.prompt;
                j["options"] = c.options;
                j["exclusive"] = c.exclusive;
                if (c.time_limit_s) j["time_limit_s"] = number_json(*c.time_limit_s);
                if (c.remaining_time_s) j["remaining_time_s"] = *c.remaining_time_s;
                if (c.progress) j["progress"] = {{"index", c.progress->index}, {"total", c.progress->total}};
            } else {
                j["text"] = c.score.rendered;
                j["score"] = number_json(c.score.score);
                j["max"] = number_json(c.score.max);
            }
        },
        v.content);
    return j;
}

ojson to_json(const SubmitResult& r) {
    ojson j;
    j["advanced"] = r.advanced;
    if (r.feedback) {
        j["feedback"]["verdict"] = to_string(r.feedback->verdict);
        if (r.feedback->expected) j["feedback"]["expected"] = *r.feedback->expected;
    }
    return j;
}

Submission submission_from_json(const nlohmann::json& body) {
    if (!body.is_object()) invalid("submission must be a JSON object");
    Submission sub;
    auto vid = body.find("view_id");
    if (vid == body.end() || !vid->is_string()) invalid("view_id must be a string");
    sub.view_id = vid->get<std::string>();
    if (auto it = body.find("client_elapsed_ms"); it != body.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
            invalid("client_elapsed_ms must be a non-negative integer");
        }
        sub.client_elapsed_ms = it->get<std::int64_t>();
    }
    auto p = body.find("payload");
    if (p == body.end() || !p->is_object()) invalid("payload must be an object");
    int kinds = p->contains("ack") + p->contains("answers") + p->contains("selected");
    if (kinds != 1) invalid("payload must hold exactly one of ack, answers, selected");
    if (p->contains("selected")) {
        const auto& sel = (*p)["selected"];
        if (!sel.is_array()) invalid("selected must be a list of option labels");
        DecisionPayload d;
        for (const auto& s : sel) {
            if (!s.is_string()) invalid("selected must be a list of option labels");
            d.selected.push_back(s.get<std::string>());
        }
        sub.payload = std::move(d);
    } else if (p->contains("answers")) {
        const auto& ans = (*p)["answers"];
        if (!ans.is_object()) invalid("answers must be an object");
        sub.payload = AnswersPayload{ojson::parse(ans.dump())};
    } else {
        if ((*p)["ack"] != true) invalid("ack must be true");
        sub.payload = AckPayload{};
    }
    return sub;
}

ojson to_json(const Submission& sub) {
    ojson j;
    j["view_id"] = sub.view_id;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AckPayload>) j["payload"]["ack"] = true;
            else if constexpr (std::is_same_v<T, AnswersPayload>) j["payload"]["answers"] = p.answers;
            else j["payload"]["selected"] = p.selected;
        },
        sub.payload);
    if (sub.client_elapsed_ms) j["client_elapsed_ms"] = *sub.client_elapsed_ms;
    return j;
}

}  // namespace webxaii
