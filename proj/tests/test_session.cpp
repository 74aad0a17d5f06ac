#include "support.hpp"

#include "webxaii/session/instance_order.hpp"
#include "webxaii/session/session_manager.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace webxaii;
using nlohmann::json;
using ojson = nlohmann::ordered_json;
using testing::TempDir;

namespace {

const Timestamp kT0{Millis{946684800000}};

Timestamp at(double seconds) { return kT0 + Millis{static_cast<std::int64_t>(seconds * 1000)}; }

UserRecord user(const std::string& login, const std::string& protocol) { return {login, "", protocol, kT0}; }

struct Harness {
    explicit Harness(ProtocolSpec s, EngineOptions opts = {})
        : spec(std::make_shared<const ProtocolSpec>(std::move(s))), engine(spec, store, opts) {}
    explicit Harness(const json& doc, EngineOptions opts = {}) : Harness(testing::parse_or_throw(doc), opts) {}

    EventStore store;
    ProtocolPtr spec;
    SessionEngine engine;
};

Submission ack(const std::string& view_id) { return {view_id, AckPayload{}, std::nullopt}; }
Submission decide(const std::string& view_id, std::vector<std::string> labels) {
    return {view_id, DecisionPayload{std::move(labels)}, std::nullopt};
}
Submission answers(const std::string& view_id, json a) { return {view_id, AnswersPayload{ojson::parse(a.dump())}, std::nullopt}; }

const TaskSpec& task_of(const ProtocolSpec& spec, const ViewInstance& v) { return *find_task(spec, *v.task_id); }

/// Valid answer for whatever view is current; decisions pick the expected
/// label when `correct`, otherwise a wrong one.
SubmitResult step(Harness& h, SessionState& s, Timestamp now, bool correct = true) {
    auto view = std::get<RenderedView>(h.engine.current_view(s, now));
    const auto& vi = s.sequence[s.cursor];
    switch (vi.kind) {
        case ViewKind::Instruction:
        case ViewKind::ScoreFeedback: return h.engine.submit(s, ack(view.view_id), now);
        case ViewKind::Questionnaire:
            if (view.view_id == "demographics") {
                return h.engine.submit(s, answers(view.view_id, {{"age", 30}, {"gender", "Woman"}, {"ai_familiarity", "Weekly"}}), now);
            }
            return h.engine.submit(s, answers(view.view_id, {{"trust", 4}, {"aids_used", {"My own search"}}}), now);
        case ViewKind::InstanceDecision: {
            const auto& inst = task_of(*h.spec, vi).instances[*vi.declared_index];
            std::string label = inst.expected ? inst.expected->front() : "A";
            if (!correct) label = label == "A" ? "B" : "A";
            return h.engine.submit(s, decide(view.view_id, {label}), now);
        }
    }
    return {};
}

std::size_t count_kind(const std::vector<Event>& events, EventKind kind) {
    std::size_t n = 0;
    for (const auto& e : events) n += e.kind == kind;
    return n;
}

}  // namespace

TEST_CASE("fixture A linearizes to eleven views in declared order") {
    Harness h(testing::load_fixture('A'));
    auto seq = h.engine.linearize("u001");
    REQUIRE(seq.size() == 11);
    std::vector<ViewKind> kinds;
    for (const auto& v : seq) kinds.push_back(v.kind);
    using K = ViewKind;
    CHECK(kinds == std::vector<K>{K::Questionnaire, K::Instruction, K::InstanceDecision, K::InstanceDecision,
                                  K::Instruction, K::InstanceDecision, K::InstanceDecision, K::Instruction,
                                  K::InstanceDecision, K::InstanceDecision, K::Questionnaire});
    CHECK(seq[0].view_id == "demographics");
    CHECK(seq[10].view_id == "final-survey");
    CHECK(seq[2].task_id == "task1");
    CHECK(seq[2].experiment_id == "exp1");

    // same multiset of instance ids as declared
    std::multiset<std::string> declared, sequenced;
    for_each_task(*h.spec, [&](const ExperimentSpec&, const TaskSpec& t) {
        for (const auto& i : t.instances) declared.insert(i.id);
    });
    for (const auto& v : seq) {
        if (v.instance_id) sequenced.insert(*v.instance_id);
    }
    CHECK(declared == sequenced);
}

TEST_CASE("task expansion follows the derived order") {
    Harness h(testing::expanded_protocol_a(10));
    auto a = h.engine.linearize("u001");
    auto b = h.engine.linearize("u002");
    REQUIRE(a.size() == 35);
    auto order = derive_instance_order("protocol-A", "task1", "u001", 10);
    for (std::size_t p = 0; p < 10; ++p) {
        CHECK(a[2 + p].declared_index == order[p]);
        CHECK(a[2 + p].presented_order_index == p);
        CHECK(a[2 + p].instance_id == "task1-x" + std::to_string(order[p]));
    }
    bool differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].kind == b[i].kind);
        if (a[i].kind != ViewKind::InstanceDecision) CHECK(a[i].view_id == b[i].view_id);
        else differ |= a[i].view_id != b[i].view_id;
    }
    CHECK(differ);
    CHECK(h.engine.linearize("u001") == a);
}

TEST_CASE("start_session records the session and its presented orders") {
    Harness h(testing::load_fixture('A'));
    auto s = h.engine.start_session(user("u001", "protocol-A"), kT0);
    CHECK(s.session_id == "protocol-A.u001");
    CHECK(s.cursor == 0);
    CHECK(s.last_seq == 1);
    auto events = h.store.session_events(s.session_id);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::SessionStarted);
    CHECK(events[0].payload["sequence_length"] == 11);
    CHECK(events[0].payload["clock"] == "system");
    CHECK(events[0].payload["presented_orders"]["task1"].size() == 2);

    CHECK_THROWS_AS(h.engine.start_session(user("u002", "protocol-B"), kT0), SessionError);
    try {
        h.engine.start_session(user("u002", "protocol-B"), kT0);
    } catch (const SessionError& e) {
        CHECK(e.code() == SessionError::Code::AssignmentMismatch);
    }
}

TEST_CASE("session ids are filesystem safe") {
    CHECK(session_id_for("protocol-A", "u001") == "protocol-A.u001");
    CHECK(session_id_for("p", "a/b c") == "p.a%2Fb%20c");
    CHECK(session_id_for("p.q", "..") == "p%2Eq.%2E%2E");
}

TEST_CASE("a full pass completes with one result per view") {
    Harness h(testing::load_fixture('A'));
    auto s = h.engine.start_session(user("u001", "protocol-A"), kT0);
    for (int i = 0; i < 11; ++i) step(h, s, at(i + 1));
    CHECK(s.completed());
    CHECK(s.results.size() == 11);
    auto done = h.engine.current_view(s, at(20));
    REQUIRE(std::holds_alternative<CompletedView>(done));
    CHECK(std::get<CompletedView>(done).message == "Thank you for taking part in this study.");
    CHECK(to_json(done)["status"] == "completed");

    auto events = h.store.session_events(s.session_id);
    CHECK(count_kind(events, EventKind::SessionStarted) == 1);
    CHECK(count_kind(events, EventKind::QuestionnaireResponse) == 2);
    CHECK(count_kind(events, EventKind::InstructionAck) == 3);
    CHECK(count_kind(events, EventKind::Decision) == 6);
    CHECK(count_kind(events, EventKind::SessionCompleted) == 1);
    CHECK(events.back().kind == EventKind::SessionCompleted);
    for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].seq == i + 1);

    CHECK_THROWS_AS(h.engine.submit(s, ack("final-survey"), at(30)), SessionError);
}

TEST_CASE("decision views render the instance, prediction and explanations") {
    Harness h(testing::load_fixture('D'));
    auto s = h.engine.start_session(user("u031", "protocol-D"), kT0);
    for (int i = 0; i < 5; ++i) step(h, s, at(i + 1));
    auto view = std::get<RenderedView>(h.engine.current_view(s, at(6)));
    REQUIRE(view.kind == ViewKind::InstanceDecision);
    CHECK(view.task_id == "task2");
    const auto& c = std::get<DecisionContent>(view.content);
    REQUIRE(c.instance);
    CHECK(c.instance->kind == MediaRef::Kind::Image);
    CHECK(c.instance->src.rfind("mazes/", 0) == 0);
    REQUIRE(c.prediction);
    CHECK(c.prediction->position == PredictionPosition::Top);
    CHECK(c.prediction->media.kind == MediaRef::Kind::Text);
    REQUIRE(c.explanations.size() == 1);
    CHECK(c.explanations[0].src.rfind("explanations/", 0) == 0);
    CHECK(c.options == std::vector<std::string>{"A", "B", "C", "D"});
    CHECK(c.exclusive);
    CHECK_FALSE(c.remaining_time_s);
    REQUIRE(c.progress);
    CHECK(c.progress->index == 1);
    CHECK(c.progress->total == 2);

    auto j = to_json(ViewResponse{view});
    CHECK(j["kind"] == "instance_decision");
    CHECK(j["prediction"]["position"] == "top");
    CHECK(j["explanations"].size() == 1);
    CHECK_FALSE(j.contains("remaining_time_s"));
    CHECK(j["progress"]["total"] == 2);
}

TEST_CASE("feedback follows the task policy") {
    Harness h(testing::load_fixture('A'));
    auto s = h.engine.start_session(user("u001", "protocol-A"), kT0);
    step(h, s, at(1));
    step(h, s, at(2));
    // task1: correctness_only
    auto r = step(h, s, at(3), true);
    REQUIRE(r.feedback);
    CHECK(r.feedback->verdict == Verdict::Correct);
    CHECK_FALSE(r.feedback->expected);
    CHECK(r.advanced);
    r = step(h, s, at(4), false);
    REQUIRE(r.feedback);
    CHECK(r.feedback->verdict == Verdict::Incorrect);
    CHECK(to_json(r).dump() == R"({"advanced":true,"feedback":{"verdict":"incorrect"}})");
    // task3: none
    for (int i = 0; i < 4; ++i) step(h, s, at(5 + i));
    REQUIRE(s.sequence[s.cursor].task_id == "task3");
    r = step(h, s, at(10));
    CHECK_FALSE(r.feedback);
    CHECK(to_json(r).dump() == R"({"advanced":true})");
}

TEST_CASE("correctness_and_expected reveals the expected labels") {
    Harness h(testing::single_task_protocol(2, {{"instance_feedback", "correctness_and_expected"}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    auto r = h.engine.submit(s, decide("i0", {"B"}), at(1));
    REQUIRE(r.feedback);
    CHECK(r.feedback->verdict == Verdict::Incorrect);
    CHECK(r.feedback->expected == std::vector<std::string>{"A"});
}

TEST_CASE("instances without expected answers are not evaluated") {
    auto doc = testing::single_task_protocol(2, {{"instance_feedback", "correctness_only"}});
    doc["elements"][0]["elements"][0]["instances"][0].erase("expected");
    Harness h(doc);
    auto s = h.engine.start_session(user("u", "p"), kT0);
    auto r = h.engine.submit(s, decide("i0", {"C"}), at(1));
    REQUIRE(r.feedback);
    CHECK(r.feedback->verdict == Verdict::NotEvaluated);
    CHECK(h.store.session_events(s.session_id).back().payload["correct"].is_null());
}

TEST_CASE("invalid payloads leave the cursor in place") {
    Harness h(testing::load_fixture('A'));
    auto s = h.engine.start_session(user("u001", "protocol-A"), kT0);
    auto expect_invalid = [&](const Submission& sub) {
        try {
            h.engine.submit(s, sub, at(1));
            FAIL("accepted");
        } catch (const SessionError& e) {
            CHECK(e.code() == SessionError::Code::PayloadInvalid);
        }
        CHECK(s.cursor == 0);
        CHECK(s.last_seq == 1);
    };
    expect_invalid(ack("demographics"));
    expect_invalid(answers("demographics", {{"age", 30}}));
    expect_invalid(answers("demographics", {{"age", 30.5}, {"gender", "Woman"}, {"ai_familiarity", "Weekly"}}));
    expect_invalid(answers("demographics", {{"age", 90}, {"gender", "Woman"}, {"ai_familiarity", "Weekly"}}));
    expect_invalid(answers("demographics", {{"age", 30}, {"gender", "Robot"}, {"ai_familiarity", "Weekly"}}));
    expect_invalid(answers("demographics", {{"age", 30}, {"gender", "Woman"}, {"ai_familiarity", "Weekly"}, {"shoe", 1}}));
    expect_invalid(answers("demographics",
                           {{"age", 30}, {"gender", "Woman"}, {"ai_familiarity", "Weekly"}, {"occupation", std::string(201, 'x')}}));

    step(h, s, at(1));
    step(h, s, at(2));
    const auto& vid = s.sequence[s.cursor].view_id;
    auto cursor = s.cursor;
    for (auto bad : {std::vector<std::string>{}, {"A", "B"}, {"E"}}) {
        try {
            h.engine.submit(s, decide(vid, bad), at(3));
            FAIL("accepted");
        } catch (const SessionError& e) {
            CHECK(e.code() == SessionError::Code::PayloadInvalid);
        }
    }
    CHECK(s.cursor == cursor);
}

TEST_CASE("non-exclusive answers are stored in option order") {
    auto doc = testing::single_task_protocol(1, {{"decision", {{"prompt", "?"}, {"options", {"A", "B", "C", "D"}}, {"exclusive", false}}}});
    doc["elements"][0]["elements"][0]["instances"][0]["expected"] = {"D", "B"};
    Harness h(doc);
    auto s = h.engine.start_session(user("u", "p"), kT0);
    h.engine.submit(s, decide("i0", {"D", "B"}), at(1));
    auto ev = h.store.session_events(s.session_id)[1];
    CHECK(ev.payload["selected"] == ojson::array({"B", "D"}));
    CHECK(ev.payload["correct"] == true);
}

TEST_CASE("stale and duplicate submissions are rejected") {
    Harness h(testing::load_fixture('A'));
    auto s = h.engine.start_session(user("u001", "protocol-A"), kT0);
    step(h, s, at(1));
    auto code_of = [&](const Submission& sub) {
        try {
            h.engine.submit(s, sub, at(2));
        } catch (const SessionError& e) {
            return e.code();
        }
        return SessionError::Code::ReplayMismatch;
    };
    auto dup = answers("demographics", {{"age", 30}, {"gender", "Woman"}, {"ai_familiarity", "Weekly"}});
    CHECK(code_of(dup) == SessionError::Code::StaleView);
    CHECK(code_of(ack("exp2-instructions")) == SessionError::Code::StaleView);
    CHECK(s.cursor == 1);
}

TEST_CASE("timed views carry an authoritative deadline") {
    Harness h(testing::single_task_protocol(3, {{"time_limit_s", 20}, {"show_progress", true}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    auto first = std::get<RenderedView>(h.engine.current_view(s, at(0)));
    CHECK(std::get<DecisionContent>(first.content).remaining_time_s == 20.0);
    auto events = h.store.session_events(s.session_id);
    REQUIRE(events.size() == 2);
    CHECK(events[1].kind == EventKind::ViewShown);
    CHECK(events[1].payload["deadline"] == "2000-01-01T00:00:20.000Z");

    auto again = std::get<RenderedView>(h.engine.current_view(s, at(7)));
    const auto& c = std::get<DecisionContent>(again.content);
    CHECK(c.remaining_time_s == 13.0);
    CHECK(c.time_limit_s == 20.0);
    CHECK(h.store.session_events(s.session_id).size() == 2);

    auto j = to_json(ViewResponse{again});
    CHECK(j["remaining_time_s"] == 13.0);
    CHECK(j["time_limit_s"] == 20);
}

TEST_CASE("late submissions become timeouts without the answer") {
    Harness h(testing::single_task_protocol(2, {{"time_limit_s", 1}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    h.engine.current_view(s, at(0));
    // inside the grace window the answer still counts
    auto r = h.engine.submit(s, decide(s.sequence[0].view_id, {"A"}), at(2.9));
    CHECK(r.advanced);
    h.engine.current_view(s, at(3));
    try {
        h.engine.submit(s, decide(s.sequence[1].view_id, {"B"}), at(6.5));
        FAIL("accepted");
    } catch (const SessionError& e) {
        CHECK(e.code() == SessionError::Code::TimedOut);
    }
    CHECK(s.completed());
    auto events = h.store.session_events(s.session_id);
    const auto& timeout = events[events.size() - 2];
    CHECK(timeout.kind == EventKind::Timeout);
    CHECK(timeout.payload["reason"] == "late_submit");
    CHECK(timeout.payload["late_discarded"] == true);
    CHECK_FALSE(timeout.payload.contains("selected"));
    CHECK(s.results.at(1).kind == EventKind::Timeout);
}

TEST_CASE("client timeout notices") {
    Harness h(testing::single_task_protocol(2, {{"time_limit_s", 1}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    h.engine.current_view(s, at(0));
    auto first = s.sequence[0].view_id;
    auto r = h.engine.notify_timeout(s, first, at(1.2));
    CHECK(r.advanced);
    CHECK(s.cursor == 1);
    CHECK(h.store.session_events(s.session_id).back().payload["reason"] == "client_notify");

    // after an accepted answer the notice is a no-op
    h.engine.current_view(s, at(1.3));
    h.engine.submit(s, decide(s.sequence[1].view_id, {"B"}), at(1.5));
    auto count = h.store.session_events(s.session_id).size();
    CHECK_FALSE(h.engine.notify_timeout(s, s.sequence[1].view_id, at(2.5)).advanced);
    CHECK(h.store.session_events(s.session_id).size() == count);
}

TEST_CASE("early timeout notices are premature") {
    Harness h(testing::single_task_protocol(2, {{"time_limit_s", 20}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    h.engine.current_view(s, at(0));
    try {
        h.engine.notify_timeout(s, s.sequence[0].view_id, at(0.3));
        FAIL("accepted");
    } catch (const SessionError& e) {
        CHECK(e.code() == SessionError::Code::Premature);
    }
    CHECK(s.cursor == 0);
    // within the clock tolerance the notice is accepted
    CHECK(h.engine.notify_timeout(s, s.sequence[0].view_id, at(19.2)).advanced);
}

TEST_CASE("reconnecting after expiry times the view out before rendering") {
    Harness h(testing::single_task_protocol(2, {{"time_limit_s", 5}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    h.engine.current_view(s, at(0));
    auto view = std::get<RenderedView>(h.engine.current_view(s, at(60)));
    CHECK(view.index == 1);
    auto events = h.store.session_events(s.session_id);
    CHECK(count_kind(events, EventKind::Timeout) == 1);
    CHECK(events[2].payload["reason"] == "expired");
}

TEST_CASE("task scores") {
    SUBCASE("all correct") {
        Harness h(testing::single_task_protocol(3));
        auto s = h.engine.start_session(user("u", "p"), kT0);
        for (int i = 0; i < 3; ++i) step(h, s, at(i));
        auto sc = h.engine.compute_task_score(s, "t");
        CHECK(sc.score == 3);
        CHECK(sc.max == 3);
        CHECK(sc.rendered == "You scored 3 out of 3.");
    }
    SUBCASE("correct, incorrect, timeout") {
        Harness h(testing::single_task_protocol(3, {{"time_limit_s", 10}}));
        auto s = h.engine.start_session(user("u", "p"), kT0);
        step(h, s, at(1), true);
        step(h, s, at(2), false);
        h.engine.current_view(s, at(3));
        h.engine.notify_timeout(s, s.sequence[2].view_id, at(13));
        auto sc = h.engine.compute_task_score(s, "t");
        CHECK(sc.score == 1);
        CHECK(sc.max == 3);
    }
    SUBCASE("fractional points") {
        Harness h(testing::single_task_protocol(4, {{"scoring", {{"points_per_correct", 2.5}, {"template", "{score}/{max}"}}}}));
        auto s = h.engine.start_session(user("u", "p"), kT0);
        step(h, s, at(1), true);
        step(h, s, at(2), false);
        step(h, s, at(3), true);
        step(h, s, at(4), false);
        auto sc = h.engine.compute_task_score(s, "t");
        CHECK(sc.score == 5);
        CHECK(sc.max == 10);
        CHECK(sc.rendered == "5/10");
    }
    SUBCASE("errors") {
        Harness h(testing::single_task_protocol(2));
        auto s = h.engine.start_session(user("u", "p"), kT0);
        step(h, s, at(1));
        CHECK_THROWS_AS(h.engine.compute_task_score(s, "t"), SessionError);
        try {
            h.engine.compute_task_score(s, "nope");
        } catch (const SessionError& e) {
            CHECK(e.code() == SessionError::Code::UnknownTask);
        }
    }
    CHECK(render_score_template("{score} of {max} ({score})", 1.5, 4) == "1.5 of 4 (1.5)");
}

TEST_CASE("score feedback views report the score") {
    auto doc = testing::single_task_protocol(2);
    doc["elements"][0]["elements"].push_back({{"kind", "score_feedback"}, {"id", "score"}, {"task_ref", "t"}});
    Harness h(doc);
    auto s = h.engine.start_session(user("u", "p"), kT0);
    step(h, s, at(1), true);
    step(h, s, at(2), false);
    auto view = std::get<RenderedView>(h.engine.current_view(s, at(3)));
    CHECK(view.kind == ViewKind::ScoreFeedback);
    auto j = to_json(ViewResponse{view});
    CHECK(j["text"] == "You scored 1 out of 2.");
    CHECK(j["score"] == 1);
    step(h, s, at(3));
    CHECK(s.completed());
    auto events = h.store.session_events(s.session_id);
    CHECK(events[events.size() - 2].kind == EventKind::ScoreShown);
    CHECK(events[events.size() - 2].payload["max"] == 2);
}

TEST_CASE("replaying the log reproduces the state") {
    Harness h(testing::expanded_protocol_a(3));
    auto s = h.engine.start_session(user("u007", "protocol-A"), kT0);
    for (int i = 0; i < 8; ++i) {
        step(h, s, at(i + 1), i % 2 == 0);
        auto events = h.store.session_events(s.session_id);
        CHECK(h.engine.replay(events) == s);
    }
    while (!s.completed()) step(h, s, at(30));
    auto events = h.store.session_events(s.session_id);
    CHECK(h.engine.replay(events) == s);

    auto tampered = events;
    tampered[3].refs.view_id = "somewhere-else";
    try {
        h.engine.replay(tampered);
        FAIL("replayed");
    } catch (const SessionError& e) {
        CHECK(e.code() == SessionError::Code::ReplayMismatch);
    }
    auto gap = events;
    gap.erase(gap.begin() + 2);
    CHECK_THROWS_AS(h.engine.replay(gap), SessionError);
    CHECK_THROWS_AS(h.engine.replay(std::vector<Event>{}), SessionError);
}

TEST_CASE("the cursor never moves backwards or skips") {
    Harness h(testing::single_task_protocol(6, {{"time_limit_s", 2}}));
    auto s = h.engine.start_session(user("u", "p"), kT0);
    std::mt19937_64 rng(99);
    double t = 0;
    for (int i = 0; i < 200 && !s.completed(); ++i) {
        auto before = s.cursor;
        t += 0.1 * static_cast<double>(rng() % 40);
        auto vid = s.sequence[std::min<std::size_t>(s.cursor + rng() % 2, s.sequence.size() - 1)].view_id;
        try {
            switch (rng() % 3) {
                case 0: h.engine.current_view(s, at(t)); break;
                case 1: h.engine.submit(s, decide(vid, {"A"}), at(t)); break;
                default: h.engine.notify_timeout(s, vid, at(t)); break;
            }
        } catch (const SessionError&) {
        }
        CHECK(s.cursor >= before);
        CHECK(s.cursor <= before + 1);
    }
    CHECK(h.engine.replay(h.store.session_events(s.session_id)) == s);
}

TEST_CASE("submission JSON") {
    auto sub = submission_from_json(json::parse(R"({"view_id":"v","payload":{"selected":["A"]},"client_elapsed_ms":12})"));
    CHECK(sub.view_id == "v");
    CHECK(std::get<DecisionPayload>(sub.payload).selected == std::vector<std::string>{"A"});
    CHECK(sub.client_elapsed_ms == 12);
    CHECK(to_json(sub).dump() == R"({"view_id":"v","payload":{"selected":["A"]},"client_elapsed_ms":12})");

    for (const char* bad : {R"([])", R"({"payload":{"ack":true}})", R"({"view_id":"v"})",
                            R"({"view_id":"v","payload":{"ack":false}})",
                            R"({"view_id":"v","payload":{"ack":true,"selected":[]}})",
                            R"({"view_id":"v","payload":{"selected":[1]}})",
                            R"({"view_id":"v","payload":{"answers":[]}})",
                            R"({"view_id":"v","payload":{"ack":true},"client_elapsed_ms":-1})"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(submission_from_json(json::parse(bad)), SessionError);
    }
}

TEST_CASE("session manager resumes and recovers") {
    TempDir dir;
    ProtocolCatalog catalog;
    catalog.add(std::make_shared<const ProtocolSpec>(testing::load_fixture('A')));
    std::string sid;
    {
        EventStore store(dir.path());
        SessionManager sessions(catalog, store);
        auto u = user("u001", "protocol-A");
        auto first = sessions.start_or_resume(u, kT0);
        CHECK_FALSE(first.resumed);
        sid = first.session_id;
        sessions.with_session(sid, [&](SessionEngine& engine, SessionState& s) {
            engine.submit(s, answers("demographics", {{"age", 30}, {"gender", "Man"}, {"ai_familiarity", "Daily"}}), at(1));
        });
        auto second = sessions.start_or_resume(u, at(2));
        CHECK(second.resumed);
        CHECK(second.session_id == sid);
        CHECK(sessions.snapshot(sid)->cursor == 1);
        CHECK_THROWS_AS(sessions.with_session("nope", [](auto&, auto&) {}), std::out_of_range);
    }
    EventStore store(dir.path());
    SessionManager sessions(catalog, store);
    CHECK(sessions.recover().empty());
    auto snap = sessions.snapshot(sid);
    REQUIRE(snap);
    CHECK(snap->cursor == 1);
    auto summaries = sessions.summaries();
    REQUIRE(summaries.size() == 1);
    CHECK(summaries[0].status == SessionStatus::InProgress);
    CHECK(sessions.start_or_resume(user("u001", "protocol-A"), at(3)).resumed);
}
