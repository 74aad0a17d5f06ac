#include "webxaii/config/protocol_io.hpp"

#include "webxaii/json_util.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace webxaii {

using json = nlohmann::json;

const char* to_string(FeedbackPolicy p) {
    switch (p) {
        case FeedbackPolicy::None: return "none";
        case FeedbackPolicy::CorrectnessOnly: return "correctness_only";
        case FeedbackPolicy::CorrectnessAndExpected: return "correctness_and_expected";
    }
    return "none";
}

const char* to_string(PredictionPosition p) {
    return p == PredictionPosition::Top ? "top" : "below_instance";
}

std::optional<FeedbackPolicy> feedback_policy_from(std::string_view s) {
    if (s == "none") return FeedbackPolicy::None;
    if (s == "correctness_only") return FeedbackPolicy::CorrectnessOnly;
    if (s == "correctness_and_expected") return FeedbackPolicy::CorrectnessAndExpected;
    return std::nullopt;
}

std::optional<PredictionPosition> prediction_position_from(std::string_view s) {
    if (s == "top") return PredictionPosition::Top;
    if (s == "below_instance") return PredictionPosition::BelowInstance;
    return std::nullopt;
}

const TaskSpec* find_task(const ProtocolSpec& spec, std::string_view task_id) {
    const TaskSpec* found = nullptr;
    for_each_task(spec, [&](const ExperimentSpec&, const TaskSpec& task) {
        if (!found && task.id == task_id) found = &task;
    });
    return found;
}

const char* to_string(Diagnostic::Severity s) {
    return s == Diagnostic::Severity::Error ? "ERROR" : "WARNING";
}

std::string format_diagnostic(const Diagnostic& d) {
    return std::string(to_string(d.severity)) + " " + d.path + " " + d.message;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) {
        if (d.is_error()) return true;
    }
    return false;
}

namespace {

const char* type_name(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return "null";
        case json::value_t::object: return "object";
        case json::value_t::array: return "array";
        case json::value_t::string: return "string";
        case json::value_t::boolean: return "boolean";
        case json::value_t::number_integer:
        case json::value_t::number_unsigned:
        case json::value_t::number_float: return "number";
        default: return "value";
    }
}

// Structural decoder. Collects every problem it sees instead of stopping at
// the first; the caller discards the partial result if any error was recorded.
class Decoder {
public:
    std::vector<Diagnostic> take() { return std::move(diags_); }
    bool failed() const { return has_errors(diags_); }

    void error(const std::string& path, std::string msg) {
        diags_.push_back({Diagnostic::Severity::Error, display_path(path), std::move(msg)});
    }
    void warn(const std::string& path, std::string msg) {
        diags_.push_back({Diagnostic::Severity::Warning, display_path(path), std::move(msg)});
    }

    bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
        if (!j.is_object()) {
            error(path, std::string("expected an object, found ") + type_name(j));
            return false;
        }
        for (const auto& [key, _] : j.items()) {
            bool known = false;
            for (auto a : allowed) known = known || a == key;
            if (!known) warn(child_path(path, key), "unknown key '" + key + "' ignored");
        }
        return true;
    }

    std::string req_string(const json& obj, std::string_view key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            error(path, "missing required field '" + std::string(key) + "'");
            return {};
        }
        if (!it->is_string()) {
            error(child_path(path, key), std::string("expected a string, found ") + type_name(*it));
            return {};
        }
        return it->get<std::string>();
    }

    std::string opt_string(const json& obj, std::string_view key, const std::string& path, std::string fallback) {
        auto v = nullable_string(obj, key, path);
        return v ? *v : std::move(fallback);
    }

    std::optional<std::string> nullable_string(const json& obj, std::string_view key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) {
            error(child_path(path, key), std::string("expected a string, found ") + type_name(*it));
            return std::nullopt;
        }
        return it->get<std::string>();
    }

    bool opt_bool(const json& obj, std::string_view key, const std::string& path, bool fallback) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return fallback;
        if (!it->is_boolean()) {
            error(child_path(path, key), std::string("expected a boolean, found ") + type_name(*it));
            return fallback;
        }
        return it->get<bool>();
    }

    std::optional<double> nullable_number(const json& obj, std::string_view key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        if (!it->is_number()) {
            error(child_path(path, key), std::string("expected a number, found ") + type_name(*it));
            return std::nullopt;
        }
        return it->get<double>();
    }

    double req_number(const json& obj, std::string_view key, const std::string& path) {
        if (!obj.contains(key)) {
            error(path, "missing required field '" + std::string(key) + "'");
            return 0;
        }
        return nullable_number(obj, key, path).value_or(0);
    }

    // Returns nullptr (after reporting) when absent or not an array.
    const json* req_array(const json& obj, std::string_view key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            error(path, "missing required field '" + std::string(key) + "'");
            return nullptr;
        }
        if (!it->is_array()) {
            error(child_path(path, key), std::string("expected an array, found ") + type_name(*it));
            return nullptr;
        }
        return &*it;
    }

    std::vector<std::string> string_list(const json& arr, const std::string& path) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_string()) {
                error(index_path(path, i), std::string("expected a string, found ") + type_name(arr[i]));
                continue;
            }
            out.push_back(arr[i].get<std::string>());
        }
        return out;
    }

    MediaRef media(const json& j, const std::string& path, bool allow_position) {
        MediaRef m;
        if (!j.is_object()) {
            error(path, std::string("expected an object, found ") + type_name(j));
            return m;
        }
        auto kind = req_string(j, "kind", path);
        if (kind == "image") {
            object(j, path, allow_position ? std::initializer_list<std::string_view>{"kind", "src", "alt", "label", "position"}
                                           : std::initializer_list<std::string_view>{"kind", "src", "alt", "label"});
            m.kind = MediaRef::Kind::Image;
            m.src = req_string(j, "src", path);
            m.alt = req_string(j, "alt", path);
        } else if (kind == "text") {
            object(j, path, allow_position ? std::initializer_list<std::string_view>{"kind", "value", "label", "position"}
                                           : std::initializer_list<std::string_view>{"kind", "value", "label"});
            m.kind = MediaRef::Kind::Text;
            m.value = req_string(j, "value", path);
        } else if (j.contains("kind") && j["kind"].is_string()) {
            error(child_path(path, "kind"), "unknown media kind '" + kind + "'");
        }
        m.label = nullable_string(j, "label", path);
        return m;
    }

    std::optional<MediaRef> nullable_media(const json& obj, std::string_view key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        return media(*it, child_path(path, key), false);
    }

    InstanceSpec instance(const json& j, const std::string& path) {
        InstanceSpec inst;
        if (!object(j, path, {"id", "instance", "prediction", "explanations", "expected", "prompt_override"})) return inst;
        inst.id = req_string(j, "id", path);
        inst.instance = nullable_media(j, "instance", path);
        if (auto it = j.find("prediction"); it != j.end() && !it->is_null()) {
            auto ppath = child_path(path, "prediction");
            PredictionRef pred;
            pred.media = media(*it, ppath, true);
            if (it->is_object()) {
                auto pos = opt_string(*it, "position", ppath, "top");
                if (auto p = prediction_position_from(pos)) {
                    pred.position = *p;
                } else {
                    error(child_path(ppath, "position"), "position must be \"top\" or \"below_instance\"");
                }
            }
            inst.prediction = std::move(pred);
        }
        if (auto it = j.find("explanations"); it != j.end() && !it->is_null()) {
            auto epath = child_path(path, "explanations");
            if (!it->is_array()) {
                error(epath, std::string("expected an array, found ") + type_name(*it));
            } else {
                for (std::size_t i = 0; i < it->size(); ++i) inst.explanations.push_back(media((*it)[i], index_path(epath, i), false));
            }
        }
        if (auto it = j.find("expected"); it != j.end() && !it->is_null()) {
            auto epath = child_path(path, "expected");
            if (!it->is_array()) {
                error(epath, std::string("expected an array, found ") + type_name(*it));
            } else {
                inst.expected = string_list(*it, epath);
            }
        }
        inst.prompt_override = nullable_string(j, "prompt_override", path);
        return inst;
    }

    TaskSpec task(const json& j, const std::string& path) {
        TaskSpec t;
        if (!object(j, path, {"kind", "id", "title", "decision", "randomize_instances", "instance_feedback",
                              "time_limit_s", "show_progress", "scoring", "instances"})) {
            return t;
        }
        t.id = req_string(j, "id", path);
        t.title = opt_string(j, "title", path, "");
        if (auto it = j.find("decision"); it == j.end()) {
            error(path, "missing required field 'decision'");
        } else {
            auto dpath = child_path(path, "decision");
            if (object(*it, dpath, {"prompt", "options", "exclusive"})) {
                t.decision.prompt = req_string(*it, "prompt", dpath);
                if (const json* opts = req_array(*it, "options", dpath)) {
                    t.decision.options = string_list(*opts, child_path(dpath, "options"));
                }
                t.decision.exclusive = opt_bool(*it, "exclusive", dpath, true);
            }
        }
        t.randomize_instances = opt_bool(j, "randomize_instances", path, false);
        auto policy = opt_string(j, "instance_feedback", path, "none");
        if (auto p = feedback_policy_from(policy)) {
            t.instance_feedback = *p;
        } else {
            error(child_path(path, "instance_feedback"),
                  "instance_feedback must be one of none, correctness_only, correctness_and_expected");
        }
        t.time_limit_s = nullable_number(j, "time_limit_s", path);
        t.show_progress = opt_bool(j, "show_progress", path, false);
        if (auto it = j.find("scoring"); it != j.end() && !it->is_null()) {
            auto spath = child_path(path, "scoring");
            if (object(*it, spath, {"points_per_correct", "template"})) {
                t.scoring.points_per_correct = nullable_number(*it, "points_per_correct", spath).value_or(1.0);
                t.scoring.template_text = opt_string(*it, "template", spath, kDefaultScoreTemplate);
            }
        }
        if (const json* arr = req_array(j, "instances", path)) {
            auto ipath = child_path(path, "instances");
            for (std::size_t i = 0; i < arr->size(); ++i) t.instances.push_back(instance((*arr)[i], index_path(ipath, i)));
        }
        return t;
    }

    InstructionView instruction(const json& j, const std::string& path) {
        InstructionView v;
        if (!object(j, path, {"kind", "id", "title", "body", "image", "ack_label"})) return v;
        v.id = req_string(j, "id", path);
        v.title = opt_string(j, "title", path, "");
        v.body = req_string(j, "body", path);
        v.image = nullable_media(j, "image", path);
        v.ack_label = opt_string(j, "ack_label", path, kDefaultAckLabel);
        return v;
    }

    QuestionSpec question(const json& j, const std::string& path) {
        QuestionSpec q;
        if (!j.is_object()) {
            error(path, std::string("expected an object, found ") + type_name(j));
            return q;
        }
        auto kind = req_string(j, "kind", path);
        if (kind == "choice") {
            object(j, path, {"id", "kind", "prompt", "required", "options", "exclusive"});
            ChoiceQuestion c;
            if (const json* opts = req_array(j, "options", path)) c.options = string_list(*opts, child_path(path, "options"));
            c.exclusive = opt_bool(j, "exclusive", path, true);
            q.body = std::move(c);
        } else if (kind == "text") {
            object(j, path, {"id", "kind", "prompt", "required", "max_len"});
            TextQuestion t;
            if (auto it = j.find("max_len"); it != j.end() && !it->is_null()) {
                if (it->is_number_integer()) {
                    t.max_len = it->get<std::int64_t>();
                } else {
                    error(child_path(path, "max_len"), "max_len must be an integer");
                }
            }
            q.body = t;
        } else if (kind == "slider") {
            object(j, path, {"id", "kind", "prompt", "required", "min", "max", "step", "min_label", "max_label"});
            SliderQuestion s;
            s.min = req_number(j, "min", path);
            s.max = req_number(j, "max", path);
            s.step = req_number(j, "step", path);
            s.min_label = opt_string(j, "min_label", path, "");
            s.max_label = opt_string(j, "max_label", path, "");
            q.body = std::move(s);
        } else if (j.contains("kind") && j["kind"].is_string()) {
            error(child_path(path, "kind"), "unknown question kind '" + kind + "'");
            return q;
        }
        q.id = req_string(j, "id", path);
        q.prompt = req_string(j, "prompt", path);
        q.required = opt_bool(j, "required", path, true);
        return q;
    }

    QuestionnaireView questionnaire(const json& j, const std::string& path) {
        QuestionnaireView v;
        if (!object(j, path, {"kind", "id", "title", "questions"})) return v;
        v.id = req_string(j, "id", path);
        v.title = opt_string(j, "title", path, "");
        if (const json* arr = req_array(j, "questions", path)) {
            auto qpath = child_path(path, "questions");
            for (std::size_t i = 0; i < arr->size(); ++i) v.questions.push_back(question((*arr)[i], index_path(qpath, i)));
        }
        return v;
    }

    ScoreFeedbackView score_feedback(const json& j, const std::string& path) {
        ScoreFeedbackView v;
        if (!object(j, path, {"kind", "id", "task_ref"})) return v;
        v.id = req_string(j, "id", path);
        v.task_ref = req_string(j, "task_ref", path);
        return v;
    }

    ExperimentSpec experiment(const json& j, const std::string& path) {
        ExperimentSpec e;
        if (!object(j, path, {"kind", "id", "title", "elements"})) return e;
        e.id = req_string(j, "id", path);
        e.title = opt_string(j, "title", path, "");
        if (const json* arr = req_array(j, "elements", path)) {
            auto epath = child_path(path, "elements");
            for (std::size_t i = 0; i < arr->size(); ++i) {
                auto p = index_path(epath, i);
                const json& child = (*arr)[i];
                auto kind = element_kind(child, p);
                if (kind == "instruction") e.elements.emplace_back(instruction(child, p));
                else if (kind == "questionnaire") e.elements.emplace_back(questionnaire(child, p));
                else if (kind == "task") e.elements.emplace_back(task(child, p));
                else if (kind == "score_feedback") e.elements.emplace_back(score_feedback(child, p));
                else if (kind == "experiment") error(child_path(p, "kind"), "experiments cannot be nested");
                else if (!kind.empty()) error(child_path(p, "kind"), "unknown kind '" + kind + "'");
            }
        }
        return e;
    }

    ProtocolSpec protocol(const json& j) {
        ProtocolSpec spec;
        const std::string root;
        if (!object(j, root, {"id", "title", "completion", "elements"})) return spec;
        spec.id = req_string(j, "id", root);
        spec.title = opt_string(j, "title", root, "");
        if (auto it = j.find("completion"); it == j.end()) {
            error(root, "missing required field 'completion'");
        } else if (object(*it, "/completion", {"message", "redirect_url"})) {
            spec.completion.message = req_string(*it, "message", "/completion");
            spec.completion.redirect_url = nullable_string(*it, "redirect_url", "/completion");
        }
        if (const json* arr = req_array(j, "elements", root)) {
            for (std::size_t i = 0; i < arr->size(); ++i) {
                auto p = index_path("/elements", i);
                const json& child = (*arr)[i];
                auto kind = element_kind(child, p);
                if (kind == "instruction") spec.elements.emplace_back(instruction(child, p));
                else if (kind == "questionnaire") spec.elements.emplace_back(questionnaire(child, p));
                else if (kind == "experiment") spec.elements.emplace_back(experiment(child, p));
                else if (kind == "task" || kind == "score_feedback") {
                    error(child_path(p, "kind"), "kind '" + kind + "' is only allowed inside an experiment");
                } else if (!kind.empty()) {
                    error(child_path(p, "kind"), "unknown kind '" + kind + "'");
                }
            }
        }
        return spec;
    }

private:
    std::string element_kind(const json& j, const std::string& path) {
        if (!j.is_object()) {
            error(path, std::string("expected an object, found ") + type_name(j));
            return {};
        }
        return req_string(j, "kind", path);
    }

    std::vector<Diagnostic> diags_;
};

}  // namespace

ParseResult parse_protocol(std::string_view text, const std::optional<std::filesystem::path>& asset_root) {
    ParseResult result;
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded()) {
        result.diagnostics.push_back({Diagnostic::Severity::Error, "/", "malformed JSON document"});
        return result;
    }
    Decoder decoder;
    ProtocolSpec spec = decoder.protocol(doc);
    bool decode_failed = decoder.failed();
    result.diagnostics = decoder.take();
    if (decode_failed) return result;

    auto problems = validate_protocol(spec, asset_root);
    result.diagnostics.insert(result.diagnostics.end(), problems.begin(), problems.end());
    if (!has_errors(result.diagnostics)) result.spec = std::move(spec);
    return result;
}

ParseResult load_protocol_file(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& asset_root) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ParseResult r;
        r.diagnostics.push_back({Diagnostic::Severity::Error, "/", "cannot read " + path.string()});
        return r;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_protocol(buf.str(), asset_root);
}

// ---------------------------------------------------------------------------
// Serialization. Key order follows the schema; see README "Protocol files".

namespace {

using ojson = nlohmann::ordered_json;

ojson media_json(const MediaRef& m) {
    ojson j;
    if (m.kind == MediaRef::Kind::Image) {
        j["kind"] = "image";
        j["src"] = m.src;
        j["alt"] = m.alt;
    } else {
        j["kind"] = "text";
        j["value"] = m.value;
    }
    if (m.label) j["label"] = *m.label;
    return j;
}

ojson optional_media_json(const std::optional<MediaRef>& m) {
    return m ? media_json(*m) : ojson(nullptr);
}

ojson optional_string_json(const std::optional<std::string>& s) {
    return s ? ojson(*s) : ojson(nullptr);
}

ojson instruction_json(const InstructionView& v) {
    ojson j;
    j["kind"] = "instruction";
    j["id"] = v.id;
    j["title"] = v.title;
    j["body"] = v.body;
    j["image"] = optional_media_json(v.image);
    j["ack_label"] = v.ack_label;
    return j;
}

ojson question_json(const QuestionSpec& q) {
    ojson j;
    j["id"] = q.id;
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, ChoiceQuestion>) {
                j["kind"] = "choice";
                j["prompt"] = q.prompt;
                j["required"] = q.required;
                j["options"] = body.options;
                j["exclusive"] = body.exclusive;
            } else if constexpr (std::is_same_v<T, TextQuestion>) {
                j["kind"] = "text";
                j["prompt"] = q.prompt;
                j["required"] = q.required;
                j["max_len"] = body.max_len;
            } else {
                j["kind"] = "slider";
                j["prompt"] = q.prompt;
                j["required"] = q.required;
                j["min"] = number_json(body.min);
                j["max"] = number_json(body.max);
                j["step"] = number_json(body.step);
                j["min_label"] = body.min_label;
                j["max_label"] = body.max_label;
            }
        },
        q.body);
    return j;
}

ojson questionnaire_json(const QuestionnaireView& v) {
    ojson j;
    j["kind"] = "questionnaire";
    j["id"] = v.id;
    j["title"] = v.title;
    j["questions"] = ojson::array();
    for (const auto& q : v.questions) j["questions"].push_back(question_json(q));
    return j;
}

ojson instance_json(const InstanceSpec& inst) {
    ojson j;
    j["id"] = inst.id;
    j["instance"] = optional_media_json(inst.instance);
    if (inst.prediction) {
        ojson p = media_json(inst.prediction->media);
        p["position"] = to_string(inst.prediction->position);
        j["prediction"] = std::move(p);
    } else {
        j["prediction"] = nullptr;
    }
    j["explanations"] = ojson::array();
    for (const auto& e : inst.explanations) j["explanations"].push_back(media_json(e));
    j["expected"] = inst.expected ? ojson(*inst.expected) : ojson(nullptr);
    j["prompt_override"] = optional_string_json(inst.prompt_override);
    return j;
}

ojson task_json(const TaskSpec& t) {
    ojson j;
    j["kind"] = "task";
    j["id"] = t.id;
    j["title"] = t.title;
    j["decision"]["prompt"] = t.decision.prompt;
    j["decision"]["options"] = t.decision.options;
    j["decision"]["exclusive"] = t.decision.exclusive;
    j["randomize_instances"] = t.randomize_instances;
    j["instance_feedback"] = to_string(t.instance_feedback);
    j["time_limit_s"] = t.time_limit_s ? number_json(*t.time_limit_s) : ojson(nullptr);
    j["show_progress"] = t.show_progress;
    j["scoring"]["points_per_correct"] = number_json(t.scoring.points_per_correct);
    j["scoring"]["template"] = t.scoring.template_text;
    j["instances"] = ojson::array();
    for (const auto& inst : t.instances) j["instances"].push_back(instance_json(inst));
    return j;
}

ojson experiment_json(const ExperimentSpec& e) {
    ojson j;
    j["kind"] = "experiment";
    j["id"] = e.id;
    j["title"] = e.title;
    j["elements"] = ojson::array();
    for (const auto& child : e.elements) {
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, InstructionView>) j["elements"].push_back(instruction_json(el));
                else if constexpr (std::is_same_v<T, QuestionnaireView>) j["elements"].push_back(questionnaire_json(el));
                else if constexpr (std::is_same_v<T, TaskSpec>) j["elements"].push_back(task_json(el));
                else {
                    ojson s;
                    s["kind"] = "score_feedback";
                    s["id"] = el.id;
                    s["task_ref"] = el.task_ref;
                    j["elements"].push_back(std::move(s));
                }
            },
            child);
    }
    return j;
}

}  // namespace

nlohmann::ordered_json protocol_to_json(const ProtocolSpec& spec) {
    ojson j;
    j["id"] = spec.id;
    j["title"] = spec.title;
    j["completion"]["message"] = spec.completion.message;
    j["completion"]["redirect_url"] = optional_string_json(spec.completion.redirect_url);
    j["elements"] = ojson::array();
    for (const auto& el : spec.elements) {
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, InstructionView>) j["elements"].push_back(instruction_json(e));
                else if constexpr (std::is_same_v<T, QuestionnaireView>) j["elements"].push_back(questionnaire_json(e));
                else j["elements"].push_back(experiment_json(e));
            },
            el);
    }
    return j;
}

std::string serialize_protocol(const ProtocolSpec& spec) {
    return protocol_to_json(spec).dump(2) + "\n";
}

nlohmann::ordered_json media_to_json(const MediaRef& m) { return media_json(m); }
nlohmann::ordered_json question_to_json(const QuestionSpec& q) { return question_json(q); }

}  // namespace webxaii
