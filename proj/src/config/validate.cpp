#include "webxaii/config/protocol_io.hpp"

#include "webxaii/json_util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace webxaii {

bool is_safe_relative_path(std::string_view path) {
    if (path.empty() || path.front() == '/' || path.find('\\') != std::string_view::npos ||
        path.find(':') != std::string_view::npos) {
        return false;
    }
    std::size_t start = 0;
    while (start <= path.size()) {
        auto end = path.find('/', start);
        if (end == std::string_view::npos) end = path.size();
        auto segment = path.substr(start, end - start);
        if (segment == ".." || segment.empty()) return false;
        start = end + 1;
    }
    return true;
}

std::optional<std::string> check_rich_text(std::string_view body) {
    for (std::size_t i = 0; i + 1 < body.size(); ++i) {
        if (body[i] != '<') continue;
        char next = body[i + 1];
        if (std::isalpha(static_cast<unsigned char>(next)) || next == '/' || next == '!' || next == '?') {
            return "raw HTML is not allowed; use paragraphs, *emphasis*, **strong**, \"- \" lists and line breaks";
        }
    }
    return std::nullopt;
}

namespace {

class Validator {
public:
    explicit Validator(const std::optional<std::filesystem::path>& asset_root) : asset_root_(asset_root) {}

    std::vector<Diagnostic> run(const ProtocolSpec& spec) {
        const std::string root;
        claim_id(spec.id, root);
        if (spec.elements.empty()) error(child_path(root, "elements"), "must be non-empty");
        if (spec.completion.redirect_url) {
            const auto& url = *spec.completion.redirect_url;
            if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
                warn("/completion/redirect_url", "redirect_url is not an http(s) URL");
            }
        }
        for (std::size_t i = 0; i < spec.elements.size(); ++i) {
            auto path = index_path("/elements", i);
            std::visit(
                [&](const auto& el) {
                    using T = std::decay_t<decltype(el)>;
                    if constexpr (std::is_same_v<T, InstructionView>) instruction(el, path);
                    else if constexpr (std::is_same_v<T, QuestionnaireView>) questionnaire(el, path);
                    else experiment(el, path);
                },
                spec.elements[i]);
        }
        return std::move(diags_);
    }

private:
    void error(std::string path, std::string msg) {
        diags_.push_back({Diagnostic::Severity::Error, display_path(path), std::move(msg)});
    }
    void warn(std::string path, std::string msg) {
        diags_.push_back({Diagnostic::Severity::Warning, display_path(path), std::move(msg)});
    }

    void claim_id(const std::string& id, const std::string& node_path) {
        if (id.empty()) {
            error(child_path(node_path, "id"), "id must be non-empty");
            return;
        }
        auto [it, inserted] = ids_.emplace(id, display_path(node_path));
        if (!inserted) {
            error(display_path(node_path), "duplicate id '" + id + "' (also used at " + it->second + ")");
        }
    }

    void media(const MediaRef& m, const std::string& path) {
        if (m.kind != MediaRef::Kind::Image) return;
        if (!is_safe_relative_path(m.src)) {
            error(child_path(path, "src"), "image src must be a relative path without '..' segments");
            return;
        }
        if (m.alt.empty()) warn(child_path(path, "alt"), "image has no alt text");
        if (asset_root_) {
            std::error_code ec;
            if (!std::filesystem::is_regular_file(*asset_root_ / m.src, ec)) {
                warn(child_path(path, "src"), "asset not found: " + m.src);
            }
        }
    }

    void unique_labels(const std::vector<std::string>& options, const std::string& path, const char* what) {
        if (options.size() < 2) error(path, std::string(what) + " needs at least 2 options");
        std::set<std::string_view> seen;
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (!seen.insert(options[i]).second) {
                error(index_path(path, i), "duplicate option label '" + options[i] + "'");
            }
        }
    }

    void instruction(const InstructionView& v, const std::string& path) {
        claim_id(v.id, path);
        if (v.body.empty()) {
            error(child_path(path, "body"), "body must be non-empty");
        } else if (auto problem = check_rich_text(v.body)) {
            error(child_path(path, "body"), *problem);
        }
        if (v.ack_label.empty()) error(child_path(path, "ack_label"), "ack_label must be non-empty");
        if (v.image) media(*v.image, child_path(path, "image"));
    }

    void questionnaire(const QuestionnaireView& v, const std::string& path) {
        claim_id(v.id, path);
        auto qpath = child_path(path, "questions");
        if (v.questions.empty()) error(qpath, "must be non-empty");
        for (std::size_t i = 0; i < v.questions.size(); ++i) question(v.questions[i], index_path(qpath, i));
    }

    void question(const QuestionSpec& q, const std::string& path) {
        claim_id(q.id, path);
        if (const auto* c = std::get_if<ChoiceQuestion>(&q.body)) {
            unique_labels(c->options, child_path(path, "options"), "a choice question");
        } else if (const auto* t = std::get_if<TextQuestion>(&q.body)) {
            if (t->max_len <= 0) error(child_path(path, "max_len"), "max_len must be a positive integer");
        } else if (const auto* s = std::get_if<SliderQuestion>(&q.body)) {
            if (!std::isfinite(s->min) || !std::isfinite(s->max) || !(s->min < s->max)) {
                error(child_path(path, "max"), "slider requires min < max");
            } else if (!std::isfinite(s->step) || !(s->step > 0)) {
                error(child_path(path, "step"), "slider step must be positive");
            } else {
                double steps = (s->max - s->min) / s->step;
                if (std::fabs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
                    error(child_path(path, "step"), "slider range (max - min) must be a multiple of step");
                }
            }
        }
    }

    void experiment(const ExperimentSpec& e, const std::string& path) {
        claim_id(e.id, path);
        auto epath = child_path(path, "elements");
        if (e.elements.empty()) error(epath, "must be non-empty");

        std::set<std::string> tasks_so_far;
        std::set<std::string> all_tasks;
        for (const auto& child : e.elements) {
            if (const auto* t = std::get_if<TaskSpec>(&child)) all_tasks.insert(t->id);
        }
        for (std::size_t i = 0; i < e.elements.size(); ++i) {
            auto cpath = index_path(epath, i);
            std::visit(
                [&](const auto& el) {
                    using T = std::decay_t<decltype(el)>;
                    if constexpr (std::is_same_v<T, InstructionView>) {
                        instruction(el, cpath);
                    } else if constexpr (std::is_same_v<T, QuestionnaireView>) {
                        questionnaire(el, cpath);
                    } else if constexpr (std::is_same_v<T, TaskSpec>) {
                        task(el, cpath);
                        tasks_so_far.insert(el.id);
                    } else {
                        claim_id(el.id, cpath);
                        if (!tasks_so_far.count(el.task_ref)) {
                            if (all_tasks.count(el.task_ref)) {
                                error(child_path(cpath, "task_ref"),
                                      "references a task not yet completed at this position");
                            } else {
                                error(child_path(cpath, "task_ref"),
                                      "task_ref '" + el.task_ref + "' does not name a task in this experiment");
                            }
                        }
                    }
                },
                e.elements[i]);
        }
    }

    void task(const TaskSpec& t, const std::string& path) {
        claim_id(t.id, path);
        unique_labels(t.decision.options, child_path(child_path(path, "decision"), "options"), "a decision");
        if (t.time_limit_s && !(std::isfinite(*t.time_limit_s) && *t.time_limit_s > 0)) {
            error(child_path(path, "time_limit_s"), "time_limit_s must be strictly positive");
        }
        const auto& sc = t.scoring;
        if (!std::isfinite(sc.points_per_correct) || sc.points_per_correct < 0) {
            error(child_path(child_path(path, "scoring"), "points_per_correct"),
                  "points_per_correct must be a non-negative number");
        }
        if (sc.template_text.find("{score}") == std::string::npos) {
            warn(child_path(child_path(path, "scoring"), "template"), "template has no {score} placeholder");
        }

        auto ipath = child_path(path, "instances");
        if (t.instances.empty()) error(ipath, "must be non-empty");
        std::set<std::string_view> options(t.decision.options.begin(), t.decision.options.end());
        for (std::size_t i = 0; i < t.instances.size(); ++i) {
            const auto& inst = t.instances[i];
            auto p = index_path(ipath, i);
            claim_id(inst.id, p);
            if (inst.instance) media(*inst.instance, child_path(p, "instance"));
            if (inst.prediction) media(inst.prediction->media, child_path(p, "prediction"));
            for (std::size_t k = 0; k < inst.explanations.size(); ++k) {
                media(inst.explanations[k], index_path(child_path(p, "explanations"), k));
            }
            if (!inst.expected) continue;
            auto xpath = child_path(p, "expected");
            std::set<std::string_view> seen;
            for (std::size_t k = 0; k < inst.expected->size(); ++k) {
                const auto& label = (*inst.expected)[k];
                if (!options.count(label)) {
                    error(index_path(xpath, k), "expected label not among options: '" + label + "'");
                } else if (!seen.insert(label).second) {
                    error(index_path(xpath, k), "duplicate expected label '" + label + "'");
                }
            }
            if (t.decision.exclusive && inst.expected->size() != 1) {
                error(xpath, "an exclusive decision needs exactly one expected label");
            }
        }
    }

    const std::optional<std::filesystem::path>& asset_root_;
    std::map<std::string, std::string> ids_;
    std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> validate_protocol(const ProtocolSpec& spec,
                                          const std::optional<std::filesystem::path>& asset_root) {
    return Validator(asset_root).run(spec);
}

}  // namespace webxaii
