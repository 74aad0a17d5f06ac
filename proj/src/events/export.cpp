#include "webxaii/events/export.hpp"

namespace webxaii {

namespace {

const char* view_kind_of(EventKind kind) {
    switch (kind) {
        case EventKind::InstructionAck: return "instruction";
        case EventKind::QuestionnaireResponse: return "questionnaire";
        case EventKind::Decision:
        case EventKind::Timeout: return "instance_decision";
        default: return "";
    }
}

std::optional<bool> correctness(const Event& e) {
    if (e.kind != EventKind::Decision) return std::nullopt;
    auto it = e.payload.find("correct");
    if (it == e.payload.end() || !it->is_boolean()) return std::nullopt;
    return it->get<bool>();
}

}  // namespace

std::optional<ExportFormat> export_format_from(std::string_view s) {
    if (s == "csv") return ExportFormat::Csv;
    if (s == "json") return ExportFormat::Json;
    return std::nullopt;
}

bool is_result_event(EventKind kind) {
    return kind == EventKind::InstructionAck || kind == EventKind::QuestionnaireResponse ||
           kind == EventKind::Decision || kind == EventKind::Timeout;
}

std::string csv_field(std::string_view value, bool force) {
    bool quote = force || value.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!quote) return std::string(value);
    std::string out;
    out.reserve(value.size() + 2);
    out.push_back('"');
    for (char c : value) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

ExportDocument export_csv(const std::vector<Event>& events) {
    ExportDocument doc;
    doc.body = kExportCsvHeader;
    doc.body += "\r\n";
    for (const auto& e : events) {
        if (!is_result_event(e.kind)) continue;
        const auto& r = e.refs;
        auto correct = correctness(e);
        std::string row;
        row += csv_field(e.session_id) + ',';
        row += csv_field(e.user_login) + ',';
        row += csv_field(e.protocol_id) + ',';
        row += csv_field(r.experiment_id.value_or("")) + ',';
        row += csv_field(r.task_id.value_or("")) + ',';
        row += csv_field(r.view_id.value_or("")) + ',';
        row += csv_field(r.instance_id.value_or("")) + ',';
        row += std::string(view_kind_of(e.kind)) + ',';
        row += std::string(to_string(e.kind)) + ',';
        row += (r.presented_order_index ? std::to_string(*r.presented_order_index) : std::string()) + ',';
        row += csv_field(e.payload.dump(), true) + ',';
        row += (correct ? (*correct ? "true" : "false") : "") + std::string(",");
        row += to_iso8601(e.server_ts) + ',';
        row += e.client_elapsed_ms ? std::to_string(*e.client_elapsed_ms) : std::string();
        doc.body += row;
        doc.body += "\r\n";
        ++doc.rows;
    }
    return doc;
}

ExportDocument export_json(const std::vector<Event>& events) {
    using ojson = nlohmann::ordered_json;
    ExportDocument doc;
    ojson arr = ojson::array();
    auto opt = [](const std::optional<std::string>& s) { return s ? ojson(*s) : ojson(nullptr); };
    for (const auto& e : events) {
        if (!is_result_event(e.kind)) continue;
        ojson rec;
        rec["session_id"] = e.session_id;
        rec["user"] = e.user_login;
        rec["protocol"] = e.protocol_id;
        rec["experiment_id"] = opt(e.refs.experiment_id);
        rec["task_id"] = opt(e.refs.task_id);
        rec["view_id"] = opt(e.refs.view_id);
        rec["instance_id"] = opt(e.refs.instance_id);
        rec["view_kind"] = view_kind_of(e.kind);
        rec["event_kind"] = to_string(e.kind);
        rec["presented_order_index"] =
            e.refs.presented_order_index ? ojson(*e.refs.presented_order_index) : ojson(nullptr);
        rec["payload"] = e.payload;
        auto correct = correctness(e);
        rec["correct"] = correct ? ojson(*correct) : ojson(nullptr);
        rec["server_ts"] = to_iso8601(e.server_ts);
        rec["client_elapsed_ms"] = e.client_elapsed_ms ? ojson(*e.client_elapsed_ms) : ojson(nullptr);
        arr.push_back(std::move(rec));
        ++doc.rows;
    }
    doc.body = arr.dump(2) + "\n";
    return doc;
}

ExportDocument export_results(const EventStore& store, const ProtocolCatalog& catalog, std::string_view protocol_id,
                              ExportFormat format) {
    if (!catalog.contains(protocol_id)) throw UnknownProtocolError(std::string(protocol_id));
    EventFilter filter;
    filter.protocol_id = std::string(protocol_id);
    auto events = store.list(filter);
    return format == ExportFormat::Csv ? export_csv(events) : export_json(events);
}

}  // namespace webxaii
