#pragma once

#include "webxaii/config/catalog.hpp"
#include "webxaii/events/event_store.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webxaii {

enum class ExportFormat { Csv, Json };

std::optional<ExportFormat> export_format_from(std::string_view s);

inline constexpr const char* kExportCsvHeader =
    "session_id,user,protocol,experiment_id,task_id,view_id,instance_id,view_kind,event_kind,"
    "presented_order_index,payload,correct,server_ts,client_elapsed_ms";

class UnknownProtocolError : public std::runtime_error {
public:
    explicit UnknownProtocolError(const std::string& id) : std::runtime_error("unknown protocol '" + id + "'") {}
};

struct ExportDocument {
    std::string body;
    std::size_t rows = 0;
};

/// True for the kinds that become export rows: instruction_ack,
/// questionnaire_response, decision and timeout.
bool is_result_event(EventKind kind);

/// One field per RFC 4180: quoted (with doubled quotes) when it holds a comma,
/// quote, CR or LF; `force` quotes unconditionally.
std::string csv_field(std::string_view value, bool force = false);

/// CSV uses CRLF line endings; the payload column is always quoted JSON.
ExportDocument export_csv(const std::vector<Event>& events);
/// Array of objects carrying the CSV columns; payload stays structured JSON.
ExportDocument export_json(const std::vector<Event>& events);

/// Result rows for `protocol_id`, ordered by (session_id, seq).
ExportDocument export_results(const EventStore& store, const ProtocolCatalog& catalog, std::string_view protocol_id,
                              ExportFormat format);

}  // namespace webxaii
