#include "webxaii/http/client.hpp"

#include <httplib.h>

#include <thread>

namespace webxaii {

using ojson = nlohmann::ordered_json;

struct HttpParticipantClient::Impl {
    Impl(const std::string& host, int port) : client(host, port) {}
    httplib::Client client;
};

namespace {

ojson transport_error(const httplib::Error& err) {
    ojson j;
    j["error"]["code"] = "transport";
    j["error"]["message"] = httplib::to_string(err);
    return j;
}

ojson parse_reply(const httplib::Result& r, int& status) {
    if (!r) {
        status = 0;
        return transport_error(r.error());
    }
    status = r->status;
    auto j = ojson::parse(r->body, nullptr, false);
    if (j.is_discarded()) {
        ojson e;
        e["error"]["code"] = "transport";
        e["error"]["message"] = "response is not JSON";
        return e;
    }
    return j;
}

}  // namespace

HttpParticipantClient::HttpParticipantClient(const std::string& host, int port)
    : impl_(std::make_unique<Impl>(host, port)) {}

HttpParticipantClient::~HttpParticipantClient() = default;

ojson HttpParticipantClient::post(const std::string& path, const std::string& body) {
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    return parse_reply(impl_->client.Post(path, headers, body, "application/json"), last_status_);
}

ojson HttpParticipantClient::login(const std::string& login, const std::string& access_code) {
    nlohmann::json body{{"login", login}, {"access_code", access_code}};
    auto j = post("/api/login", body.dump());
    if (last_status_ == 200 && j.contains("token")) token_ = j["token"].get<std::string>();
    return j;
}

ojson HttpParticipantClient::view() {
    httplib::Headers headers{{"Authorization", "Bearer " + token_}};
    return parse_reply(impl_->client.Get("/api/session/view", headers), last_status_);
}

ojson HttpParticipantClient::submit(const nlohmann::json& body) { return post("/api/session/submit", body.dump()); }

ojson HttpParticipantClient::timeout(const std::string& view_id) {
    return post("/api/session/timeout", nlohmann::json{{"view_id", view_id}}.dump());
}

void HttpParticipantClient::wait(Millis d) { std::this_thread::sleep_for(d); }

}  // namespace webxaii
