#pragma once

#include "webxaii/sim/driver.hpp"

#include <memory>
#include <string>

namespace webxaii {

/// ParticipantTransport over the live HTTP API. wait() sleeps for real.
class HttpParticipantClient : public ParticipantTransport {
public:
    HttpParticipantClient(const std::string& host, int port);
    ~HttpParticipantClient() override;

    nlohmann::ordered_json login(const std::string& login, const std::string& access_code) override;
    nlohmann::ordered_json view() override;
    nlohmann::ordered_json submit(const nlohmann::json& body) override;
    nlohmann::ordered_json timeout(const std::string& view_id) override;
    void wait(Millis d) override;

    /// HTTP status of the last response, 0 when the request failed.
    int last_status() const { return last_status_; }

private:
    nlohmann::ordered_json post(const std::string& path, const std::string& body);

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string token_;
    int last_status_ = 0;
};

}  // namespace webxaii
