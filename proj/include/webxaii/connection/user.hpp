#pragma once

#include "webxaii/time.hpp"

#include <string>

namespace webxaii {

/// A provisioned participant. The access code is only ever held as a hash.
struct UserRecord {
    std::string login;
    std::string access_code_hash;
    std::string protocol_id;
    Timestamp created_at{};

    bool operator==(const UserRecord&) const = default;
};

}  // namespace webxaii
