#pragma once

#include <string>
#include <string_view>

namespace webxaii {

/// Argon2id cost. Interactive follows common password-storage guidance
/// (t=2, m=19 MiB); Minimal is for synthetic users in simulations and tests.
enum class HashCost { Interactive, Minimal };

/// Salted Argon2id hash in libsodium's self-describing string format.
std::string hash_access_code(std::string_view code, HashCost cost = HashCost::Interactive);

/// Constant-time verification; false for malformed hashes.
bool verify_access_code(const std::string& hash, std::string_view code);

/// Burns the same work as a real verification. Used for unknown logins so the
/// response time does not reveal whether a login exists.
void verify_against_dummy(std::string_view code, HashCost cost);

/// 32 bytes from the OS CSPRNG, base64url without padding (43 characters).
std::string random_token();

/// Constant-time equality for secrets of possibly different length.
bool constant_time_equals(std::string_view a, std::string_view b);

}  // namespace webxaii
