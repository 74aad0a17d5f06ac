#include "webxaii/connection/credentials.hpp"

#include <sodium.h>

#include <array>
#include <stdexcept>

namespace webxaii {

namespace {

void ensure_sodium() {
    static const bool ready = [] { return sodium_init() >= 0; }();
    if (!ready) throw std::runtime_error("libsodium initialization failed");
}

struct Limits {
    unsigned long long ops;
    std::size_t mem;
};

Limits limits(HashCost cost) {
    if (cost == HashCost::Minimal) return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
    return {2, std::size_t{19} << 20};
}

}  // namespace

std::string hash_access_code(std::string_view code, HashCost cost) {
    ensure_sodium();
    auto [ops, mem] = limits(cost);
    std::array<char, crypto_pwhash_STRBYTES> out{};
    if (crypto_pwhash_str_alg(out.data(), code.data(), code.size(), ops, mem, crypto_pwhash_ALG_ARGON2ID13) != 0) {
        throw std::runtime_error("access code hashing failed (out of memory)");
    }
    return std::string(out.data());
}

bool verify_access_code(const std::string& hash, std::string_view code) {
    ensure_sodium();
    if (hash.empty() || hash.size() >= crypto_pwhash_STRBYTES) return false;
    return crypto_pwhash_str_verify(hash.c_str(), code.data(), code.size()) == 0;
}

void verify_against_dummy(std::string_view code, HashCost cost) {
    static const std::string interactive = hash_access_code("dummy-access-code", HashCost::Interactive);
    static const std::string minimal = hash_access_code("dummy-access-code", HashCost::Minimal);
    (void)verify_access_code(cost == HashCost::Minimal ? minimal : interactive, code);
}

std::string random_token() {
    ensure_sodium();
    std::array<unsigned char, 32> bytes{};
    randombytes_buf(bytes.data(), bytes.size());
    std::array<char, sodium_base64_ENCODED_LEN(32, sodium_base64_VARIANT_URLSAFE_NO_PADDING)> out{};
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_URLSAFE_NO_PADDING);
    return std::string(out.data());
}

bool constant_time_equals(std::string_view a, std::string_view b) {
    ensure_sodium();
    // Compare fixed-size digests so the length of the secret does not leak.
    std::array<unsigned char, crypto_generichash_BYTES> da{}, db{};
    crypto_generichash(da.data(), da.size(), reinterpret_cast<const unsigned char*>(a.data()), a.size(), nullptr, 0);
    crypto_generichash(db.data(), db.size(), reinterpret_cast<const unsigned char*>(b.data()), b.size(), nullptr, 0);
    return sodium_memcmp(da.data(), db.data(), da.size()) == 0;
}

}  // namespace webxaii
