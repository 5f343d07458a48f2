#include "binoracle/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace binoracle {

Sha256Digest sha256(const uint8_t* data, size_t len) {
    Sha256Digest out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != out.size()) {
        throw std::runtime_error("sha256: digest computation failed");
    }
    return out;
}

Sha256Digest sha256(const std::vector<uint8_t>& data) {
    return sha256(data.data(), data.size());
}

Sha256Digest sha256(const std::string& data) {
    return sha256(reinterpret_cast<const uint8_t*>(data.data()), data.size());
}

std::string to_hex(const Sha256Digest& digest) {
    static const char* hexdigits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (uint8_t b : digest) {
        out.push_back(hexdigits[b >> 4]);
        out.push_back(hexdigits[b & 0xF]);
    }
    return out;
}

} // namespace binoracle
