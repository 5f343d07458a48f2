#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace binoracle {

using Sha256Digest = std::array<uint8_t, 32>;

Sha256Digest sha256(const uint8_t* data, size_t len);
Sha256Digest sha256(const std::vector<uint8_t>& data);
Sha256Digest sha256(const std::string& data);

std::string to_hex(const Sha256Digest& digest);

} // namespace binoracle
