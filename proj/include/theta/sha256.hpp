#pragma once

#include <array>
#include <span>
#include <string>

namespace theta {

std::array<std::byte, 32> sha256(std::span<const std::byte> data);
std::string sha256_hex(std::span<const std::byte> data);

}  // namespace theta
