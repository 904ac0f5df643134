#include "theta/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "theta/util.hpp"

namespace theta {

std::array<std::byte, 32> sha256(std::span<const std::byte> data) {
    std::array<std::byte, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), reinterpret_cast<unsigned char*>(out.data()), &len,
                   EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    return out;
}

std::string sha256_hex(std::span<const std::byte> data) {
    auto d = sha256(data);
    return to_hex(d);
}

}  // namespace theta
