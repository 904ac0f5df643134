#include "theta/util.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "theta/error.hpp"

namespace theta {

namespace fs = std::filesystem;

std::string to_hex(std::span<const std::byte> bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::byte b : bytes) {
        uint8_t v = static_cast<uint8_t>(b);
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xf]);
    }
    return out;
}

std::optional<Blob> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Blob out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<std::byte>((hi << 4) | lo);
    }
    return out;
}

Blob read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) raise(Errc::storage_failure, "cannot open " + p.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) raise(Errc::storage_failure, "read failed for " + p.string());
    return to_blob(text);
}

std::optional<Blob> read_file_if_exists(const fs::path& p) {
    std::error_code ec;
    if (!fs::exists(p, ec) || ec) return std::nullopt;
    return read_file(p);
}

void write_file_atomic(const fs::path& p, std::span<const std::byte> bytes) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    static std::atomic<uint64_t> counter{0};
    fs::path tmp = p;
    tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::storage_failure, "cannot create " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) raise(Errc::storage_failure, "write failed for " + tmp.string());
    }
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp, ec);
        raise(Errc::storage_failure, "rename to " + p.string() + " failed");
    }
}

void write_file_atomic(const fs::path& p, std::string_view text) {
    write_file_atomic(p, std::as_bytes(std::span(text.data(), text.size())));
}

std::optional<std::string> env_var(const char* name) {
    const char* v = std::getenv(name);
    if (!v) return std::nullopt;
    return std::string(v);
}

Blob to_blob(std::string_view s) {
    const std::byte* p = reinterpret_cast<const std::byte*>(s.data());
    return Blob(p, p + s.size());
}

std::string_view as_string_view(std::span<const std::byte> b) {
    return std::string_view(reinterpret_cast<const char*>(b.data()), b.size());
}

void parallel_for(uint64_t n, unsigned workers, const std::function<void(uint64_t)>& fn) {
    if (n == 0) return;
    unsigned k = workers;
    if (k == 0) k = 1;
    if (k > n) k = static_cast<unsigned>(n);
    if (k == 1) {
        for (uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<uint64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (unsigned w = 0; w < k; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                uint64_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    next.store(n);  // stop handing out work
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string line;
    for (char c : text) {
        if (c == '\n') {
            if (!line.empty()) lines.push_back(std::move(line));
            line.clear();
        } else {
            line += c;
        }
    }
    if (!line.empty()) lines.push_back(std::move(line));
    return lines;
}

}  // namespace theta
