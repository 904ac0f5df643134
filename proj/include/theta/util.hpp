#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "theta/tensor.hpp"

namespace theta {

std::string to_hex(std::span<const std::byte> bytes);
std::optional<Blob> from_hex(std::string_view hex);

Blob read_file(const std::filesystem::path& p);
std::optional<Blob> read_file_if_exists(const std::filesystem::path& p);
// Write-to-temp then rename, so concurrent readers never see a partial file.
void write_file_atomic(const std::filesystem::path& p, std::span<const std::byte> bytes);
void write_file_atomic(const std::filesystem::path& p, std::string_view text);

std::optional<std::string> env_var(const char* name);

// Nonempty lines of `text`, in order, without terminators.
std::vector<std::string> split_lines(std::string_view text);

Blob to_blob(std::string_view s);
std::string_view as_string_view(std::span<const std::byte> b);

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// exception after all workers have stopped.
void parallel_for(uint64_t n, unsigned workers, const std::function<void(uint64_t)>& fn);

}  // namespace theta
