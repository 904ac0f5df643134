#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "theta/tensor.hpp"

namespace theta {

struct GroupMetadata;

// Protocol constants for the pooled Euclidean LSH. Signatures must be
// comparable across machines and runs, so everything here is fixed and any
// change requires a metadata format_version bump:
//   - kLshSeed seeds the generator that fills the projection pool and the
//     per-hash offsets (offsets are drawn from the stream after the pool).
//   - Pool entries are standard-normal variates built from a 12-term
//     central-limit sum of uniforms: only IEEE-754 additions, so the pool is
//     bit-identical on every conforming platform.
//   - kLshBucketWidth is 2^-15, calibrated by Monte-Carlo so that two
//     tensors at Euclidean distance 1e-8 land in the same 16 buckets with
//     probability >= 0.99 (see docs and the calibration test).
inline constexpr uint64_t kLshSeed = 0x7468657461ULL;  // "theta"
inline constexpr uint32_t kLshPoolSize = 16384;        // power of two
inline constexpr int kLshNumHashes = 16;
inline constexpr double kLshBucketWidth = 0x1p-15;

struct LshConfig {
    int num_hashes = kLshNumHashes;
    double bucket_width = kLshBucketWidth;
    uint32_t pool_size = kLshPoolSize;  // >= 1024, power of two
    uint64_t seed = kLshSeed;
};

// The change-detection fingerprint: one signed bucket index per hash
// function. Equal only when all buckets are equal.
struct LshSignature {
    std::array<int64_t, kLshNumHashes> buckets{};

    bool operator==(const LshSignature&) const = default;

    // 16 big-endian signed 64-bit values, 256 lowercase hex chars.
    std::string to_hex() const;
    static std::optional<LshSignature> from_hex(std::string_view hex);
};

// Bucketed projection of the tensor (promoted to f64) onto pooled random
// lines: bucket_j = floor((sum_i pool[mix(i,j)] * x_i + b_j) / r).
LshSignature lsh_signature(const Tensor& t, const LshConfig& cfg = {});

// Exact-closeness safety check thresholds. Distances are absolute Euclidean
// distances on flattened f64-promoted tensors.
struct CloseBand {
    double d1 = 1e-8;
    double d2 = 1e-6;
    double p1 = 0.99;
    double atol = 1e-8;
    double rtol = 1e-5;
};

// Elementwise |a - b| <= atol + rtol * |b| over f64 promotions.
bool allclose(const Tensor& a, const Tensor& b, double atol, double rtol);

enum class Change { unchanged, changed };

// Shape/dtype mismatch or signature mismatch reports changed immediately.
// On a signature match the previous tensor is loaded and the elementwise
// closeness check decides; unchanged is never returned without it.
Change lsh_compare(const GroupMetadata& prev, const Tensor& next,
                   const std::function<Tensor()>& prev_loader, const CloseBand& band = {});

}  // namespace theta
