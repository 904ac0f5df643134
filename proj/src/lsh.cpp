#include "theta/lsh.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "theta/error.hpp"
#include "theta/metadata.hpp"

namespace theta {

namespace {

// splitmix64: the stream generator behind the pool and the offsets.
struct SplitMix64 {
    uint64_t state;

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Standard-normal variate: sum of 12 uniforms minus 6 (mean 0, var 1).
    // Uses additions only, so the value is bit-identical everywhere.
    double normal() {
        double s = 0.0;
        for (int k = 0; k < 12; ++k) s += uniform01();
        return s - 6.0;
    }
};

uint64_t mix_fin(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct PoolTables {
    std::vector<double> pool;
    std::array<double, kLshNumHashes> offsets;
};

const PoolTables& tables_for(const LshConfig& cfg) {
    static std::mutex mu;
    static std::unordered_map<uint64_t, PoolTables> cache;
    if (cfg.pool_size < 1024 || (cfg.pool_size & (cfg.pool_size - 1)) != 0)
        raise(Errc::invalid_argument, "pool_size must be a power of two >= 1024");
    if (!(cfg.bucket_width > 0))
        raise(Errc::invalid_argument, "bucket_width must be positive");
    uint64_t key = cfg.seed ^ (static_cast<uint64_t>(cfg.pool_size) << 1) ^
                   std::bit_cast<uint64_t>(cfg.bucket_width);
    std::lock_guard lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    PoolTables t;
    SplitMix64 rng{cfg.seed};
    t.pool.resize(cfg.pool_size);
    for (auto& v : t.pool) v = rng.normal();
    for (auto& b : t.offsets) b = rng.uniform01() * cfg.bucket_width;
    return cache.emplace(key, std::move(t)).first->second;
}

int64_t floor_bucket(double v) {
    if (std::isnan(v)) return std::numeric_limits<int64_t>::min();
    double f = std::floor(v);
    if (f >= 0x1p62) return std::numeric_limits<int64_t>::max();
    if (f <= -0x1p62) return std::numeric_limits<int64_t>::min();
    return static_cast<int64_t>(f);
}

}  // namespace

LshSignature lsh_signature(const Tensor& t, const LshConfig& cfg) {
    const PoolTables& tab = tables_for(cfg);
    const uint64_t mask = cfg.pool_size - 1;
    std::array<double, kLshNumHashes> acc{};
    const uint64_t n = t.numel();
    for (uint64_t i = 0; i < n; ++i) {
        double x = t.f64_at(i);
        uint64_t base = i * 0x9e3779b97f4a7c15ULL + cfg.seed;
        for (int j = 0; j < kLshNumHashes; ++j) {
            uint64_t slot = mix_fin(base + static_cast<uint64_t>(j) * 0xc2b2ae3d27d4eb4fULL) & mask;
            acc[j] += tab.pool[slot] * x;
        }
    }
    LshSignature sig;
    for (int j = 0; j < kLshNumHashes; ++j)
        sig.buckets[j] = floor_bucket((acc[j] + tab.offsets[j]) / cfg.bucket_width);
    return sig;
}

std::string LshSignature::to_hex() const {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(kLshNumHashes * 16);
    for (int64_t b : buckets) {
        uint64_t u = static_cast<uint64_t>(b);
        for (int shift = 60; shift >= 0; shift -= 4) out.push_back(digits[(u >> shift) & 0xf]);
    }
    return out;
}

std::optional<LshSignature> LshSignature::from_hex(std::string_view hex) {
    if (hex.size() != kLshNumHashes * 16) return std::nullopt;
    LshSignature sig;
    for (int j = 0; j < kLshNumHashes; ++j) {
        uint64_t u = 0;
        for (int k = 0; k < 16; ++k) {
            char c = hex[j * 16 + k];
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else return std::nullopt;
            u = (u << 4) | static_cast<uint64_t>(v);
        }
        sig.buckets[j] = static_cast<int64_t>(u);
    }
    return sig;
}

bool allclose(const Tensor& a, const Tensor& b, double atol, double rtol) {
    if (a.shape() != b.shape()) return false;
    const uint64_t n = a.numel();
    for (uint64_t i = 0; i < n; ++i) {
        double x = a.f64_at(i), y = b.f64_at(i);
        if (!(std::fabs(x - y) <= atol + rtol * std::fabs(y))) return false;
    }
    return true;
}

Change lsh_compare(const GroupMetadata& prev, const Tensor& next,
                   const std::function<Tensor()>& prev_loader, const CloseBand& band) {
    if (prev.shape != next.shape() || prev.dtype != next.dtype()) return Change::changed;
    if (lsh_signature(next) != prev.lsh) return Change::changed;
    Tensor before = prev_loader();
    return allclose(next, before, band.atol, band.rtol) ? Change::unchanged : Change::changed;
}

}  // namespace theta
