#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "theta/dtype.hpp"

namespace theta {

using Blob = std::vector<std::byte>;

// Product of extents, checked against overflow.
uint64_t shape_numel(std::span<const uint64_t> shape);

// IEEE-754 binary16 conversions (round-to-nearest-even on the way down).
double half_to_double(uint16_t bits);
uint16_t double_to_half(double v);

// A dense tensor: dtype + shape + row-major little-endian payload.
// Immutable after construction; the byte-length invariant is checked on
// every construction. A rank-0 tensor has shape [] and exactly one element.
class Tensor {
public:
    Tensor(Dtype dtype, std::vector<uint64_t> shape, Blob data);

    static Tensor zeros(Dtype dtype, std::vector<uint64_t> shape);
    // Casts each value to `dtype`. Floats round; integers are truncated
    // modulo 2^width (two's complement), so wrapped deltas reconstruct
    // exactly; bool maps nonzero to 1.
    static Tensor from_f64(Dtype dtype, std::vector<uint64_t> shape,
                           std::span<const double> values);
    static Tensor of_f32(std::vector<uint64_t> shape, std::span<const float> values);
    static Tensor of_i64(std::vector<uint64_t> shape, std::span<const int64_t> values);

    Dtype dtype() const { return dtype_; }
    const std::vector<uint64_t>& shape() const { return shape_; }
    uint64_t numel() const { return numel_; }
    const Blob& data() const { return data_; }

    // Element i promoted to f64 (flat row-major index).
    double f64_at(uint64_t i) const;
    std::vector<double> as_f64() const;
    // Integer dtypes only: element as a sign-extended 64-bit value.
    int64_t int_at(uint64_t i) const;

    bool same_bytes(const Tensor& other) const {
        return dtype_ == other.dtype_ && shape_ == other.shape_ && data_ == other.data_;
    }

private:
    Dtype dtype_;
    std::vector<uint64_t> shape_;
    uint64_t numel_;
    Blob data_;
};

std::string shape_to_string(std::span<const uint64_t> shape);

}  // namespace theta
