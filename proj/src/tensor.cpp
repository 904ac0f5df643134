#include "theta/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "theta/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "payloads are stored little-endian and read in place");

namespace theta {

uint64_t shape_numel(std::span<const uint64_t> shape) {
    uint64_t n = 1;
    for (uint64_t e : shape) {
        if (e != 0 && n > std::numeric_limits<uint64_t>::max() / e)
            raise(Errc::invalid_argument, "shape element count overflows u64");
        n *= e;
    }
    return n;
}

double half_to_double(uint16_t bits) {
    uint32_t sign = (bits >> 15) & 1;
    uint32_t exp = (bits >> 10) & 0x1f;
    uint32_t frac = bits & 0x3ff;
    double v;
    if (exp == 0) {
        v = std::ldexp(static_cast<double>(frac), -24);  // subnormal or zero
    } else if (exp == 0x1f) {
        v = frac ? std::numeric_limits<double>::quiet_NaN()
                 : std::numeric_limits<double>::infinity();
    } else {
        v = std::ldexp(static_cast<double>(frac | 0x400), static_cast<int>(exp) - 25);
    }
    return sign ? -v : v;
}

uint16_t double_to_half(double v) {
    uint16_t sign = std::signbit(v) ? 0x8000 : 0;
    if (std::isnan(v)) return static_cast<uint16_t>(sign | 0x7e00);
    double a = std::fabs(v);
    if (std::isinf(v) || a >= 65520.0) return static_cast<uint16_t>(sign | 0x7c00);
    if (a < std::ldexp(1.0, -24 - 1)) return sign;  // below half of min subnormal
    // Scale into the half grid and round to nearest even via f64 arithmetic.
    int exp;
    std::frexp(a, &exp);  // a = m * 2^exp, m in [0.5, 1)
    int half_exp = exp - 1;
    if (half_exp < -14) half_exp = -14;  // subnormal range
    double scaled = std::ldexp(a, 10 - half_exp);
    double rounded = std::nearbyint(scaled);
    uint32_t q = static_cast<uint32_t>(rounded);
    if (q >= 0x800) {  // rounding carried into the next binade
        q >>= 1;
        ++half_exp;
        if (half_exp > 15) return static_cast<uint16_t>(sign | 0x7c00);
    }
    if (q < 0x400) return static_cast<uint16_t>(sign | q);  // subnormal
    return static_cast<uint16_t>(sign | ((half_exp + 15) << 10) | (q & 0x3ff));
}

Tensor::Tensor(Dtype dtype, std::vector<uint64_t> shape, Blob data)
    : dtype_(dtype), shape_(std::move(shape)), numel_(shape_numel(shape_)), data_(std::move(data)) {
    uint64_t want = numel_ * dtype_width(dtype_);
    if (data_.size() != want)
        raise(Errc::invalid_argument,
              "tensor payload is " + std::to_string(data_.size()) + " bytes, expected " +
                  std::to_string(want));
}

Tensor Tensor::zeros(Dtype dtype, std::vector<uint64_t> shape) {
    uint64_t n = shape_numel(shape);
    return Tensor(dtype, std::move(shape), Blob(n * dtype_width(dtype)));
}

namespace {

template <typename T>
void store_elem(std::byte* p, uint64_t i, T v) {
    std::memcpy(p + i * sizeof(T), &v, sizeof(T));
}

template <typename T>
T load_elem(const std::byte* p, uint64_t i) {
    T v;
    std::memcpy(&v, p + i * sizeof(T), sizeof(T));
    return v;
}

// f64 -> integer with two's-complement wrap. Values are first rounded to
// nearest; magnitudes beyond the u64 range behave like repeated wrapping of
// the rounded value, which only matters for pathological inputs.
uint64_t f64_to_wrapped_u64(double v) {
    double r = std::nearbyint(v);
    if (!(std::fabs(r) < 18446744073709551616.0)) return 0;  // NaN or huge
    if (r < 0) return ~static_cast<uint64_t>(-r - 1.0);
    return static_cast<uint64_t>(r);
}

}  // namespace

Tensor Tensor::from_f64(Dtype dtype, std::vector<uint64_t> shape, std::span<const double> values) {
    uint64_t n = shape_numel(shape);
    if (values.size() != n)
        raise(Errc::invalid_argument, "value count does not match shape");
    Blob data(n * dtype_width(dtype));
    std::byte* p = data.data();
    for (uint64_t i = 0; i < n; ++i) {
        double v = values[i];
        switch (dtype) {
            case Dtype::f16: store_elem<uint16_t>(p, i, double_to_half(v)); break;
            case Dtype::f32: store_elem<float>(p, i, static_cast<float>(v)); break;
            case Dtype::f64: store_elem<double>(p, i, v); break;
            case Dtype::i8: store_elem<int8_t>(p, i, static_cast<int8_t>(f64_to_wrapped_u64(v))); break;
            case Dtype::i16: store_elem<int16_t>(p, i, static_cast<int16_t>(f64_to_wrapped_u64(v))); break;
            case Dtype::i32: store_elem<int32_t>(p, i, static_cast<int32_t>(f64_to_wrapped_u64(v))); break;
            case Dtype::i64: store_elem<int64_t>(p, i, static_cast<int64_t>(f64_to_wrapped_u64(v))); break;
            case Dtype::u8: store_elem<uint8_t>(p, i, static_cast<uint8_t>(f64_to_wrapped_u64(v))); break;
            case Dtype::boolean: store_elem<uint8_t>(p, i, v != 0.0 ? 1 : 0); break;
        }
    }
    return Tensor(dtype, std::move(shape), std::move(data));
}

Tensor Tensor::of_f32(std::vector<uint64_t> shape, std::span<const float> values) {
    uint64_t n = shape_numel(shape);
    if (values.size() != n)
        raise(Errc::invalid_argument, "value count does not match shape");
    Blob data(n * 4);
    std::memcpy(data.data(), values.data(), data.size());
    return Tensor(Dtype::f32, std::move(shape), std::move(data));
}

Tensor Tensor::of_i64(std::vector<uint64_t> shape, std::span<const int64_t> values) {
    uint64_t n = shape_numel(shape);
    if (values.size() != n)
        raise(Errc::invalid_argument, "value count does not match shape");
    Blob data(n * 8);
    std::memcpy(data.data(), values.data(), data.size());
    return Tensor(Dtype::i64, std::move(shape), std::move(data));
}

double Tensor::f64_at(uint64_t i) const {
    const std::byte* p = data_.data();
    switch (dtype_) {
        case Dtype::f16: return half_to_double(load_elem<uint16_t>(p, i));
        case Dtype::f32: return load_elem<float>(p, i);
        case Dtype::f64: return load_elem<double>(p, i);
        case Dtype::i8: return load_elem<int8_t>(p, i);
        case Dtype::i16: return load_elem<int16_t>(p, i);
        case Dtype::i32: return load_elem<int32_t>(p, i);
        case Dtype::i64: return static_cast<double>(load_elem<int64_t>(p, i));
        case Dtype::u8: return load_elem<uint8_t>(p, i);
        case Dtype::boolean: return load_elem<uint8_t>(p, i) ? 1.0 : 0.0;
    }
    return 0.0;
}

int64_t Tensor::int_at(uint64_t i) const {
    const std::byte* p = data_.data();
    switch (dtype_) {
        case Dtype::i8: return load_elem<int8_t>(p, i);
        case Dtype::i16: return load_elem<int16_t>(p, i);
        case Dtype::i32: return load_elem<int32_t>(p, i);
        case Dtype::i64: return load_elem<int64_t>(p, i);
        case Dtype::u8: return load_elem<uint8_t>(p, i);
        // Raw byte, not normalized: update deltas ride on modular arithmetic.
        case Dtype::boolean: return load_elem<uint8_t>(p, i);
        default: raise(Errc::invalid_argument, "int_at on float tensor");
    }
}

std::vector<double> Tensor::as_f64() const {
    std::vector<double> out(numel_);
    for (uint64_t i = 0; i < numel_; ++i) out[i] = f64_at(i);
    return out;
}

std::string shape_to_string(std::span<const uint64_t> shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    s += "]";
    return s;
}

}  // namespace theta
