#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace theta {

// Element types supported by the tensor model. The numeric value of each
// enumerator is the stable single-byte code used in binary formats.
enum class Dtype : uint8_t {
    f16 = 0,
    f32 = 1,
    f64 = 2,
    i8 = 3,
    i16 = 4,
    i32 = 5,
    i64 = 6,
    u8 = 7,
    boolean = 8,
};

constexpr size_t dtype_width(Dtype d) {
    switch (d) {
        case Dtype::f16: return 2;
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
        case Dtype::i8: return 1;
        case Dtype::i16: return 2;
        case Dtype::i32: return 4;
        case Dtype::i64: return 8;
        case Dtype::u8: return 1;
        case Dtype::boolean: return 1;
    }
    return 0;
}

constexpr bool dtype_is_float(Dtype d) {
    return d == Dtype::f16 || d == Dtype::f32 || d == Dtype::f64;
}

std::string_view dtype_name(Dtype d);
std::optional<Dtype> dtype_from_name(std::string_view name);
std::optional<Dtype> dtype_from_code(uint8_t code);

}  // namespace theta
