#include "theta/dtype.hpp"

namespace theta {

std::string_view dtype_name(Dtype d) {
    switch (d) {
        case Dtype::f16: return "f16";
        case Dtype::f32: return "f32";
        case Dtype::f64: return "f64";
        case Dtype::i8: return "i8";
        case Dtype::i16: return "i16";
        case Dtype::i32: return "i32";
        case Dtype::i64: return "i64";
        case Dtype::u8: return "u8";
        case Dtype::boolean: return "bool";
    }
    return "?";
}

std::optional<Dtype> dtype_from_name(std::string_view name) {
    for (uint8_t c = 0; c <= 8; ++c) {
        Dtype d = static_cast<Dtype>(c);
        if (dtype_name(d) == name) return d;
    }
    return std::nullopt;
}

std::optional<Dtype> dtype_from_code(uint8_t code) {
    if (code > 8) return std::nullopt;
    return static_cast<Dtype>(code);
}

}  // namespace theta
