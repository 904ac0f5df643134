#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "theta/error.hpp"
#include "theta/tensor.hpp"

#include "helpers.hpp"

using namespace theta;

TEST_CASE("shape_numel multiplies extents, empty shape is a scalar") {
    CHECK(shape_numel(std::vector<uint64_t>{}) == 1);
    CHECK(shape_numel(std::vector<uint64_t>{5}) == 5);
    CHECK(shape_numel(std::vector<uint64_t>{2, 3, 4}) == 24);
    CHECK(shape_numel(std::vector<uint64_t>{7, 0, 3}) == 0);
}

TEST_CASE("half conversions round-trip representable values") {
    for (double v : {0.0, 1.0, -1.0, 0.5, -2.25, 65504.0, 6.103515625e-05}) {
        uint16_t bits = double_to_half(v);
        CHECK(half_to_double(bits) == v);
    }
    // Round-to-nearest-even at the halfway point between 1.0 and 1.0009765625.
    CHECK(half_to_double(double_to_half(1.00048828125)) == 1.0);
    CHECK(std::isnan(half_to_double(double_to_half(std::nan("")))));
    CHECK(half_to_double(double_to_half(1e6)) ==
          std::numeric_limits<double>::infinity());
}

TEST_CASE("tensor constructor validates payload length") {
    Blob ok(8);  // 2 f32
    CHECK_NOTHROW(Tensor(Dtype::f32, {2}, ok));
    Blob bad(7);
    CHECK_THROWS_AS(Tensor(Dtype::f32, {2}, bad), Error);
}

TEST_CASE("element accessors agree with construction values") {
    std::vector<double> vals{1.5, -2.0, 0.0, 3.25};
    Tensor f32 = Tensor::from_f64(Dtype::f32, {4}, vals);
    Tensor f64 = Tensor::from_f64(Dtype::f64, {2, 2}, vals);
    for (uint64_t i = 0; i < 4; ++i) {
        CHECK(f32.f64_at(i) == vals[i]);
        CHECK(f64.f64_at(i) == vals[i]);
    }
    CHECK(f32.as_f64() == vals);

    Tensor i16 = Tensor::from_f64(Dtype::i16, {3}, std::vector<double>{-5, 0, 129});
    CHECK(i16.int_at(0) == -5);
    CHECK(i16.int_at(2) == 129);
    CHECK(i16.f64_at(0) == -5.0);

    Tensor u8 = Tensor::from_f64(Dtype::u8, {2}, std::vector<double>{0, 255});
    CHECK(u8.int_at(1) == 255);

    Tensor b = Tensor::from_f64(Dtype::boolean, {2}, std::vector<double>{0, 1});
    CHECK(b.f64_at(0) == 0.0);
    CHECK(b.f64_at(1) == 1.0);
}

TEST_CASE("of_i64 preserves values beyond f64 precision") {
    std::vector<int64_t> big{std::numeric_limits<int64_t>::max(),
                             std::numeric_limits<int64_t>::min(),
                             (int64_t{1} << 62) + 1};
    Tensor t = Tensor::of_i64({3}, big);
    for (uint64_t i = 0; i < 3; ++i) CHECK(t.int_at(i) == big[i]);
}

TEST_CASE("zeros produces an all-zero payload") {
    Tensor z = Tensor::zeros(Dtype::f64, {4, 4});
    CHECK(z.numel() == 16);
    for (uint64_t i = 0; i < 16; ++i) CHECK(z.f64_at(i) == 0.0);
}

TEST_CASE("same_bytes distinguishes dtype, shape, and payload") {
    Tensor a = Tensor::from_f64(Dtype::f32, {2}, std::vector<double>{1, 2});
    Tensor b = Tensor::from_f64(Dtype::f32, {2}, std::vector<double>{1, 2});
    CHECK(a.same_bytes(b));
    CHECK_FALSE(a.same_bytes(Tensor::from_f64(Dtype::f32, {2}, std::vector<double>{1, 3})));
    CHECK_FALSE(a.same_bytes(Tensor::from_f64(Dtype::f64, {2}, std::vector<double>{1, 2})));
    CHECK_FALSE(a.same_bytes(Tensor::from_f64(Dtype::f32, {2, 1}, std::vector<double>{1, 2})));
}

TEST_CASE("f32 payload uses IEEE-754 little-endian bytes") {
    Tensor t = Tensor::from_f64(Dtype::f32, {2}, std::vector<double>{1.0, 2.0});
    const unsigned char expect[8] = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x40};
    REQUIRE(t.data().size() == 8);
    CHECK(std::memcmp(t.data().data(), expect, 8) == 0);
}

TEST_CASE("f16 construction rounds to nearest-even") {
    Tensor t = Tensor::from_f64(Dtype::f16, {1}, std::vector<double>{1.0002});
    CHECK(t.f64_at(0) == 1.0);
}
