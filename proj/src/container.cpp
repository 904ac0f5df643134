#include "theta/container.hpp"

#include <algorithm>
#include <cstring>

#include <zlib.h>

#include "theta/error.hpp"
#include "theta/sha256.hpp"

namespace theta {
namespace {

constexpr size_t kDigestBytes = 32;

void put_bytes(Blob& out, const void* p, size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
}

template <typename T>
void put_le(Blob& out, T v) {
    static_assert(std::is_unsigned_v<T>);
    for (size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

[[noreturn]] void corrupt(const std::string& what) {
    raise(Errc::corrupt_container, what);
}

// Sequential reader; every read is bounds-checked so truncation surfaces as
// a "length" failure rather than UB.
struct Cursor {
    const std::byte* p;
    size_t left;

    void take(void* dst, size_t n) {
        if (n > left) corrupt("length: truncated container");
        std::memcpy(dst, p, n);
        p += n;
        left -= n;
    }
    template <typename T>
    T le() {
        static_assert(std::is_unsigned_v<T>);
        std::byte raw[sizeof(T)];
        take(raw, sizeof(T));
        T v = 0;
        for (size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<T>(std::to_integer<uint8_t>(raw[i])) << (8 * i);
        return v;
    }
};

Blob deflate_wrap(const Blob& plain) {
    uLongf bound = compressBound(static_cast<uLong>(plain.size()));
    Blob out;
    out.reserve(12 + bound);
    put_bytes(out, kCompressedMagic, 4);
    put_le<uint64_t>(out, plain.size());
    size_t header = out.size();
    out.resize(header + bound);
    int rc = compress2(reinterpret_cast<Bytef*>(out.data() + header), &bound,
                       reinterpret_cast<const Bytef*>(plain.data()),
                       static_cast<uLong>(plain.size()), 9);
    if (rc != Z_OK) raise(Errc::storage_failure, "deflate failed");
    out.resize(header + bound);
    return out;
}

Blob inflate_unwrap(const Blob& stored) {
    Cursor c{stored.data(), stored.size()};
    char magic[4];
    c.take(magic, 4);
    uint64_t plain_size = c.le<uint64_t>();
    if (plain_size > (1ull << 40)) corrupt("length: implausible plain size");
    Blob plain(plain_size);
    uLongf got = static_cast<uLongf>(plain_size);
    uLong used = static_cast<uLong>(c.left);
    int rc = uncompress2(reinterpret_cast<Bytef*>(plain.data()), &got,
                         reinterpret_cast<const Bytef*>(c.p), &used);
    if (rc != Z_OK || got != plain_size || used != c.left)
        corrupt("length: bad deflate stream");
    return plain;
}

LabeledTensors parse_plain(const Blob& bytes) {
    if (bytes.size() < 4 + 4 + kDigestBytes) corrupt("length: shorter than an empty container");
    auto digest = sha256(std::span(bytes.data(), bytes.size() - kDigestBytes));
    if (std::memcmp(digest.data(), bytes.data() + bytes.size() - kDigestBytes,
                    kDigestBytes) != 0)
        corrupt("digest mismatch");

    Cursor c{bytes.data() + 4, bytes.size() - 4 - kDigestBytes};
    uint32_t count = c.le<uint32_t>();
    LabeledTensors out;
    out.reserve(count);
    std::string prev_name;
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t name_len = c.le<uint16_t>();
        std::string name(name_len, '\0');
        c.take(name.data(), name_len);
        if (i > 0 && !(prev_name < name)) corrupt("length: names out of order");
        auto dtype = dtype_from_code(static_cast<uint8_t>(c.le<uint8_t>()));
        if (!dtype) corrupt("length: unknown dtype code");
        uint8_t rank = c.le<uint8_t>();
        std::vector<uint64_t> shape(rank);
        for (auto& d : shape) d = c.le<uint64_t>();
        uint64_t numel = shape_numel(shape);
        if (numel > c.left / dtype_width(*dtype))
            corrupt("length: payload exceeds container");
        uint64_t payload = numel * dtype_width(*dtype);
        Blob data(c.p, c.p + payload);
        c.p += payload;
        c.left -= payload;
        out.emplace_back(name, Tensor(*dtype, std::move(shape), std::move(data)));
        prev_name = std::move(name);
    }
    if (c.left != 0) corrupt("length: trailing bytes before digest");
    return out;
}

}  // namespace

Blob serialize_tensors(const LabeledTensors& tensors, bool compress) {
    std::vector<const std::pair<std::string, Tensor>*> order;
    order.reserve(tensors.size());
    for (const auto& e : tensors) order.push_back(&e);
    std::sort(order.begin(), order.end(),
              [](auto* a, auto* b) { return a->first < b->first; });
    for (size_t i = 1; i < order.size(); ++i)
        if (order[i - 1]->first == order[i]->first)
            raise(Errc::duplicate_label, "duplicate label \"" + order[i]->first + '"');

    Blob out;
    put_bytes(out, kContainerMagic, 4);
    if (order.size() > UINT32_MAX) raise(Errc::invalid_argument, "too many tensors");
    put_le<uint32_t>(out, static_cast<uint32_t>(order.size()));
    for (const auto* e : order) {
        const auto& [name, t] = *e;
        if (name.size() > UINT16_MAX)
            raise(Errc::invalid_argument, "label longer than 65535 bytes");
        if (t.shape().size() > 255)
            raise(Errc::invalid_argument, "rank above 255");
        put_le<uint16_t>(out, static_cast<uint16_t>(name.size()));
        put_bytes(out, name.data(), name.size());
        put_le<uint8_t>(out, static_cast<uint8_t>(t.dtype()));
        put_le<uint8_t>(out, static_cast<uint8_t>(t.shape().size()));
        for (uint64_t d : t.shape()) put_le<uint64_t>(out, d);
        put_bytes(out, t.data().data(), t.data().size());
    }
    auto digest = sha256(std::span(out.data(), out.size()));
    put_bytes(out, digest.data(), digest.size());
    return compress ? deflate_wrap(out) : out;
}

LabeledTensors deserialize_tensors(const Blob& bytes) {
    if (bytes.size() < 4) corrupt("length: shorter than the magic");
    if (std::memcmp(bytes.data(), kCompressedMagic, 4) == 0)
        return parse_plain(inflate_unwrap(bytes));
    if (std::memcmp(bytes.data(), kContainerMagic, 4) != 0) corrupt("bad magic");
    return parse_plain(bytes);
}

Blob serialize_one(const std::string& label, const Tensor& t, bool compress) {
    LabeledTensors one;
    one.emplace_back(label, t);
    return serialize_tensors(one, compress);
}

}  // namespace theta
