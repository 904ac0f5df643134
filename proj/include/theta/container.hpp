#pragma once

#include <string>
#include <utility>
#include <vector>

#include "theta/tensor.hpp"

namespace theta {

// Binary container for labeled tensors. Layout (all integers little-endian):
//
//   "THB1" | u32 tensor_count | tensor* | 32-byte SHA-256 of preceding bytes
//   tensor := u16 name_len | name bytes | u8 dtype code | u8 rank
//           | u64 extent * rank | raw payload
//
// Names are unique and stored in lexicographic order, so equal inputs yield
// identical bytes — the property content addressing rests on.
//
// A container may be wrapped in a deflate stage with magic "THBZ"
// (u64 plain length + zlib stream). Off by default; object ids are computed
// over stored bytes, so one repository must pick a setting and keep it.

using LabeledTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr char kContainerMagic[4] = {'T', 'H', 'B', '1'};
inline constexpr char kCompressedMagic[4] = {'T', 'H', 'B', 'Z'};

// Encodes tensors (sorted by label internally). Duplicate labels raise
// DuplicateLabel. compress selects the THBZ wrapping.
Blob serialize_tensors(const LabeledTensors& tensors, bool compress = false);

// Decodes either magic; inverse of serialize_tensors on its image. Raises
// CorruptContainer naming the failed check: "bad magic", "length", or
// "digest mismatch".
LabeledTensors deserialize_tensors(const Blob& bytes);

// Convenience for single-payload blobs.
Blob serialize_one(const std::string& label, const Tensor& t, bool compress = false);

}  // namespace theta
