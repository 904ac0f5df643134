#pragma once

#include <string_view>
#include <vector>

#include "theta/snapshot.hpp"
#include "theta/tensor.hpp"

namespace theta {

// A checkpoint format loads framework-level checkpoint bytes into a
// ModelSnapshot and back. Formats are stateless; load/save may run
// concurrently on distinct inputs.
class CheckpointFormat {
public:
    virtual ~CheckpointFormat() = default;

    virtual std::string_view key() const = 0;
    virtual ModelSnapshot load(const Blob& bytes) const = 0;
    virtual Blob save(const ModelSnapshot& snapshot) const = 0;
};

// Built-in formats:
//   flat-bin   the tensor container reused as a checkpoint file;
//              save(load(f)) is byte-identical
//   json-text  canonical JSON name -> {dtype, shape, data}; f32/f64/i32/i64
//              only; save(load(f)) is value-identical
// Lookup is exact — no content sniffing, unregistered keys are an error.
// To add a format, register it in builtin_formats() (checkpoint.cpp).
const CheckpointFormat& checkpoint_format(std::string_view key);
std::vector<std::string_view> checkpoint_format_keys();

ModelSnapshot load_checkpoint(std::string_view format_key, const Blob& bytes);
Blob save_checkpoint(std::string_view format_key, const ModelSnapshot& snapshot);

}  // namespace theta
