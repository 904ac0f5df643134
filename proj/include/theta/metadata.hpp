#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "theta/dtype.hpp"
#include "theta/lsh.hpp"

namespace theta {

// How a group changed relative to history. Dense is the only kind that needs
// no prior value; every resolution chain terminates at a Dense record.
enum class UpdateKind : uint8_t { dense, sparse, low_rank, scale_vector };

std::string_view update_kind_name(UpdateKind k);
std::optional<UpdateKind> update_kind_from_name(std::string_view name);

// (oid, size) pair identifying a content-addressed blob; oid is the SHA-256
// of the stored bytes, 64 lowercase hex chars.
struct ObjectPointer {
    std::string oid;
    uint64_t size = 0;

    bool operator==(const ObjectPointer&) const = default;
};

bool valid_oid(std::string_view oid);

// Per-group entry of the metadata file. shape/dtype describe the
// RECONSTRUCTED tensor, not the stored payload, so diffs work from metadata
// alone.
struct GroupMetadata {
    Dtype dtype = Dtype::f32;
    std::vector<uint64_t> shape;
    LshSignature lsh;
    UpdateKind update_kind = UpdateKind::dense;
    ObjectPointer pointer;
    std::map<std::string, std::string> flags;  // reserved; carries scale_vector axis

    // Same stored record: what history walking uses to skip no-op copies.
    bool same_record(const GroupMetadata& o) const {
        return update_kind == o.update_kind && pointer == o.pointer;
    }
    // Same observable content under staging-time change detection.
    bool same_content(const GroupMetadata& o) const {
        return dtype == o.dtype && shape == o.shape && lsh == o.lsh;
    }
};

// The document Git versions in place of the checkpoint.
struct ModelMetadata {
    int format_version = 1;
    std::string checkpoint_type;
    std::map<std::string, GroupMetadata> groups;
};

inline constexpr int kMetadataFormatVersion = 1;

// Canonical JSON: UTF-8, object keys sorted lexicographically, no
// insignificant whitespace, integers in decimal, terminated by one newline.
// Pure function of logical content; repeated calls byte-match.
std::string encode_metadata(const ModelMetadata& meta);

// Inverse of encode_metadata on its image. Rejects parse failures, duplicate
// group names and invariant violations as MalformedMetadata, and any other
// format_version as UnsupportedVersion.
ModelMetadata decode_metadata(std::string_view bytes);

}  // namespace theta
