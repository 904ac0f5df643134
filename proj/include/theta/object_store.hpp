#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "theta/metadata.hpp"
#include "theta/tensor.hpp"

namespace theta {

// Content-addressed blob store under <root>/objects/<aa>/<bb>/<oid>, with
// oid = SHA-256 of the stored bytes. Objects are write-once: put never
// rewrites an existing path, so concurrent puts of the same content are
// safe (each writes a temp file and renames into place).
//
// The repository-local store lives at .git/theta; a "remote" is any
// directory with the same objects/ layout (the transport seam for future
// network backends).
class ObjectStore {
public:
    explicit ObjectStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path object_path(std::string_view oid) const;

    ObjectPointer put(const Blob& blob);
    bool contains(std::string_view oid) const;

    // Local cache first, then each remote in order; a remote hit is copied
    // into the local cache. The digest of whatever is read must recompute
    // to the oid (IntegrityFailure), and an oid found nowhere raises
    // ObjectMissing.
    Blob get(std::string_view oid,
             const std::vector<std::filesystem::path>& remotes = {}) const;

    // Copies every oid to the remote store, skipping ones already there
    // (by path existence); returns the number actually uploaded. A missing
    // local object raises ObjectMissing.
    size_t sync_objects(const std::vector<std::string>& oids,
                        const std::filesystem::path& remote_root) const;

    // Sum of stored object sizes, for storage assertions.
    uint64_t total_object_bytes() const;

private:
    std::filesystem::path root_;
};

// Path an oid occupies under any root using the store layout (no store
// construction, no directory creation — pure path arithmetic).
std::filesystem::path object_layout_path(const std::filesystem::path& root,
                                         std::string_view oid);

// Commit index: <store root>/commits/<commit_id> holds the oids introduced
// by that commit, deduplicated, sorted, one per line. Rewritable — hooks may
// run more than once for a commit.
void write_commit_index(const std::filesystem::path& store_root,
                        const std::string& commit_id,
                        std::vector<std::string> oids);
// Missing index file reads as "no index" (nullopt), distinct from empty.
std::optional<std::vector<std::string>> read_commit_index(
    const std::filesystem::path& store_root, const std::string& commit_id);

}  // namespace theta
