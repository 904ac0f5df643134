#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "theta/git.hpp"
#include "theta/metadata.hpp"
#include "theta/object_store.hpp"
#include "theta/update.hpp"

namespace theta {

// Which commit a metadata state belongs to. `anchored` means the state IS
// the blob recorded at `commit` (so one step back skips past it);
// un-anchored states (uncommitted edits) sit on top of `commit`, whose own
// version is the first step back.
struct HistoryAnchor {
    std::optional<std::string> commit;
    bool anchored = false;
};

// Locates the commit whose recorded blob equals `metadata_bytes`, by blob-id
// equality: HEAD first, then MERGE_HEAD, then any commit that touched the
// path (newest first). Git may run smudge before moving HEAD, so the target
// commit of a checkout is found by content, never assumed from HEAD.
// Falls back to {HEAD, false} for states matching no commit.
HistoryAnchor find_anchor_commit(const GitRepo& repo, const std::string& path,
                                 std::string_view metadata_bytes);

// PriorResolver over the first-parent history of one metadata file.
// Version k is read from the k-th first-parent ancestor where the file's
// blob differs from the version before it; lookups are cached, and the
// cache is safe under the concurrent per-group reads of smudge.
class GitHistoryProvider final : public PriorResolver {
public:
    GitHistoryProvider(const GitRepo& repo, std::string path, HistoryAnchor anchor,
                       ObjectStore store, std::vector<std::filesystem::path> remotes);

    std::optional<GroupMetadata> group_at(std::string_view name, int steps_back) override;
    Blob fetch(const ObjectPointer& ptr) override;
    int max_depth() const override;

private:
    const std::vector<std::string>& commit_list();
    const std::optional<ModelMetadata>& version(int steps_back);

    const GitRepo& repo_;
    std::string path_;
    HistoryAnchor anchor_;
    ObjectStore store_;
    std::vector<std::filesystem::path> remotes_;

    std::mutex mu_;
    std::optional<std::vector<std::string>> commits_;  // lazily listed
    std::map<int, std::optional<ModelMetadata>> versions_;
};

// Object-store roots to consult besides the local one, per `theta.remote`.
std::vector<std::filesystem::path> remote_roots(const GitRepo& repo);

}  // namespace theta
