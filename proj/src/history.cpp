#include "theta/history.hpp"

#include "theta/error.hpp"
#include "theta/util.hpp"

namespace theta {

namespace fs = std::filesystem;

HistoryAnchor find_anchor_commit(const GitRepo& repo, const std::string& path,
                                 std::string_view metadata_bytes) {
    std::string blob_id = repo.hash_object(metadata_bytes);

    auto match = [&](const std::string& rev) -> std::optional<std::string> {
        auto commit = repo.rev_parse(rev);
        if (!commit) return std::nullopt;
        auto recorded = repo.rev_parse(rev + ":" + path);
        if (recorded && *recorded == blob_id) return commit;
        return std::nullopt;
    };

    if (auto c = match("HEAD")) return {c, true};
    if (auto c = match("MERGE_HEAD")) return {c, true};
    for (const std::string& commit : repo.all_path_commits(path))
        if (auto c = match(commit)) return {c, true};
    return {repo.rev_parse("HEAD"), false};
}

GitHistoryProvider::GitHistoryProvider(const GitRepo& repo, std::string path,
                                       HistoryAnchor anchor, ObjectStore store,
                                       std::vector<fs::path> remotes)
    : repo_(repo),
      path_(std::move(path)),
      anchor_(std::move(anchor)),
      store_(std::move(store)),
      remotes_(std::move(remotes)) {}

const std::vector<std::string>& GitHistoryProvider::commit_list() {
    // Caller holds mu_.
    if (!commits_) {
        commits_ = anchor_.commit
                       ? repo_.first_parent_path_commits(*anchor_.commit, path_)
                       : std::vector<std::string>{};
    }
    return *commits_;
}

const std::optional<ModelMetadata>& GitHistoryProvider::version(int steps_back) {
    // Caller holds mu_. Version index 0 is the state recorded at the anchor
    // commit. An anchored head already IS that state, so its step k maps to
    // index k; an un-anchored head sits before it, so step k maps to k-1.
    const std::vector<std::string>& commits = commit_list();
    int index = anchor_.anchored ? steps_back : steps_back - 1;
    auto it = versions_.find(index);
    if (it != versions_.end()) return it->second;

    std::optional<ModelMetadata> meta;
    if (index >= 0 && index < static_cast<int>(commits.size())) {
        auto blob = repo_.cat_blob(commits[static_cast<size_t>(index)] + ":" + path_);
        if (blob) meta = decode_metadata(as_string_view(*blob));
        // A commit that deleted the file ends the usable history here.
    }
    return versions_.emplace(index, std::move(meta)).first->second;
}

std::optional<GroupMetadata> GitHistoryProvider::group_at(std::string_view name,
                                                          int steps_back) {
    std::lock_guard lock(mu_);
    const std::optional<ModelMetadata>& meta = version(steps_back);
    if (!meta) return std::nullopt;
    auto it = meta->groups.find(std::string(name));
    if (it == meta->groups.end()) return std::nullopt;
    return it->second;
}

Blob GitHistoryProvider::fetch(const ObjectPointer& ptr) {
    Blob blob = store_.get(ptr.oid, remotes_);
    if (blob.size() != ptr.size)
        raise(Errc::integrity_failure,
              "object " + ptr.oid + " has size " + std::to_string(blob.size()) +
                  ", pointer records " + std::to_string(ptr.size));
    return blob;
}

int GitHistoryProvider::max_depth() const {
    auto* self = const_cast<GitHistoryProvider*>(this);
    std::lock_guard lock(self->mu_);
    // One resolution step per distinct recorded version, plus slack for the
    // un-anchored offset.
    return static_cast<int>(self->commit_list().size()) + 2;
}

std::vector<fs::path> remote_roots(const GitRepo& repo) {
    auto remote = repo.config_get("theta.remote");
    if (!remote || remote->empty()) return {};
    fs::path root = *remote;
    if (root.is_relative()) root = repo.worktree() / root;
    return {root};
}

}  // namespace theta
