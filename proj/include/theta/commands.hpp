#pragma once

#include <optional>
#include <string>
#include <vector>

#include "theta/git.hpp"

namespace theta {

// CLI entry points. Each returns the process exit code; failures surface as
// theta::Error and are mapped to exit 1 (with a message) by the executable.

// Registers the filter/diff/merge drivers in Git config and appends the
// hook stanzas (chain-safe, idempotent).
int cmd_install(const GitRepo& repo);

// Adds the attributes line for `path` and records its checkpoint type under
// `theta.track.<path>`.
int cmd_track(const GitRepo& repo, const std::string& path, const std::string& type);

// Git clean/smudge protocol: checkpoint or metadata bytes on stdin, the
// converted form on stdout. `path` is Git's %f (repo-relative).
int cmd_filter_clean(const GitRepo& repo, const std::string& path);
int cmd_filter_smudge(const GitRepo& repo, const std::string& path);

struct MergeArgs {
    std::string ancestor_path;  // %O
    std::string ours_path;      // %A, rewritten with the merged metadata
    std::string theirs_path;    // %B
    // %P when Git supplies it; enables history-backed tensor loads.
    std::optional<std::string> tracked_path;
};
int cmd_merge(const GitRepo& repo, const MergeArgs& args);

// Git external-diff convention: path old-file old-hex old-mode new-file
// new-hex new-mode [rename extras]. Only path and the two files are read.
int cmd_diff(const GitRepo& repo, const std::vector<std::string>& args);

// Records the object ids each commit introduced (post-commit) and uploads
// the objects referenced by a pushed commit range (pre-push).
int cmd_post_commit(const GitRepo& repo);
int cmd_pre_push(const GitRepo& repo, const std::string& remote_name);

}  // namespace theta
