#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "theta/tensor.hpp"

namespace theta {

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs argv[0] with argv semantics (no shell), feeding stdin_data and
// capturing both output streams. stdin is written from a helper thread so
// large payloads cannot deadlock against a full output pipe.
CommandResult run_command(const std::vector<std::string>& argv,
                          std::string_view stdin_data = {},
                          const std::optional<std::filesystem::path>& cwd = {});

// Thin wrapper over the git executable for one repository. Every call is a
// subprocess; methods are const and safe to use from several threads.
class GitRepo {
public:
    GitRepo(std::filesystem::path worktree, std::filesystem::path git_dir);

    // Locates the repository containing `from` (default: the working
    // directory); raises NotARepository otherwise.
    static GitRepo discover(const std::optional<std::filesystem::path>& from = {});

    const std::filesystem::path& worktree() const { return worktree_; }
    const std::filesystem::path& git_dir() const { return git_dir_; }
    // Home of the object store and commit indexes.
    std::filesystem::path theta_dir() const { return git_dir_ / "theta"; }

    CommandResult git(const std::vector<std::string>& args,
                      std::string_view stdin_data = {}) const;
    // Nonzero exit raises GitFailure; returns stdout with one trailing
    // newline stripped.
    std::string git_out(const std::vector<std::string>& args,
                        std::string_view stdin_data = {}) const;

    std::optional<std::string> config_get(const std::string& key) const;
    void config_set(const std::string& key, const std::string& value) const;

    // nullopt when the name does not resolve (unborn HEAD, absent path...).
    std::optional<std::string> rev_parse(const std::string& name) const;
    std::optional<Blob> cat_blob(const std::string& spec) const;

    // Git blob id the bytes would get — cheap content-equality probe
    // against rev_parse("<commit>:<path>").
    std::string hash_object(std::string_view bytes) const;

    // Commits (newest first) on the first-parent line from `start` where
    // `path` changed relative to the previous state.
    std::vector<std::string> first_parent_path_commits(const std::string& start,
                                                       const std::string& path) const;
    // Same filter over all refs, for locating which commit a blob belongs to.
    std::vector<std::string> all_path_commits(const std::string& path) const;

private:
    std::filesystem::path worktree_;
    std::filesystem::path git_dir_;
};

}  // namespace theta
