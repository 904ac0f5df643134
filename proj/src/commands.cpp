#include "theta/commands.hpp"

#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "theta/checkpoint.hpp"
#include "theta/error.hpp"
#include "theta/filters.hpp"
#include "theta/history.hpp"
#include "theta/lsh.hpp"
#include "theta/merge.hpp"
#include "theta/metadata.hpp"
#include "theta/object_store.hpp"
#include "theta/snapshot.hpp"
#include "theta/update.hpp"
#include "theta/util.hpp"

namespace theta {

namespace fs = std::filesystem;

namespace {

// --- stdio (binary-safe; filters speak raw bytes) --------------------------

Blob read_all_stdin() {
    Blob data;
    char buf[1 << 16];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, stdin)) > 0) {
        const auto* p = reinterpret_cast<const std::byte*>(buf);
        data.insert(data.end(), p, p + n);
    }
    if (std::ferror(stdin)) raise(Errc::storage_failure, "cannot read stdin");
    return data;
}

void write_all_stdout(std::span<const std::byte> bytes) {
    if (!bytes.empty() &&
        std::fwrite(bytes.data(), 1, bytes.size(), stdout) != bytes.size())
        raise(Errc::storage_failure, "cannot write stdout");
    if (std::fflush(stdout) != 0) raise(Errc::storage_failure, "cannot write stdout");
}

// --- install ----------------------------------------------------------------

// Command lines below run through sh (Git's convention), so the executable
// path is double-quoted to survive spaces.
std::string quoted(const std::string& word) { return '"' + word + '"'; }

fs::path self_exe_path() {
    std::error_code ec;
    fs::path p = fs::read_symlink("/proc/self/exe", ec);
    if (ec) raise(Errc::storage_failure, "cannot resolve own executable path");
    return p;
}

constexpr std::string_view kHookBegin = "# >>> theta hooks >>>";
constexpr std::string_view kHookEnd = "# <<< theta hooks <<<";

// Appends (or refreshes) the marker-delimited stanza. Existing hook content
// keeps running first; a hook we cannot safely extend is reported, never
// overwritten.
void install_hook(const GitRepo& repo, const std::string& name, const std::string& line) {
    fs::path hook = repo.git_dir() / "hooks" / name;
    std::string stanza = std::string(kHookBegin) + '\n' + line + '\n' +
                         std::string(kHookEnd) + '\n';

    std::string text;
    bool fresh = true;
    if (auto existing = read_file_if_exists(hook)) {
        text = std::string(as_string_view(*existing));
        fresh = false;
    }

    size_t begin_mark = text.find(kHookBegin);
    if (begin_mark != std::string::npos) {
        size_t end_mark = text.find(kHookEnd, begin_mark);
        if (end_mark == std::string::npos)
            raise(Errc::hook_conflict,
                  hook.string() + " has a damaged theta stanza; repair it by hand");
        size_t end = end_mark + kHookEnd.size();
        if (end < text.size() && text[end] == '\n') ++end;
        text.replace(begin_mark, end - begin_mark, stanza);
    } else {
        if (fresh) {
            text = "#!/bin/sh\n";
        } else {
            if (text.find('\0') != std::string::npos)
                raise(Errc::hook_conflict,
                      hook.string() + " is not a shell script; add the theta stanza by hand");
            if (text.rfind("#!", 0) == 0) {
                std::string first_line = text.substr(0, text.find('\n'));
                if (first_line.find("sh") == std::string::npos)
                    raise(Errc::hook_conflict,
                          hook.string() +
                              " is not a shell script; add the theta stanza by hand");
            }
            if (!text.empty() && text.back() != '\n') text += '\n';
        }
        text += stanza;
    }

    write_file_atomic(hook, std::string_view(text));
    std::error_code ec;
    fs::permissions(hook,
                    fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                    fs::perm_options::add, ec);
    if (ec) raise(Errc::storage_failure, "cannot mark " + hook.string() + " executable");
}

// --- shared command plumbing ------------------------------------------------

std::string tracked_checkpoint_type(const GitRepo& repo, const std::string& path,
                                    const ModelMetadata* prev = nullptr) {
    if (auto env = env_var("THETA_CHECKPOINT_TYPE")) return *env;
    if (auto cfg = repo.config_get("theta.track." + path)) return *cfg;
    // Clones have the committed metadata but not the tracking config; the
    // recorded type keeps already-tracked paths working there.
    if (prev && !prev->checkpoint_type.empty()) return prev->checkpoint_type;
    raise(Errc::invalid_argument, "no checkpoint type recorded for " + path +
                                      "; run `theta track " + path +
                                      " <type>` or set THETA_CHECKPOINT_TYPE");
}

// Paths in `commit`'s tree whose filter attribute is theta (per the current
// index attributes — historical .gitattributes revisions are not consulted).
std::vector<std::string> tracked_paths_at(const GitRepo& repo, const std::string& commit) {
    auto split_nul = [](std::string_view text) {
        std::vector<std::string> out;
        size_t start = 0;
        while (start < text.size()) {
            size_t end = text.find('\0', start);
            if (end == std::string_view::npos) end = text.size();
            if (end > start) out.emplace_back(text.substr(start, end - start));
            start = end + 1;
        }
        return out;
    };

    std::vector<std::string> paths =
        split_nul(repo.git_out({"ls-tree", "-r", "--name-only", "-z", commit}));
    if (paths.empty()) return {};

    std::string stdin_data;
    for (const std::string& p : paths) {
        stdin_data += p;
        stdin_data += '\0';
    }
    std::string listing =
        repo.git_out({"check-attr", "--cached", "-z", "--stdin", "filter"}, stdin_data);

    // -z output is flat triplets: path NUL attribute NUL value NUL ...
    std::vector<std::string> fields = split_nul(listing);
    std::vector<std::string> tracked;
    for (size_t i = 0; i + 2 < fields.size(); i += 3)
        if (fields[i + 2] == "theta") tracked.push_back(fields[i]);
    return tracked;
}

std::set<std::string> metadata_oids(const GitRepo& repo, const std::string& commit,
                                    const std::string& path) {
    std::set<std::string> oids;
    auto blob = repo.cat_blob(commit + ":" + path);
    if (!blob || blob->empty()) return oids;
    try {
        ModelMetadata meta = decode_metadata(as_string_view(*blob));
        for (const auto& [name, group] : meta.groups) oids.insert(group.pointer.oid);
    } catch (const Error&) {
        // The path predates tracking at this commit; it holds no objects.
    }
    return oids;
}

// Objects first referenced by `commit` relative to its first parent.
std::vector<std::string> commit_new_oids(const GitRepo& repo, const std::string& commit) {
    std::optional<std::string> parent = repo.rev_parse(commit + "^");
    std::vector<std::string> fresh;
    for (const std::string& path : tracked_paths_at(repo, commit)) {
        std::set<std::string> now = metadata_oids(repo, commit, path);
        std::set<std::string> before =
            parent ? metadata_oids(repo, *parent, path) : std::set<std::string>{};
        for (const std::string& oid : now)
            if (!before.count(oid)) fresh.push_back(oid);
    }
    return fresh;
}

ModelMetadata read_merge_side(const fs::path& file, std::string& checkpoint_type) {
    auto bytes = read_file_if_exists(file);
    if (!bytes || bytes->empty()) return ModelMetadata{};  // side absent
    ModelMetadata meta = decode_metadata(as_string_view(*bytes));
    if (checkpoint_type.empty()) checkpoint_type = meta.checkpoint_type;
    return meta;
}

}  // namespace

// --- install / track ---------------------------------------------------------

int cmd_install(const GitRepo& repo) {
    std::string exe = quoted(self_exe_path().string());

    // Git shell-quotes the substituted paths itself, so the placeholders must
    // stay bare: wrapping %f in quotes would hand us a literally-quoted path.
    repo.config_set("filter.theta.clean", exe + " filter-clean %f");
    repo.config_set("filter.theta.smudge", exe + " filter-smudge %f");
    repo.config_set("filter.theta.required", "true");
    repo.config_set("diff.theta.command", exe + " diff");
    repo.config_set("merge.theta.name", "theta parameter-group merge");
    repo.config_set("merge.theta.driver", exe + " merge %O %A %B %P");

    install_hook(repo, "post-commit", exe + " post-commit || exit $?");
    install_hook(repo, "pre-push", exe + " pre-push \"$@\" || exit $?");

    ObjectStore store(repo.theta_dir());  // lay out .git/theta up front
    std::cout << "theta: installed drivers and hooks in " << repo.git_dir().string()
              << '\n';
    return 0;
}

int cmd_track(const GitRepo& repo, const std::string& path, const std::string& type) {
    checkpoint_format(type);  // UnknownFormat for anything unregistered

    if (path.empty() || path.front() == '#' || path.front() == '!' ||
        path.find_first_of(" \t\r\n\"\\") != std::string::npos)
        raise(Errc::invalid_argument,
              "cannot express \"" + path + "\" as a .gitattributes pattern");

    std::string line = path + " filter=theta diff=theta merge=theta";
    fs::path attrs = repo.worktree() / ".gitattributes";
    std::string text;
    if (auto existing = read_file_if_exists(attrs))
        text = std::string(as_string_view(*existing));

    bool present = false;
    for (const std::string& have : split_lines(text))
        if (have == line) present = true;
    if (!present) {
        if (!text.empty() && text.back() != '\n') text += '\n';
        text += line;
        text += '\n';
        write_file_atomic(attrs, std::string_view(text));
    }

    repo.config_set("theta.track." + path, type);
    std::cout << "theta: tracking " << path << " (" << type << ")\n";
    return 0;
}

// --- filters ------------------------------------------------------------------

int cmd_filter_clean(const GitRepo& repo, const std::string& path) {
    Blob input = read_all_stdin();
    if (input.empty()) return 0;  // empty blobs pass through empty

    // Re-cleaning already-clean content (renormalize, internal re-checks)
    // must be the identity.
    try {
        decode_metadata(as_string_view(input));
        write_all_stdout(input);
        return 0;
    } catch (const Error&) {
    }

    // Previous recorded state: the path's metadata at HEAD, else the index.
    // An anchored resolver treats that state as version zero of the history.
    HistoryAnchor anchor{repo.rev_parse("HEAD"), true};
    std::optional<Blob> prev_bytes =
        anchor.commit ? repo.cat_blob("HEAD:" + path) : std::nullopt;
    if (!prev_bytes) {
        anchor.anchored = false;
        prev_bytes = repo.cat_blob(":" + path);
    }
    std::optional<ModelMetadata> prev;
    if (prev_bytes && !prev_bytes->empty()) {
        try {
            prev = decode_metadata(as_string_view(*prev_bytes));
        } catch (const Error&) {
            // Newly tracked path over a plain-file history: first theta add.
        }
    }

    std::string type = tracked_checkpoint_type(repo, path, prev ? &*prev : nullptr);

    ExtractRequest request = ExtractRequest::auto_pick;
    if (auto env = env_var("THETA_UPDATE_TYPE")) {
        auto req = extract_request_from_name(*env);
        if (!req)
            raise(Errc::invalid_argument,
                  "THETA_UPDATE_TYPE: unknown update type \"" + *env + '"');
        request = *req;
    }

    std::optional<ModelSnapshot> side;
    if (auto env = env_var("THETA_UPDATE_DATA"))
        side = load_checkpoint(type, read_file(fs::path(*env)));

    ObjectStore store(repo.theta_dir());
    GitHistoryProvider resolver(repo, path, anchor, store, remote_roots(repo));

    CleanContext ctx;
    ctx.checkpoint_type = type;
    ctx.request = request;
    ctx.side = side ? &*side : nullptr;
    ctx.prev = prev ? &*prev : nullptr;
    ctx.resolver = &resolver;
    ctx.store = &store;

    std::string meta = filter_clean(input, ctx);
    write_all_stdout(std::as_bytes(std::span(meta.data(), meta.size())));
    return 0;
}

int cmd_filter_smudge(const GitRepo& repo, const std::string& path) {
    Blob input = read_all_stdin();
    if (input.empty()) return 0;

    // Blobs committed before tracking began are not metadata; they pass
    // through so old history stays checkout-able.
    try {
        decode_metadata(as_string_view(input));
    } catch (const Error&) {
        write_all_stdout(input);
        return 0;
    }

    HistoryAnchor anchor = find_anchor_commit(repo, path, as_string_view(input));
    ObjectStore store(repo.theta_dir());
    GitHistoryProvider resolver(repo, path, anchor, store, remote_roots(repo));
    write_all_stdout(filter_smudge(as_string_view(input), resolver));
    return 0;
}

// --- merge driver --------------------------------------------------------------

int cmd_merge(const GitRepo& repo, const MergeArgs& args) {
    std::string type;
    ModelMetadata ours = read_merge_side(args.ours_path, type);
    ModelMetadata theirs = read_merge_side(args.theirs_path, type);
    ModelMetadata ancestor = read_merge_side(args.ancestor_path, type);
    if (type.empty()) return 0;  // all sides empty: nothing to merge

    MergeAnalysis analysis = detect_conflicts(ancestor, ours, theirs);

    std::map<std::string, std::string> choices;
    if (!analysis.conflicts.empty()) {
        std::string fallback = repo.config_get("theta.mergeDefault").value_or("");
        bool interactive = ::isatty(0) == 1;
        if (!interactive && fallback.empty())
            raise(Errc::aborted_by_user,
                  "conflicts need a strategy: set theta.mergeDefault or merge "
                  "interactively");
        choices = present_menu(analysis.conflicts, std::cin, std::cout, interactive,
                               fallback);
    }

    // %P lets tensor loads walk each side's own history; ours' state matches
    // HEAD's recorded blob, theirs' matches MERGE_HEAD's.
    std::string path = args.tracked_path.value_or("");
    if (path == "%P") path.clear();  // placeholder unexpanded by an older Git
    HistoryAnchor ours_anchor, theirs_anchor;
    if (!path.empty()) {
        auto ours_bytes = read_file_if_exists(args.ours_path);
        auto theirs_bytes = read_file_if_exists(args.theirs_path);
        ours_anchor = find_anchor_commit(
            repo, path, ours_bytes ? as_string_view(*ours_bytes) : std::string_view{});
        theirs_anchor = find_anchor_commit(
            repo, path,
            theirs_bytes ? as_string_view(*theirs_bytes) : std::string_view{});
    }

    ObjectStore store(repo.theta_dir());
    auto remotes = remote_roots(repo);
    GitHistoryProvider ours_history(repo, path, ours_anchor, store, remotes);
    GitHistoryProvider theirs_history(repo, path, theirs_anchor, store, remotes);

    MergeContext ctx;
    ctx.store = &store;
    ctx.load_ours = [&](const GroupMetadata& g, const std::string& name) {
        return resolve_group(g, name, ours_history);
    };
    ctx.load_theirs = [&](const GroupMetadata& g, const std::string& name) {
        return resolve_group(g, name, theirs_history);
    };

    ModelMetadata merged;
    merged.checkpoint_type = type;
    for (const auto& [name, group] : analysis.auto_resolved)
        if (group) merged.groups.emplace(name, *group);
    for (const MergeConflict& conflict : analysis.conflicts) {
        auto group = resolve_conflict(conflict, choices.at(conflict.name), ctx);
        if (group) merged.groups.emplace(conflict.name, *group);
    }

    // A merged pointer nobody can fetch would poison the next checkout.
    for (const auto& [name, group] : merged.groups) {
        if (store.contains(group.pointer.oid)) continue;
        bool on_remote = false;
        for (const fs::path& remote : remotes)
            if (fs::exists(object_layout_path(remote, group.pointer.oid)))
                on_remote = true;
        if (!on_remote)
            raise(Errc::object_missing, "merged group " + name +
                                            " references unfetchable object " +
                                            group.pointer.oid);
    }

    write_file_atomic(args.ours_path, std::string_view(encode_metadata(merged)));
    if (!analysis.conflicts.empty())
        std::cout << "theta: resolved " << analysis.conflicts.size()
                  << " conflicting group(s)\n";
    return 0;
}

// --- diff driver ----------------------------------------------------------------

namespace {

// Either side of a diff may be canonical metadata (blob side) or a raw
// checkpoint (working-tree side); raw checkpoints get throwaway metadata
// synthesized, since the diff reads only dtype/shape/signature.
ModelMetadata diff_side(const GitRepo& repo, const std::string& tracked_path,
                        const std::string& file, const ModelMetadata* hint = nullptr) {
    if (file == "/dev/null") return ModelMetadata{};
    Blob bytes = read_file(fs::path(file));
    if (bytes.empty()) return ModelMetadata{};
    try {
        return decode_metadata(as_string_view(bytes));
    } catch (const Error& decode_error) {
        std::string type;
        try {
            type = tracked_checkpoint_type(repo, tracked_path, hint);
        } catch (const Error&) {
            throw decode_error;  // not metadata, no way to parse as checkpoint
        }
        ModelSnapshot snapshot = load_checkpoint(type, bytes);
        ModelMetadata meta;
        meta.checkpoint_type = type;
        for (const auto& [name, tensor] : snapshot) {
            GroupMetadata g;
            g.dtype = tensor.dtype();
            g.shape = tensor.shape();
            g.lsh = lsh_signature(tensor);
            g.update_kind = UpdateKind::dense;
            meta.groups.emplace(name, std::move(g));
        }
        return meta;
    }
}

}  // namespace

int cmd_diff(const GitRepo& repo, const std::vector<std::string>& args) {
    if (args.size() < 7)
        raise(Errc::invalid_argument,
              "diff driver expects Git's 7-argument call, got " +
                  std::to_string(args.size()));
    const std::string& path = args[0];
    ModelMetadata old_meta = diff_side(repo, path, args[1]);
    ModelMetadata new_meta = diff_side(repo, path, args[4], &old_meta);
    std::cout << render_diff(diff_models(old_meta, new_meta));
    return 0;
}

// --- hooks -----------------------------------------------------------------------

int cmd_post_commit(const GitRepo& repo) {
    auto head = repo.rev_parse("HEAD");
    if (!head) return 0;
    write_commit_index(repo.theta_dir(), *head, commit_new_oids(repo, *head));
    return 0;
}

int cmd_pre_push(const GitRepo& repo, const std::string& remote_name) {
    constexpr std::string_view kZeroOid = "0000000000000000000000000000000000000000";

    std::set<std::string> commits;
    Blob input = read_all_stdin();
    for (const std::string& line : split_lines(as_string_view(input))) {
        std::istringstream fields(line);
        std::string local_ref, local_sha, remote_ref, remote_sha;
        if (!(fields >> local_ref >> local_sha >> remote_ref >> remote_sha)) continue;
        if (local_sha == kZeroOid) continue;  // deleting a remote ref

        // Unknown remote tip (new branch): everything reachable locally but
        // on no ref of that remote is being pushed.
        std::vector<std::string> rev_args;
        if (remote_sha == kZeroOid)
            rev_args = {"rev-list", local_sha, "--not", "--remotes=" + remote_name};
        else
            rev_args = {"rev-list", remote_sha + ".." + local_sha};
        for (const std::string& commit : split_lines(repo.git_out(rev_args)))
            commits.insert(commit);
    }

    std::set<std::string> oids;
    for (const std::string& commit : commits) {
        auto indexed = read_commit_index(repo.theta_dir(), commit);
        std::vector<std::string> fresh =
            indexed ? *indexed : commit_new_oids(repo, commit);
        oids.insert(fresh.begin(), fresh.end());
    }
    if (oids.empty()) return 0;

    auto remotes = remote_roots(repo);
    if (remotes.empty())
        raise(Errc::invalid_argument,
              "theta.remote is not set; " + std::to_string(oids.size()) +
                  " object(s) have nowhere to go");

    ObjectStore store(repo.theta_dir());
    size_t uploaded =
        store.sync_objects({oids.begin(), oids.end()}, remotes.front());
    std::cerr << "theta: synced " << uploaded << " object(s) to "
              << remotes.front().string() << '\n';
    return 0;
}

}  // namespace theta
