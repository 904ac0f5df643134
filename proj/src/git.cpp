#include "theta/git.hpp"

#include <csignal>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "theta/error.hpp"
#include "theta/util.hpp"

namespace theta {

namespace fs = std::filesystem;

namespace {

void ignore_sigpipe() {
    // A child exiting early must surface as EPIPE on our write, not kill us.
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

[[noreturn]] void child_exec(const std::vector<std::string>& argv, int in_fd, int out_fd,
                             int err_fd, const std::optional<fs::path>& cwd) {
    if (cwd && ::chdir(cwd->c_str()) != 0) ::_exit(127);
    ::dup2(in_fd, 0);
    ::dup2(out_fd, 1);
    ::dup2(err_fd, 2);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
}

void drain(int fd, std::string& into, bool& open) {
    char buf[65536];
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0)
        into.append(buf, static_cast<size_t>(n));
    else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN))
        open = false;
}

}  // namespace

CommandResult run_command(const std::vector<std::string>& argv, std::string_view stdin_data,
                          const std::optional<fs::path>& cwd) {
    if (argv.empty()) raise(Errc::invalid_argument, "empty command line");
    ignore_sigpipe();

    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
        raise(Errc::storage_failure, "pipe() failed");

    pid_t pid = ::fork();
    if (pid < 0) raise(Errc::storage_failure, "fork() failed");
    if (pid == 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(err_pipe[0]);
        child_exec(argv, in_pipe[0], out_pipe[1], err_pipe[1], cwd);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    std::thread writer([fd = in_pipe[1], stdin_data] {
        size_t off = 0;
        while (off < stdin_data.size()) {
            ssize_t n = ::write(fd, stdin_data.data() + off, stdin_data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                break;  // EPIPE: the child stopped reading
            }
            off += static_cast<size_t>(n);
        }
        ::close(fd);
    });

    CommandResult res;
    bool out_open = true, err_open = true;
    while (out_open || err_open) {
        pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
        fds[0].fd = out_open ? out_pipe[0] : -1;
        fds[1].fd = err_open ? err_pipe[0] : -1;
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (fds[0].revents) drain(out_pipe[0], res.out, out_open);
        if (fds[1].revents) drain(err_pipe[0], res.err, err_open);
    }
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    writer.join();

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

GitRepo::GitRepo(fs::path worktree, fs::path git_dir)
    : worktree_(std::move(worktree)), git_dir_(std::move(git_dir)) {}

GitRepo GitRepo::discover(const std::optional<fs::path>& from) {
    CommandResult top = run_command(
        {"git", "rev-parse", "--show-toplevel", "--absolute-git-dir"}, {}, from);
    if (top.exit_code != 0)
        raise(Errc::not_a_repository,
              from ? "no git repository at " + from->string()
                   : std::string("no git repository here"));
    size_t nl = top.out.find('\n');
    if (nl == std::string::npos)
        raise(Errc::git_failure, "unexpected rev-parse output");
    std::string tree = top.out.substr(0, nl);
    std::string dir = top.out.substr(nl + 1);
    while (!dir.empty() && dir.back() == '\n') dir.pop_back();
    return GitRepo(tree, dir);
}

CommandResult GitRepo::git(const std::vector<std::string>& args,
                           std::string_view stdin_data) const {
    std::vector<std::string> argv{"git", "-C", worktree_.string()};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_command(argv, stdin_data);
}

std::string GitRepo::git_out(const std::vector<std::string>& args,
                             std::string_view stdin_data) const {
    CommandResult res = git(args, stdin_data);
    if (res.exit_code != 0) {
        std::string cmd = "git";
        for (const std::string& a : args) cmd += ' ' + a;
        raise(Errc::git_failure, cmd + " failed: " + res.err);
    }
    if (!res.out.empty() && res.out.back() == '\n') res.out.pop_back();
    return res.out;
}

std::optional<std::string> GitRepo::config_get(const std::string& key) const {
    CommandResult res = git({"config", "--get", key});
    if (res.exit_code != 0) return std::nullopt;
    if (!res.out.empty() && res.out.back() == '\n') res.out.pop_back();
    return res.out;
}

void GitRepo::config_set(const std::string& key, const std::string& value) const {
    git_out({"config", key, value});
}

std::optional<std::string> GitRepo::rev_parse(const std::string& name) const {
    CommandResult res = git({"rev-parse", "--verify", "--quiet", name});
    if (res.exit_code != 0) return std::nullopt;
    if (!res.out.empty() && res.out.back() == '\n') res.out.pop_back();
    return res.out;
}

std::optional<Blob> GitRepo::cat_blob(const std::string& spec) const {
    CommandResult res = git({"cat-file", "blob", spec});
    if (res.exit_code != 0) return std::nullopt;
    return to_blob(res.out);
}

std::string GitRepo::hash_object(std::string_view bytes) const {
    return git_out({"hash-object", "--stdin"}, bytes);
}

std::vector<std::string> GitRepo::first_parent_path_commits(const std::string& start,
                                                            const std::string& path) const {
    CommandResult res = git({"rev-list", "--first-parent", start, "--", path});
    if (res.exit_code != 0) return {};
    return split_lines(res.out);
}

std::vector<std::string> GitRepo::all_path_commits(const std::string& path) const {
    CommandResult res = git({"rev-list", "--all", "--", path});
    if (res.exit_code != 0) return {};
    return split_lines(res.out);
}

}  // namespace theta
