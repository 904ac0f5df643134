#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "theta/bench.hpp"
#include "theta/commands.hpp"
#include "theta/error.hpp"
#include "theta/git.hpp"

namespace {

theta::GitRepo repo_here() { return theta::GitRepo::discover(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"theta: parameter-group version control for ML checkpoints"};
    app.require_subcommand(1);
    int rc = 0;

    auto* install =
        app.add_subcommand("install", "Register the filter, diff and merge drivers "
                                      "plus hooks in this repository");
    install->callback([&] { rc = theta::cmd_install(repo_here()); });

    std::string track_path, track_type;
    auto* track =
        app.add_subcommand("track", "Mark a checkpoint path as theta-managed");
    track->add_option("path", track_path, "Repository-relative checkpoint path")
        ->required();
    track->add_option("type", track_type, "Checkpoint format key (e.g. flat-bin)")
        ->required();
    track->callback([&] { rc = theta::cmd_track(repo_here(), track_path, track_type); });

    std::string clean_path;
    auto* clean = app.add_subcommand(
        "filter-clean", "Git clean filter: checkpoint on stdin, metadata on stdout");
    clean->add_option("path", clean_path, "Path being filtered (%f)")->required();
    clean->callback([&] { rc = theta::cmd_filter_clean(repo_here(), clean_path); });

    std::string smudge_path;
    auto* smudge = app.add_subcommand(
        "filter-smudge", "Git smudge filter: metadata on stdin, checkpoint on stdout");
    smudge->add_option("path", smudge_path, "Path being filtered (%f)")->required();
    smudge->callback([&] { rc = theta::cmd_filter_smudge(repo_here(), smudge_path); });

    theta::MergeArgs merge_args;
    std::string merge_tracked;
    auto* merge = app.add_subcommand(
        "merge", "Git merge driver: three-way merge of metadata files");
    merge->add_option("ancestor", merge_args.ancestor_path, "%O")->required();
    merge->add_option("ours", merge_args.ours_path, "%A (rewritten)")->required();
    merge->add_option("theirs", merge_args.theirs_path, "%B")->required();
    merge->add_option("path", merge_tracked, "%P, the tracked path");
    merge->callback([&] {
        if (!merge_tracked.empty()) merge_args.tracked_path = merge_tracked;
        rc = theta::cmd_merge(repo_here(), merge_args);
    });

    std::vector<std::string> diff_args;
    auto* diff = app.add_subcommand(
        "diff", "Git diff driver: structural change report between two versions");
    diff->add_option("args", diff_args, "Git's external-diff arguments")
        ->expected(-1);
    diff->callback([&] { rc = theta::cmd_diff(repo_here(), diff_args); });

    auto* post_commit = app.add_subcommand(
        "post-commit", "Hook: record the object ids introduced by HEAD");
    post_commit->callback([&] { rc = theta::cmd_post_commit(repo_here()); });

    std::string push_remote = "origin";
    std::string push_url;
    auto* pre_push = app.add_subcommand(
        "pre-push", "Hook: upload objects referenced by the pushed commits");
    pre_push->add_option("remote", push_remote, "Remote name (from Git)");
    pre_push->add_option("url", push_url, "Remote URL (unused)");
    pre_push->callback([&] { rc = theta::cmd_pre_push(repo_here(), push_remote); });

    theta::BenchConfig bench_cfg;
    std::string bench_scratch;
    auto* bench = app.add_subcommand(
        "bench", "Replay the reference workflow and compare against a "
                 "copy-per-commit control");
    bench->add_option("--groups", bench_cfg.groups, "Small parameter groups");
    bench->add_option("--elements", bench_cfg.elements, "Elements per small group");
    bench->add_option("--sparsity", bench_cfg.sparsity,
                      "Changed fraction per fine-tune commit");
    bench->add_option("--seed", bench_cfg.seed, "Data seed");
    bench->add_option("--dir", bench_scratch, "Scratch directory (kept)");
    bench->callback([&] {
        if (!bench_scratch.empty()) {
            bench_cfg.scratch = bench_scratch;
            bench_cfg.keep_scratch = true;
        }
        theta::BenchReport report = theta::run_bench(bench_cfg, std::cerr);
        std::cout << theta::render_bench_table(report);
        rc = 0;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const theta::Error& e) {
        std::cerr << "theta: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "theta: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
