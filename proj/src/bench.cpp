#include "theta/bench.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "theta/checkpoint.hpp"
#include "theta/commands.hpp"
#include "theta/error.hpp"
#include "theta/git.hpp"
#include "theta/object_store.hpp"
#include "theta/snapshot.hpp"
#include "theta/tensor.hpp"
#include "theta/util.hpp"

namespace theta {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void run_git(const fs::path& repo, std::vector<std::string> args,
             std::string_view stdin_data = {}) {
    args.insert(args.begin(), "git");
    args.insert(args.begin() + 1, "-C");
    args.insert(args.begin() + 2, repo.string());
    CommandResult r = run_command(args, stdin_data);
    if (r.exit_code != 0)
        raise(Errc::git_failure, "git " + args[3] + " failed: " + r.err);
}

ModelSnapshot make_model(const BenchConfig& cfg, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 0.02);
    ModelSnapshot snap;
    for (size_t g = 0; g < cfg.groups; ++g) {
        std::vector<double> values(cfg.elements);
        for (double& v : values) v = dist(rng);
        snap.put("block_" + std::to_string(g) + "/weight",
                 Tensor::from_f64(Dtype::f32, {cfg.elements}, values));
    }
    std::vector<double> table(1024ull * 1024);
    for (double& v : table) v = dist(rng);
    snap.put("embed/table", Tensor::from_f64(Dtype::f32, {1024, 1024}, table));
    return snap;
}

ModelSnapshot with_group(const ModelSnapshot& snap, const std::string& name,
                         std::optional<Tensor> replacement) {
    ModelSnapshot out;
    for (const auto& [have, tensor] : snap)
        if (have != name) out.put(have, tensor);
    if (replacement) out.put(name, std::move(*replacement));
    return out;
}

ModelSnapshot sparse_edit(const ModelSnapshot& snap, const std::string& name,
                          double fraction, std::mt19937_64& rng) {
    const Tensor* t = snap.find(name);
    std::vector<double> values = t->as_f64();
    size_t touches = std::max<size_t>(1, static_cast<size_t>(values.size() * fraction));
    std::uniform_int_distribution<size_t> pick(0, values.size() - 1);
    std::uniform_real_distribution<double> bump(0.5, 1.5);
    for (size_t i = 0; i < touches; ++i) values[pick(rng)] += bump(rng);
    return with_group(snap, name,
                      Tensor::from_f64(t->dtype(), t->shape(), values));
}

// Low-rank step: table' = table + A.B with K=4. Factors are quantized to
// f32 up front so the engine's verification recomputes the identical sums.
struct LowRankEdit {
    ModelSnapshot model;
    ModelSnapshot factors;
};

LowRankEdit low_rank_edit(const ModelSnapshot& snap, const std::string& name,
                          std::mt19937_64& rng) {
    constexpr size_t kRank = 4;
    const Tensor* t = snap.find(name);
    const uint64_t rows = t->shape()[0], cols = t->shape()[1];
    std::normal_distribution<double> dist(0.0, 0.02);

    std::vector<double> a(rows * kRank), b(kRank * cols);
    for (double& v : a) v = static_cast<double>(static_cast<float>(dist(rng)));
    for (double& v : b) v = static_cast<double>(static_cast<float>(dist(rng)));

    std::vector<double> table = t->as_f64();
    for (uint64_t i = 0; i < rows; ++i)
        for (uint64_t j = 0; j < cols; ++j) {
            double sum = 0;
            for (size_t k = 0; k < kRank; ++k) sum += a[i * kRank + k] * b[k * cols + j];
            table[i * cols + j] += sum;
        }

    LowRankEdit edit;
    edit.model = with_group(snap, name, Tensor::from_f64(t->dtype(), t->shape(), table));
    edit.factors.put(name + "/A", Tensor::from_f64(Dtype::f32, {rows, kRank}, a));
    edit.factors.put(name + "/B", Tensor::from_f64(Dtype::f32, {kRank, cols}, b));
    return edit;
}

// The control lane: a full checkpoint copy lands in the store every commit,
// the way re-serialized (value-identical, byte-distinct) checkpoints defeat
// blob deduplication.
struct BlobLane {
    fs::path root;
    uint64_t total = 0;
    int steps = 0;

    double add(const Blob& bytes) {
        auto start = Clock::now();
        write_file_atomic(root / ("step-" + std::to_string(steps)) / "model.ckpt",
                          bytes);
        ++steps;
        total += bytes.size();
        return ms_since(start);
    }
    double checkout(int step, const fs::path& dest) const {
        auto start = Clock::now();
        write_file_atomic(dest,
                          read_file(root / ("step-" + std::to_string(step)) /
                                    "model.ckpt"));
        return ms_since(start);
    }
};

}  // namespace

BenchReport run_bench(const BenchConfig& cfg, std::ostream& log) {
    fs::path scratch = cfg.scratch;
    if (scratch.empty())
        scratch = fs::temp_directory_path() / ("theta-bench-" + std::to_string(::getpid()));
    fs::remove_all(scratch);
    fs::path repo_dir = scratch / "repo";
    fs::create_directories(repo_dir);

    run_git(repo_dir, {"init", "-q"});
    run_git(repo_dir, {"checkout", "-q", "-b", "main"});
    run_git(repo_dir, {"config", "user.name", "bench"});
    run_git(repo_dir, {"config", "user.email", "bench@localhost"});
    run_git(repo_dir, {"config", "commit.gpgsign", "false"});
    run_git(repo_dir, {"config", "advice.detachedHead", "false"});
    run_git(repo_dir, {"config", "theta.mergeDefault", "average"});

    GitRepo repo = GitRepo::discover(repo_dir);
    cmd_install(repo);
    cmd_track(repo, "model.ckpt", "flat-bin");
    run_git(repo_dir, {"add", ".gitattributes"});

    ObjectStore store(repo.theta_dir());
    BlobLane blob{scratch / "blob"};

    BenchReport report;
    std::vector<std::string> shas;
    const fs::path model_file = repo_dir / "model.ckpt";

    auto theta_commit = [&](const std::string& label, const Blob& bytes,
                            bool allow_empty) {
        write_file_atomic(model_file, bytes);
        auto start = Clock::now();
        run_git(repo_dir, {"add", "model.ckpt"});
        std::vector<std::string> commit = {"commit", "-q", "-m", label};
        if (allow_empty) commit.push_back("--allow-empty");
        run_git(repo_dir, commit);
        double add_ms = ms_since(start);

        BenchRow row;
        row.label = label;
        row.theta_add_ms = add_ms;
        row.theta_store_bytes = store.total_object_bytes();
        row.blob_add_ms = blob.add(bytes);
        row.blob_store_bytes = blob.total;
        report.rows.push_back(row);
        shas.push_back(repo.git_out({"rev-parse", "HEAD"}));
        log << "commit " << label << ": add " << add_ms << " ms\n";
    };

    std::mt19937_64 rng(cfg.seed);

    ModelSnapshot model = make_model(cfg, rng);
    theta_commit("base", save_checkpoint("flat-bin", model), false);

    LowRankEdit edit = low_rank_edit(model, "embed/table", rng);
    model = std::move(edit.model);
    fs::path factors_file = scratch / "factors.thb";
    write_file_atomic(factors_file, save_checkpoint("flat-bin", edit.factors));
    ::setenv("THETA_UPDATE_TYPE", "low_rank", 1);
    ::setenv("THETA_UPDATE_DATA", factors_file.string().c_str(), 1);
    theta_commit("low-rank", save_checkpoint("flat-bin", model), false);
    ::unsetenv("THETA_UPDATE_TYPE");
    ::unsetenv("THETA_UPDATE_DATA");

    // Two fine-tunes diverge from the low-rank state: both touch block_0
    // (the conflict averaged at the merge), each touches one private group.
    run_git(repo_dir, {"checkout", "-q", "-b", "side"});
    ModelSnapshot side_model = sparse_edit(model, "block_0/weight", cfg.sparsity, rng);
    side_model = sparse_edit(side_model, "block_2/weight", cfg.sparsity, rng);
    theta_commit("sparse-b", save_checkpoint("flat-bin", side_model), false);

    run_git(repo_dir, {"checkout", "-q", "main"});
    model = sparse_edit(model, "block_0/weight", cfg.sparsity, rng);
    model = sparse_edit(model, "block_1/weight", cfg.sparsity, rng);
    theta_commit("sparse-a", save_checkpoint("flat-bin", model), false);

    {
        auto start = Clock::now();
        run_git(repo_dir, {"merge", "-q", "--no-edit", "-m", "merge side", "side"});
        double add_ms = ms_since(start);
        Blob merged = read_file(model_file);  // the smudged merge result
        model = load_checkpoint("flat-bin", merged);

        BenchRow row;
        row.label = "merge";
        row.theta_add_ms = add_ms;
        row.theta_store_bytes = store.total_object_bytes();
        row.blob_add_ms = blob.add(merged);
        row.blob_store_bytes = blob.total;
        report.rows.push_back(row);
        shas.push_back(repo.git_out({"rev-parse", "HEAD"}));
        log << "commit merge: add " << add_ms << " ms\n";
    }

    model = with_group(model, "block_" + std::to_string(cfg.groups - 1) + "/weight",
                       std::nullopt);
    theta_commit("remove", save_checkpoint("flat-bin", model), false);

    theta_commit("no-op", save_checkpoint("flat-bin", model), true);

    fs::path blob_worktree = scratch / "blob-co" / "model.ckpt";
    for (size_t i = 0; i < shas.size(); ++i) {
        auto start = Clock::now();
        run_git(repo_dir, {"checkout", "-q", "-f", shas[i]});
        report.rows[i].theta_checkout_ms = ms_since(start);
        if (!fs::exists(model_file) || fs::file_size(model_file) == 0)
            raise(Errc::storage_failure, "checkout of " + shas[i] + " produced no file");
        report.rows[i].blob_checkout_ms = blob.checkout(static_cast<int>(i), blob_worktree);
        log << "checkout " << report.rows[i].label << ": "
            << report.rows[i].theta_checkout_ms << " ms\n";
    }
    run_git(repo_dir, {"checkout", "-q", "-f", "main"});

    report.theta_total_bytes = store.total_object_bytes();
    report.blob_total_bytes = blob.total;

    if (!cfg.keep_scratch)
        fs::remove_all(scratch);
    else
        log << "scratch kept at " << scratch.string() << '\n';
    return report;
}

std::string render_bench_table(const BenchReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    out << std::left << std::setw(10) << "step" << std::right << std::setw(14)
        << "theta add ms" << std::setw(18) << "theta checkout ms" << std::setw(14)
        << "theta bytes" << std::setw(14) << "blob add ms" << std::setw(18)
        << "blob checkout ms" << std::setw(14) << "blob bytes" << '\n';
    for (const BenchRow& row : report.rows)
        out << std::left << std::setw(10) << row.label << std::right << std::setw(14)
            << row.theta_add_ms << std::setw(18) << row.theta_checkout_ms
            << std::setw(14) << row.theta_store_bytes << std::setw(14)
            << row.blob_add_ms << std::setw(18) << row.blob_checkout_ms
            << std::setw(14) << row.blob_store_bytes << '\n';
    out << "total store bytes: theta=" << report.theta_total_bytes
        << " blob=" << report.blob_total_bytes << '\n';
    return out.str();
}

}  // namespace theta
