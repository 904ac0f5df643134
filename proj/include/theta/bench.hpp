#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace theta {

struct BenchConfig {
    size_t groups = 8;         // small dense groups, plus one 1024x1024 table
    size_t elements = 65536;   // elements per small group (f32)
    double sparsity = 0.001;   // changed fraction in the fine-tune commits
    uint64_t seed = 1;
    std::filesystem::path scratch;  // empty: fresh directory under the system temp
    bool keep_scratch = false;
};

// One workflow step, measured in both modes. Store bytes are cumulative
// after the step; the control ("blob") mode stores a full checkpoint copy
// per commit, the way value-identical re-serialized checkpoints defeat
// blob-level deduplication.
struct BenchRow {
    std::string label;
    double theta_add_ms = 0;
    double theta_checkout_ms = 0;
    uint64_t theta_store_bytes = 0;
    double blob_add_ms = 0;
    double blob_checkout_ms = 0;
    uint64_t blob_store_bytes = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    uint64_t theta_total_bytes = 0;
    uint64_t blob_total_bytes = 0;
};

// Replays the reference workflow (dense base, low-rank side-load, two
// divergent sparse branch commits, average merge, group removal, identical
// re-commit) against a real Git repository with the filters installed, and
// against the copy-per-commit control. `log` receives progress lines.
BenchReport run_bench(const BenchConfig& cfg, std::ostream& log);

std::string render_bench_table(const BenchReport& report);

}  // namespace theta
