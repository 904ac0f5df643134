#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "theta/metadata.hpp"
#include "theta/object_store.hpp"

namespace theta {

// --- structural diff ------------------------------------------------------

enum class ChangeStatus { added, removed, modified };

struct GroupChange {
    std::string name;
    ChangeStatus status = ChangeStatus::modified;
    // Set on modified entries whose field actually changed.
    std::optional<std::pair<std::vector<uint64_t>, std::vector<uint64_t>>> shape_change;
    std::optional<std::pair<Dtype, Dtype>> dtype_change;
};

// Set computation over the name union; groups equal by signature, shape and
// dtype are omitted. Sorted by name. diff(a, a) is empty, and swapping the
// arguments swaps added and removed.
std::vector<GroupChange> diff_models(const ModelMetadata& old_meta,
                                     const ModelMetadata& new_meta);

// One grep-friendly line per change:
//   A <name>
//   D <name>
//   M <name> [shape [2,2]->[2,3]] [dtype f32->f64]
// Clauses appear only when that field changed.
std::string render_diff(const std::vector<GroupChange>& changes);

// --- three-way merge ------------------------------------------------------

struct MergeConflict {
    std::string name;
    std::optional<GroupMetadata> ancestor;
    std::optional<GroupMetadata> ours;
    std::optional<GroupMetadata> theirs;
};

struct MergeAnalysis {
    // Every union name appears exactly once, either here (nullopt = the
    // group is absent from the merged model) or as a conflict.
    std::map<std::string, std::optional<GroupMetadata>> auto_resolved;
    std::vector<MergeConflict> conflicts;  // sorted by name
};

// Metadata-only comparison (signature + shape + dtype + presence — no tensor
// loads): groups equal on both sides pass through, one-sided changes take
// that side, the rest conflict. When both sides changed to equal content,
// ours' record is kept so the chain keeps resolving along the first parent.
MergeAnalysis detect_conflicts(const ModelMetadata& ancestor, const ModelMetadata& ours,
                               const ModelMetadata& theirs);

struct MergeStrategy {
    std::string_view keyword;
    std::string_view summary;
    bool (*applicable)(const MergeConflict&);
};

// Built-ins in menu order: ours, theirs, ancestor, average.
std::span<const MergeStrategy> merge_strategies();
const MergeStrategy* find_strategy(std::string_view keyword);

// Everything resolve_conflict needs to realize "average": current tensors of
// both sides (each loaded through its own branch's history) and the store
// that receives the fresh Dense object.
struct MergeContext {
    std::function<Tensor(const GroupMetadata&, const std::string&)> load_ours;
    std::function<Tensor(const GroupMetadata&, const std::string&)> load_theirs;
    ObjectStore* store = nullptr;
};

// ours/theirs/ancestor hand back that side's metadata (nullopt = omit the
// group). average computes the elementwise f64 mean of both sides, stores it
// as a fresh Dense object — cutting the incremental chain at the merge — and
// returns new metadata with a fresh signature and pointer. Swapping
// ours/theirs yields the identical tensor. Raises InapplicableStrategy for
// unknown or inapplicable keywords.
std::optional<GroupMetadata> resolve_conflict(const MergeConflict& conflict,
                                              std::string_view keyword,
                                              const MergeContext& ctx);

// Per-conflict strategy selection. Interactive mode lists only applicable
// strategies and reads a keyword per conflict, re-prompting at most three
// times after a bad entry before AbortedByUser (EOF aborts immediately).
// Non-interactive mode applies default_keyword to every conflict, aborting
// when it is empty and raising InapplicableStrategy when it does not apply.
std::map<std::string, std::string> present_menu(
    const std::vector<MergeConflict>& conflicts, std::istream& in, std::ostream& out,
    bool interactive, std::string_view default_keyword);

}  // namespace theta
