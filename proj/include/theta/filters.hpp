#pragma once

#include <string>

#include "theta/lsh.hpp"
#include "theta/metadata.hpp"
#include "theta/object_store.hpp"
#include "theta/snapshot.hpp"
#include "theta/update.hpp"

namespace theta {

// Everything the staging pipeline needs besides the checkpoint bytes.
// `prev` and `resolver` describe the path's previous recorded state (both
// null/none on first add); `side` carries THETA_UPDATE_DATA factors.
struct CleanContext {
    std::string checkpoint_type;
    ExtractRequest request = ExtractRequest::auto_pick;
    const ModelSnapshot* side = nullptr;
    const ModelMetadata* prev = nullptr;
    PriorResolver* resolver = nullptr;
    ObjectStore* store = nullptr;  // required
    LshConfig lsh;
    CloseBand band;
    unsigned workers = 0;  // 0 = hardware concurrency
};

// Checkpoint bytes -> canonical metadata bytes. Per group: LSH-compare
// against the previous record — unchanged groups carry the prior record over
// verbatim (their objects are reused, nothing stored); changed or new groups
// run extract -> write -> serialize -> put. Groups are processed in
// parallel; the output is canonical regardless of completion order.
std::string filter_clean(const Blob& checkpoint_bytes, const CleanContext& ctx);

// Metadata bytes -> checkpoint bytes in the recorded checkpoint_type.
// Every group resolves through the update engine (concurrently), so the
// resolver must be able to walk this file's history and fetch objects.
Blob filter_smudge(std::string_view metadata_bytes, PriorResolver& resolver,
                   unsigned workers = 0);

}  // namespace theta
