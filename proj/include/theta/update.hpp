#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "theta/container.hpp"
#include "theta/metadata.hpp"
#include "theta/snapshot.hpp"
#include "theta/tensor.hpp"

namespace theta {

// Reconstruction fidelity bound for float chains (elementwise, with the new
// value as reference); integer dtypes reconstruct exactly via modular
// arithmetic.
inline constexpr double kFidelityAtol = 1e-8;
inline constexpr double kFidelityRtol = 1e-6;

// Auto-inferred sparse updates: nonzero fraction of the delta at or below
// this picks Sparse over Dense.
inline constexpr double kSparseDensityThreshold = 0.1;

struct DensePayload {
    Tensor value;
};
// Flat offsets into the reconstructed tensor (i64, strictly increasing) and
// the additive delta at each, in the reconstructed dtype.
struct SparsePayload {
    Tensor indices;
    Tensor values;
};
// prior + A·B over a rank-2 group: A is M×K, B is K×N, K >= 1.
struct LowRankPayload {
    Tensor A;
    Tensor B;
};
// prior ⊙ v broadcast along `axis`; len(v) equals the extent there.
struct ScaleVectorPayload {
    Tensor v;
    uint64_t axis = 0;
};

using UpdatePayload =
    std::variant<DensePayload, SparsePayload, LowRankPayload, ScaleVectorPayload>;

UpdateKind payload_kind(const UpdatePayload& p);

// What the user asked staging to extract; Auto picks Dense or Sparse.
enum class ExtractRequest : uint8_t { auto_pick, dense, sparse, low_rank, scale_vector };

std::optional<ExtractRequest> extract_request_from_name(std::string_view name);

// Derives the minimal payload describing prev -> next.
//
// Dense works with or without prev. Sparse needs prev with equal shape and
// dtype (ShapeMismatch otherwise). Auto resolves to Dense when prev is
// absent or incompatible, else to Sparse iff the delta density is at most
// kSparseDensityThreshold. LowRank/ScaleVector are never inferred: the
// factors come from `side` (a checkpoint holding "<name>/A" and "<name>/B",
// or "<name>/v" plus optional "<name>/axis") — FactorsRequired when absent —
// and the reconstruction prev+A·B (or prev⊙v) must match next within the
// fidelity bound, else FactorMismatch.
UpdatePayload extract_update(const Tensor* prev, const Tensor& next, ExtractRequest req,
                             const ModelSnapshot* side, std::string_view name);

// One combine step: payload over the prior value, yielding a tensor of the
// declared dtype/shape. Dense ignores prior; the other kinds require it.
// Float math runs in f64 and is cast back; integer math is exact modulo the
// dtype width. Violated payload/shape invariants raise ShapeMismatch.
Tensor apply_payload(const UpdatePayload& payload, const Tensor* prior,
                     Dtype declared_dtype, std::span<const uint64_t> declared_shape);

// Serializer-facing encoding: fixed labels per kind (value | indices,values
// | A,B | v). ScaleVector's axis travels in GroupMetadata flags, not in the
// blob; payload_flags yields exactly what must be recorded.
LabeledTensors write_update(const UpdatePayload& payload);
std::map<std::string, std::string> payload_flags(const UpdatePayload& payload);
UpdatePayload read_update(UpdateKind kind, const LabeledTensors& tensors,
                          const std::map<std::string, std::string>& flags);

// Supplies prior versions of a group along the (linear, first-parent)
// history of one metadata file, newest first. steps_back = 1 is the version
// immediately before the one being resolved; nullopt once history ends or
// the group is absent there. Implementations must tolerate concurrent reads.
class PriorResolver {
public:
    virtual ~PriorResolver() = default;

    virtual std::optional<GroupMetadata> group_at(std::string_view name,
                                                  int steps_back) = 0;
    virtual Blob fetch(const ObjectPointer& ptr) = 0;
    // Upper bound on chain length; resolution raises BrokenChain past it.
    virtual int max_depth() const = 0;
};

// Reconstructs the current value of `name` as declared by `meta`, recursing
// through prior versions until a Dense record. Records identical to the one
// above them (same kind and pointer) are carried-over copies of the same
// version and are skipped during the walk. Raises PriorValueUnavailable when
// a non-Dense head has no prior version at all, BrokenChain when history
// ends (or the depth bound trips) deeper in the chain.
Tensor resolve_group(const GroupMetadata& meta, const std::string& name,
                     PriorResolver& resolver);

}  // namespace theta
