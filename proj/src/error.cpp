#include "theta/error.hpp"

namespace theta {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::malformed_metadata: return "MalformedMetadata";
        case Errc::unsupported_version: return "UnsupportedVersion";
        case Errc::unknown_format: return "UnknownFormat";
        case Errc::malformed_checkpoint: return "MalformedCheckpoint";
        case Errc::unrepresentable_dtype: return "UnrepresentableDtype";
        case Errc::duplicate_label: return "DuplicateLabel";
        case Errc::corrupt_container: return "CorruptContainer";
        case Errc::storage_failure: return "StorageFailure";
        case Errc::object_missing: return "ObjectMissing";
        case Errc::integrity_failure: return "IntegrityFailure";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::factors_required: return "FactorsRequired";
        case Errc::factor_mismatch: return "FactorMismatch";
        case Errc::prior_value_unavailable: return "PriorValueUnavailable";
        case Errc::broken_chain: return "BrokenChain";
        case Errc::inapplicable_strategy: return "InapplicableStrategy";
        case Errc::aborted_by_user: return "AbortedByUser";
        case Errc::not_a_repository: return "NotARepository";
        case Errc::hook_conflict: return "HookConflict";
        case Errc::git_failure: return "GitFailure";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Error";
}

}  // namespace theta
