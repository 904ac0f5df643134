#pragma once

#include <stdexcept>
#include <string>

namespace theta {

// Every failure surface in the library maps to one of these codes so callers
// (and tests) can dispatch on the kind of failure without string matching.
enum class Errc {
    malformed_metadata,
    unsupported_version,
    unknown_format,
    malformed_checkpoint,
    unrepresentable_dtype,
    duplicate_label,
    corrupt_container,
    storage_failure,
    object_missing,
    integrity_failure,
    shape_mismatch,
    factors_required,
    factor_mismatch,
    prior_value_unavailable,
    broken_chain,
    inapplicable_strategy,
    aborted_by_user,
    not_a_repository,
    hook_conflict,
    git_failure,
    invalid_argument,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

}  // namespace theta
