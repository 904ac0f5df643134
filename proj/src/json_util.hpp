#pragma once

#include <string_view>

#include <json.hpp>

namespace theta {

// nlohmann::json keeps object keys in std::map order, i.e. sorted — dump()
// of a tree built here is already canonical (compact, byte-lexicographic).
using Json = nlohmann::json;

// The parser accepts duplicate object keys silently (last one wins); the
// canonical formats forbid them, so callers screen inputs with this.
bool json_has_duplicate_keys(std::string_view text);

}  // namespace theta
