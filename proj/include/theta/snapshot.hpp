#pragma once

#include <map>
#include <string>
#include <string_view>

#include "theta/tensor.hpp"

namespace theta {

// A parameter-group name: one or more non-empty '/'-joined segments, no
// control characters. Nested checkpoint structure flattens to these keys.
bool valid_param_name(std::string_view name);

// The in-memory standardized checkpoint: parameter-group name -> tensor,
// iterated in lexicographic name order so serialization is reproducible.
class ModelSnapshot {
public:
    using Map = std::map<std::string, Tensor>;

    void put(std::string name, Tensor t);
    const Tensor* find(std::string_view name) const;
    size_t size() const { return groups_.size(); }
    bool empty() const { return groups_.empty(); }

    Map::const_iterator begin() const { return groups_.begin(); }
    Map::const_iterator end() const { return groups_.end(); }

private:
    Map groups_;
};

}  // namespace theta
