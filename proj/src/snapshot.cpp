#include "theta/snapshot.hpp"

#include "theta/error.hpp"

namespace theta {

bool valid_param_name(std::string_view name) {
    if (name.empty()) return false;
    size_t seg_len = 0;
    for (char c : name) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x20 || u == 0x7f) return false;
        if (c == '/') {
            if (seg_len == 0) return false;
            seg_len = 0;
        } else {
            ++seg_len;
        }
    }
    return seg_len > 0;  // no trailing '/'
}

void ModelSnapshot::put(std::string name, Tensor t) {
    if (!valid_param_name(name))
        raise(Errc::invalid_argument, "invalid parameter group name '" + name + "'");
    auto [it, inserted] = groups_.insert_or_assign(std::move(name), std::move(t));
    if (!inserted)
        raise(Errc::invalid_argument, "duplicate parameter group '" + it->first + "'");
}

const Tensor* ModelSnapshot::find(std::string_view name) const {
    auto it = groups_.find(std::string(name));
    return it == groups_.end() ? nullptr : &it->second;
}

}  // namespace theta
