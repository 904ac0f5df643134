#include "json_util.hpp"

#include <string>
#include <vector>

namespace theta {

bool json_has_duplicate_keys(std::string_view text) {
    std::vector<std::vector<std::string>> stack;
    bool dup = false;
    auto cb = [&](int /*depth*/, Json::parse_event_t ev, Json& parsed) {
        switch (ev) {
            case Json::parse_event_t::object_start:
                stack.emplace_back();
                break;
            case Json::parse_event_t::key: {
                auto& keys = stack.back();
                std::string k = parsed.get<std::string>();
                for (const auto& seen : keys)
                    if (seen == k) dup = true;
                keys.push_back(std::move(k));
                break;
            }
            case Json::parse_event_t::object_end:
                stack.pop_back();
                break;
            default:
                break;
        }
        return true;
    };
    try {
        [[maybe_unused]] Json tree = Json::parse(text, cb);
    } catch (const Json::parse_error&) {
        return false;  // malformed text is the caller's parse error to report
    }
    return dup;
}

}  // namespace theta
