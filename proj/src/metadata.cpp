#include "theta/metadata.hpp"

#include "json_util.hpp"
#include "theta/error.hpp"
#include "theta/snapshot.hpp"
#include "theta/tensor.hpp"

namespace theta {
namespace {

constexpr std::string_view kUpdateKindNames[] = {"dense", "sparse", "low_rank",
                                                 "scale_vector"};

Json pointer_to_json(const ObjectPointer& p) {
    Json j = Json::object();
    j["oid"] = p.oid;
    j["size"] = p.size;
    return j;
}

Json group_to_json(const GroupMetadata& g) {
    Json j = Json::object();
    j["dtype"] = std::string(dtype_name(g.dtype));
    j["shape"] = g.shape;
    j["lsh"] = g.lsh.to_hex();
    j["update_kind"] = std::string(update_kind_name(g.update_kind));
    j["pointer"] = pointer_to_json(g.pointer);
    if (!g.flags.empty()) {
        Json f = Json::object();
        for (const auto& [k, v] : g.flags) f[k] = v;
        j["flags"] = f;
    }
    return j;
}

[[noreturn]] void malformed(const std::string& what) {
    raise(Errc::malformed_metadata, what);
}

const Json& require(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) malformed(std::string("missing key \"") + key + '"');
    return *it;
}

std::string require_string(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string()) malformed(std::string('"' + std::string(key)) + "\" must be a string");
    return v.get<std::string>();
}

uint64_t require_uint(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_unsigned())
        malformed(std::string('"' + std::string(key)) + "\" must be a non-negative integer");
    return v.get<uint64_t>();
}

ObjectPointer pointer_from_json(const Json& j, const std::string& group) {
    if (!j.is_object() || j.size() != 2)
        malformed("group \"" + group + "\": pointer must be {oid, size}");
    ObjectPointer p;
    p.oid = require_string(j, "oid");
    if (!valid_oid(p.oid)) malformed("group \"" + group + "\": bad oid");
    p.size = require_uint(j, "size");
    return p;
}

GroupMetadata group_from_json(const Json& j, const std::string& name) {
    if (!j.is_object()) malformed("group \"" + name + "\" must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "dtype" && key != "shape" && key != "lsh" &&
            key != "update_kind" && key != "pointer" && key != "flags")
            malformed("group \"" + name + "\": unknown key \"" + key + '"');
    }
    GroupMetadata g;

    auto dt = dtype_from_name(require_string(j, "dtype"));
    if (!dt) malformed("group \"" + name + "\": unknown dtype");
    g.dtype = *dt;

    const Json& shape = require(j, "shape");
    if (!shape.is_array()) malformed("group \"" + name + "\": shape must be an array");
    for (const Json& dim : shape) {
        if (!dim.is_number_unsigned())
            malformed("group \"" + name + "\": shape entries must be non-negative integers");
        g.shape.push_back(dim.get<uint64_t>());
    }
    shape_numel(g.shape);  // overflow check

    auto sig = LshSignature::from_hex(require_string(j, "lsh"));
    if (!sig) malformed("group \"" + name + "\": bad lsh signature");
    g.lsh = *sig;

    auto kind = update_kind_from_name(require_string(j, "update_kind"));
    if (!kind) malformed("group \"" + name + "\": unknown update_kind");
    g.update_kind = *kind;

    g.pointer = pointer_from_json(require(j, "pointer"), name);

    if (auto it = j.find("flags"); it != j.end()) {
        if (!it->is_object()) malformed("group \"" + name + "\": flags must be an object");
        if (it->empty()) malformed("group \"" + name + "\": empty flags must be omitted");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string())
                malformed("group \"" + name + "\": flag values must be strings");
            g.flags.emplace(k, v.get<std::string>());
        }
    }
    return g;
}

}  // namespace

std::string_view update_kind_name(UpdateKind k) {
    return kUpdateKindNames[static_cast<size_t>(k)];
}

std::optional<UpdateKind> update_kind_from_name(std::string_view name) {
    for (size_t i = 0; i < 4; ++i)
        if (kUpdateKindNames[i] == name) return static_cast<UpdateKind>(i);
    return std::nullopt;
}

bool valid_oid(std::string_view oid) {
    if (oid.size() != 64) return false;
    for (char c : oid)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

std::string encode_metadata(const ModelMetadata& meta) {
    if (meta.format_version != kMetadataFormatVersion)
        raise(Errc::unsupported_version,
              "cannot encode format_version " + std::to_string(meta.format_version));
    if (meta.checkpoint_type.empty())
        raise(Errc::invalid_argument, "checkpoint_type must be set");

    Json root = Json::object();
    root["format_version"] = meta.format_version;
    root["checkpoint_type"] = meta.checkpoint_type;
    Json groups = Json::object();
    for (const auto& [name, g] : meta.groups) groups[name] = group_to_json(g);
    root["groups"] = groups;
    return root.dump() + '\n';
}

ModelMetadata decode_metadata(std::string_view bytes) {
    Json root;
    try {
        root = Json::parse(bytes);
    } catch (const Json::parse_error& e) {
        malformed(std::string("not valid JSON: ") + e.what());
    }
    if (!root.is_object()) malformed("top level must be an object");
    if (json_has_duplicate_keys(bytes)) malformed("duplicate keys");
    for (const auto& [key, _] : root.items()) {
        if (key != "format_version" && key != "checkpoint_type" && key != "groups")
            malformed("unknown top-level key \"" + key + '"');
    }

    const Json& ver = require(root, "format_version");
    if (!ver.is_number_integer()) malformed("format_version must be an integer");
    int64_t v = ver.get<int64_t>();
    if (v != kMetadataFormatVersion)
        raise(Errc::unsupported_version,
              "format_version " + std::to_string(v) + " is not supported");

    ModelMetadata meta;
    meta.format_version = static_cast<int>(v);
    meta.checkpoint_type = require_string(root, "checkpoint_type");
    if (meta.checkpoint_type.empty()) malformed("checkpoint_type must be non-empty");

    const Json& groups = require(root, "groups");
    if (!groups.is_object()) malformed("groups must be an object");
    for (const auto& [name, g] : groups.items()) {
        if (!valid_param_name(name)) malformed("invalid group name \"" + name + '"');
        meta.groups.emplace(name, group_from_json(g, name));
    }
    return meta;
}

}  // namespace theta
