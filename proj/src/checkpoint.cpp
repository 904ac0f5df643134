#include "theta/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "json_util.hpp"
#include "theta/container.hpp"
#include "theta/error.hpp"
#include "theta/util.hpp"

namespace theta {
namespace {

[[noreturn]] void malformed(const std::string& what) {
    raise(Errc::malformed_checkpoint, what);
}

class FlatBinFormat final : public CheckpointFormat {
public:
    std::string_view key() const override { return "flat-bin"; }

    ModelSnapshot load(const Blob& bytes) const override {
        LabeledTensors tensors;
        try {
            tensors = deserialize_tensors(bytes);
        } catch (const Error& e) {
            malformed(std::string("flat-bin: ") + e.what());
        }
        ModelSnapshot snap;
        for (auto& [name, t] : tensors) {
            if (!valid_param_name(name))
                malformed("flat-bin: \"" + name + "\" is not a valid group name");
            snap.put(name, std::move(t));
        }
        return snap;
    }

    Blob save(const ModelSnapshot& snapshot) const override {
        LabeledTensors tensors;
        for (const auto& [name, t] : snapshot) tensors.emplace_back(name, t);
        return serialize_tensors(tensors);
    }
};

// json-text holds values as JSON numbers, so only dtypes whose values
// round-trip through them are allowed: f64 via shortest-form rendering,
// f32 exactly embedded in f64, i32/i64 as native integer tokens.
bool json_text_dtype(Dtype d) {
    return d == Dtype::f32 || d == Dtype::f64 || d == Dtype::i32 || d == Dtype::i64;
}

class JsonTextFormat final : public CheckpointFormat {
public:
    std::string_view key() const override { return "json-text"; }

    ModelSnapshot load(const Blob& bytes) const override {
        std::string_view text = as_string_view(bytes);
        Json root;
        try {
            root = Json::parse(text);
        } catch (const Json::parse_error& e) {
            malformed("json-text: parse failure at byte " + std::to_string(e.byte));
        }
        if (!root.is_object()) malformed("json-text: top level must be an object");
        if (json_has_duplicate_keys(text)) malformed("json-text: duplicate keys");

        ModelSnapshot snap;
        for (const auto& [name, spec] : root.items()) {
            if (!valid_param_name(name))
                malformed("json-text: \"" + name + "\" is not a valid group name");
            snap.put(name, parse_tensor(spec, name));
        }
        return snap;
    }

    Blob save(const ModelSnapshot& snapshot) const override {
        Json root = Json::object();
        for (const auto& [name, t] : snapshot) {
            if (!json_text_dtype(t.dtype()))
                raise(Errc::unrepresentable_dtype,
                      "json-text cannot hold " + std::string(dtype_name(t.dtype())) +
                          " (group \"" + name + "\")");
            Json spec = Json::object();
            spec["dtype"] = std::string(dtype_name(t.dtype()));
            spec["shape"] = t.shape();
            Json data = Json::array();
            if (dtype_is_float(t.dtype())) {
                for (uint64_t i = 0; i < t.numel(); ++i) {
                    double v = t.f64_at(i);
                    if (!std::isfinite(v))
                        raise(Errc::unrepresentable_dtype,
                              "json-text cannot hold non-finite values (group \"" +
                                  name + "\")");
                    data.push_back(v);
                }
            } else {
                for (uint64_t i = 0; i < t.numel(); ++i) data.push_back(t.int_at(i));
            }
            spec["data"] = std::move(data);
            root[name] = std::move(spec);
        }
        std::string text = root.dump();
        text += '\n';
        return to_blob(text);
    }

private:
    static Tensor parse_tensor(const Json& spec, const std::string& name) {
        if (!spec.is_object() || spec.size() != 3 || !spec.contains("dtype") ||
            !spec.contains("shape") || !spec.contains("data"))
            malformed("json-text: group \"" + name + "\" must be {dtype, shape, data}");

        const Json& jd = spec["dtype"];
        if (!jd.is_string()) malformed("json-text: group \"" + name + "\": dtype must be a string");
        auto dtype = dtype_from_name(jd.get<std::string>());
        if (!dtype || !json_text_dtype(*dtype))
            malformed("json-text: group \"" + name + "\": unsupported dtype");

        const Json& js = spec["shape"];
        if (!js.is_array()) malformed("json-text: group \"" + name + "\": shape must be an array");
        std::vector<uint64_t> shape;
        for (const Json& d : js) {
            if (!d.is_number_unsigned())
                malformed("json-text: group \"" + name +
                          "\": shape entries must be non-negative integers");
            shape.push_back(d.get<uint64_t>());
        }
        uint64_t numel = shape_numel(shape);

        const Json& jv = spec["data"];
        if (!jv.is_array() || jv.size() != numel)
            malformed("json-text: group \"" + name + "\": data must hold " +
                      std::to_string(numel) + " numbers");

        std::vector<double> values;
        values.reserve(numel);
        for (const Json& v : jv) {
            if (dtype_is_float(*dtype)) {
                if (!v.is_number())
                    malformed("json-text: group \"" + name + "\": data entries must be numbers");
                values.push_back(v.get<double>());
            } else {
                if (!v.is_number_integer() && !v.is_number_unsigned())
                    malformed("json-text: group \"" + name + "\": data entries must be integers");
                if (v.is_number_unsigned() &&
                    v.get<uint64_t>() > uint64_t(std::numeric_limits<int64_t>::max()))
                    malformed("json-text: group \"" + name + "\": integer out of range");
                int64_t iv = v.get<int64_t>();
                if (*dtype == Dtype::i32 &&
                    (iv < std::numeric_limits<int32_t>::min() ||
                     iv > std::numeric_limits<int32_t>::max()))
                    malformed("json-text: group \"" + name + "\": value does not fit i32");
                values.push_back(static_cast<double>(iv));
            }
        }
        if (*dtype == Dtype::i64) {
            // Route around the f64 mantissa: build from the exact integers.
            std::vector<int64_t> exact;
            exact.reserve(numel);
            for (const Json& v : jv) exact.push_back(v.get<int64_t>());
            return Tensor::of_i64(std::move(shape), exact);
        }
        return Tensor::from_f64(*dtype, std::move(shape), values);
    }
};

}  // namespace

const CheckpointFormat& checkpoint_format(std::string_view key) {
    static const FlatBinFormat flat_bin;
    static const JsonTextFormat json_text;
    if (key == flat_bin.key()) return flat_bin;
    if (key == json_text.key()) return json_text;
    raise(Errc::unknown_format, "no checkpoint format \"" + std::string(key) + '"');
}

std::vector<std::string_view> checkpoint_format_keys() {
    return {"flat-bin", "json-text"};
}

ModelSnapshot load_checkpoint(std::string_view format_key, const Blob& bytes) {
    return checkpoint_format(format_key).load(bytes);
}

Blob save_checkpoint(std::string_view format_key, const ModelSnapshot& snapshot) {
    return checkpoint_format(format_key).save(snapshot);
}

}  // namespace theta
