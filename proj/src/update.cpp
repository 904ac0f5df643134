#include "theta/update.hpp"

#include <cmath>
#include <cstring>

#include "theta/error.hpp"
#include "theta/lsh.hpp"

namespace theta {
namespace {

[[noreturn]] void bad_shape(const std::string& what) {
    raise(Errc::shape_mismatch, what);
}

bool shape_eq(std::span<const uint64_t> a, std::span<const uint64_t> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

// Integer-family updates run in 64-bit two's-complement arithmetic and
// truncate to the dtype width on store; that is exact modulo 2^(8·width),
// so new = prev + (new − prev) reconstructs bit-for-bit. Elements load
// through int_at (sign-extending), keeping mixed-width factor math correct.
void store_int(std::byte* p, Dtype d, uint64_t v) {
    size_t w = dtype_width(d);
    for (size_t i = 0; i < w; ++i)
        p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
}

void store_float(std::byte* p, Dtype d, double v) {
    switch (d) {
        case Dtype::f16: {
            uint16_t h = double_to_half(v);
            std::memcpy(p, &h, 2);
            return;
        }
        case Dtype::f32: {
            float f = static_cast<float>(v);
            std::memcpy(p, &f, 4);
            return;
        }
        case Dtype::f64:
            std::memcpy(p, &v, 8);
            return;
        default:
            raise(Errc::invalid_argument, "store_float on integer dtype");
    }
}

// --- extraction ---------------------------------------------------------

SparsePayload sparse_from_delta(const Tensor& prev, const Tensor& next) {
    const size_t w = dtype_width(next.dtype());
    std::vector<int64_t> indices;
    Blob values;
    if (dtype_is_float(next.dtype())) {
        std::vector<std::byte> elem(w);
        for (uint64_t i = 0; i < next.numel(); ++i) {
            double d = next.f64_at(i) - prev.f64_at(i);
            if (d == 0.0) continue;
            indices.push_back(static_cast<int64_t>(i));
            store_float(elem.data(), next.dtype(), d);
            values.insert(values.end(), elem.begin(), elem.end());
        }
    } else {
        std::vector<std::byte> elem(w);
        for (uint64_t i = 0; i < next.numel(); ++i) {
            uint64_t d = static_cast<uint64_t>(next.int_at(i)) -
                         static_cast<uint64_t>(prev.int_at(i));
            if ((d & (w == 8 ? ~0ull : ((1ull << (8 * w)) - 1))) == 0) continue;
            indices.push_back(static_cast<int64_t>(i));
            store_int(elem.data(), next.dtype(), d);
            values.insert(values.end(), elem.begin(), elem.end());
        }
    }
    uint64_t count = indices.size();
    return SparsePayload{Tensor::of_i64({count}, indices),
                         Tensor(next.dtype(), {count}, std::move(values))};
}

const Tensor& side_group(const ModelSnapshot* side, std::string_view name,
                         std::string_view part, std::string_view kind) {
    const Tensor* t = side ? side->find(std::string(name) + '/' + std::string(part))
                           : nullptr;
    if (!t)
        raise(Errc::factors_required,
              std::string(kind) + " update for \"" + std::string(name) +
                  "\" needs side-loaded \"" + std::string(name) + '/' +
                  std::string(part) + '"');
    return *t;
}

void verify_factors(const UpdatePayload& payload, const Tensor& prev,
                    const Tensor& next, std::string_view name) {
    Tensor recon = apply_payload(payload, &prev, next.dtype(), next.shape());
    if (dtype_is_float(next.dtype())) {
        if (!allclose(recon, next, kFidelityAtol, kFidelityRtol))
            raise(Errc::factor_mismatch,
                  "side-loaded factors do not reproduce \"" + std::string(name) +
                      "\" within tolerance");
    } else if (!recon.same_bytes(next)) {
        raise(Errc::factor_mismatch, "side-loaded factors do not reproduce \"" +
                                         std::string(name) + "\" exactly");
    }
}

UpdatePayload extract_low_rank(const Tensor* prev, const Tensor& next,
                               const ModelSnapshot* side, std::string_view name) {
    const Tensor& A = side_group(side, name, "A", "low_rank");
    const Tensor& B = side_group(side, name, "B", "low_rank");
    if (!prev)
        raise(Errc::prior_value_unavailable,
              "low_rank update for \"" + std::string(name) + "\" needs a prior value");
    UpdatePayload payload = LowRankPayload{A, B};
    verify_factors(payload, *prev, next, name);
    return payload;
}

UpdatePayload extract_scale_vector(const Tensor* prev, const Tensor& next,
                                   const ModelSnapshot* side, std::string_view name) {
    const Tensor& v = side_group(side, name, "v", "scale_vector");
    if (!prev)
        raise(Errc::prior_value_unavailable,
              "scale_vector update for \"" + std::string(name) + "\" needs a prior value");
    if (next.shape().empty())
        bad_shape("scale_vector update needs rank >= 1 (group \"" + std::string(name) + "\")");
    uint64_t axis = next.shape().size() - 1;
    if (const Tensor* at = side ? side->find(std::string(name) + "/axis") : nullptr) {
        if (dtype_is_float(at->dtype()) || at->numel() != 1)
            bad_shape("\"" + std::string(name) + "/axis\" must be one integer");
        int64_t a = at->int_at(0);
        if (a < 0 || static_cast<uint64_t>(a) >= next.shape().size())
            bad_shape("axis out of range for \"" + std::string(name) + '"');
        axis = static_cast<uint64_t>(a);
    }
    UpdatePayload payload = ScaleVectorPayload{v, axis};
    verify_factors(payload, *prev, next, name);
    return payload;
}

// --- application --------------------------------------------------------

struct Applier {
    const Tensor* prior;
    Dtype dtype;
    std::span<const uint64_t> shape;

    std::vector<uint64_t> shape_vec() const { return {shape.begin(), shape.end()}; }

    const Tensor& need_prior(const char* kind) const {
        if (!prior)
            raise(Errc::prior_value_unavailable,
                  std::string(kind) + " update needs a prior value");
        if (prior->dtype() != dtype || !shape_eq(prior->shape(), shape))
            bad_shape(std::string(kind) + " update over a prior of different shape or dtype");
        return *prior;
    }

    Tensor operator()(const DensePayload& p) const {
        if (p.value.dtype() != dtype || !shape_eq(p.value.shape(), shape))
            bad_shape("dense payload does not match the declared shape/dtype");
        return p.value;
    }

    Tensor operator()(const SparsePayload& p) const {
        const Tensor& base = need_prior("sparse");
        if (p.values.dtype() != dtype)
            bad_shape("sparse values must use the reconstructed dtype");
        Blob out = base.data();
        const size_t w = dtype_width(dtype);
        const bool flt = dtype_is_float(dtype);
        for (uint64_t k = 0; k < p.indices.numel(); ++k) {
            int64_t idx = p.indices.int_at(k);
            if (idx < 0 || static_cast<uint64_t>(idx) >= base.numel())
                bad_shape("sparse index " + std::to_string(idx) + " out of range");
            std::byte* at = out.data() + static_cast<uint64_t>(idx) * w;
            if (flt)
                store_float(at, dtype,
                            base.f64_at(static_cast<uint64_t>(idx)) + p.values.f64_at(k));
            else
                store_int(at, dtype,
                          static_cast<uint64_t>(base.int_at(static_cast<uint64_t>(idx))) +
                              static_cast<uint64_t>(p.values.int_at(k)));
        }
        return Tensor(dtype, shape_vec(), std::move(out));
    }

    Tensor operator()(const LowRankPayload& p) const {
        const Tensor& base = need_prior("low_rank");
        if (shape.size() != 2) bad_shape("low_rank update needs a rank-2 group");
        if (p.A.shape().size() != 2 || p.B.shape().size() != 2 ||
            p.A.dtype() != p.B.dtype())
            bad_shape("low_rank factors must be rank-2 tensors of one dtype");
        const uint64_t m = shape[0], n = shape[1];
        const uint64_t k = p.A.shape()[1];
        if (k < 1 || p.A.shape()[0] != m || p.B.shape()[0] != k || p.B.shape()[1] != n)
            bad_shape("low_rank factors must be M×K and K×N for the M×N group");
        const bool flt = dtype_is_float(dtype);
        if (!flt && dtype_is_float(p.A.dtype()))
            bad_shape("integer group needs integer low_rank factors");
        Blob out(base.data().size());
        const size_t w = dtype_width(dtype);
        for (uint64_t i = 0; i < m; ++i) {
            for (uint64_t j = 0; j < n; ++j) {
                uint64_t flat = i * n + j;
                std::byte* at = out.data() + flat * w;
                if (flt) {
                    double acc = 0.0;  // fixed summation order: k ascending
                    for (uint64_t kk = 0; kk < k; ++kk)
                        acc += p.A.f64_at(i * k + kk) * p.B.f64_at(kk * n + j);
                    store_float(at, dtype, base.f64_at(flat) + acc);
                } else {
                    uint64_t acc = 0;
                    for (uint64_t kk = 0; kk < k; ++kk)
                        acc += static_cast<uint64_t>(p.A.int_at(i * k + kk)) *
                               static_cast<uint64_t>(p.B.int_at(kk * n + j));
                    store_int(at, dtype, static_cast<uint64_t>(base.int_at(flat)) + acc);
                }
            }
        }
        return Tensor(dtype, shape_vec(), std::move(out));
    }

    Tensor operator()(const ScaleVectorPayload& p) const {
        const Tensor& base = need_prior("scale_vector");
        if (shape.empty()) bad_shape("scale_vector update needs rank >= 1");
        if (p.axis >= shape.size()) bad_shape("scale_vector axis out of range");
        if (p.v.shape().size() != 1 || p.v.numel() != shape[p.axis])
            bad_shape("scale_vector length must equal the extent along its axis");
        const bool flt = dtype_is_float(dtype);
        if (!flt && dtype_is_float(p.v.dtype()))
            bad_shape("integer group needs an integer scale vector");
        uint64_t stride = 1;
        for (size_t d = p.axis + 1; d < shape.size(); ++d) stride *= shape[d];
        const uint64_t extent = shape[p.axis];
        Blob out(base.data().size());
        const size_t w = dtype_width(dtype);
        for (uint64_t i = 0; i < base.numel(); ++i) {
            uint64_t coord = (i / stride) % extent;
            std::byte* at = out.data() + i * w;
            if (flt)
                store_float(at, dtype, base.f64_at(i) * p.v.f64_at(coord));
            else
                store_int(at, dtype,
                          static_cast<uint64_t>(base.int_at(i)) *
                              static_cast<uint64_t>(p.v.int_at(coord)));
        }
        return Tensor(dtype, shape_vec(), std::move(out));
    }
};

[[noreturn]] void bad_payload(const std::string& what) {
    raise(Errc::malformed_metadata, what);
}

const Tensor& labeled(const LabeledTensors& tensors, size_t i, std::string_view label) {
    if (i >= tensors.size() || tensors[i].first != label)
        bad_payload("stored payload is missing tensor \"" + std::string(label) + '"');
    return tensors[i].second;
}

// --- resolution ---------------------------------------------------------

Tensor resolve_at(const GroupMetadata& meta, const std::string& name,
                  PriorResolver& resolver, int steps_base, int depth) {
    if (depth > resolver.max_depth())
        raise(Errc::broken_chain,
              "group \"" + name + "\": chain exceeds the depth bound");
    UpdatePayload payload =
        read_update(meta.update_kind, deserialize_tensors(resolver.fetch(meta.pointer)),
                    meta.flags);
    if (meta.update_kind == UpdateKind::dense)
        return apply_payload(payload, nullptr, meta.dtype, meta.shape);

    int k = steps_base + 1;
    std::optional<GroupMetadata> prior_meta;
    for (;; ++k) {
        auto g = resolver.group_at(name, k);
        if (!g) {
            if (steps_base == 0)
                raise(Errc::prior_value_unavailable,
                      "group \"" + name + "\": " +
                          std::string(update_kind_name(meta.update_kind)) +
                          " record has no prior version");
            raise(Errc::broken_chain,
                  "group \"" + name + "\": history ends before a dense record");
        }
        if (!g->same_record(meta)) {
            prior_meta = std::move(g);
            break;
        }
        // Identical record: a carried-over copy of this same version.
    }
    Tensor prior = resolve_at(*prior_meta, name, resolver, k, depth + 1);
    return apply_payload(payload, &prior, meta.dtype, meta.shape);
}

}  // namespace

UpdateKind payload_kind(const UpdatePayload& p) {
    return static_cast<UpdateKind>(p.index());
}

std::optional<ExtractRequest> extract_request_from_name(std::string_view name) {
    if (name == "auto") return ExtractRequest::auto_pick;
    if (name == "dense") return ExtractRequest::dense;
    if (name == "sparse") return ExtractRequest::sparse;
    if (name == "low_rank") return ExtractRequest::low_rank;
    if (name == "scale_vector") return ExtractRequest::scale_vector;
    return std::nullopt;
}

UpdatePayload extract_update(const Tensor* prev, const Tensor& next, ExtractRequest req,
                             const ModelSnapshot* side, std::string_view name) {
    switch (req) {
        case ExtractRequest::dense:
            return DensePayload{next};
        case ExtractRequest::auto_pick: {
            if (!prev || prev->dtype() != next.dtype() || prev->shape() != next.shape())
                return DensePayload{next};
            SparsePayload sp = sparse_from_delta(*prev, next);
            double density = next.numel() == 0
                                 ? 0.0
                                 : static_cast<double>(sp.indices.numel()) /
                                       static_cast<double>(next.numel());
            if (density <= kSparseDensityThreshold) return sp;
            return DensePayload{next};
        }
        case ExtractRequest::sparse: {
            if (!prev)
                raise(Errc::prior_value_unavailable,
                      "sparse update for \"" + std::string(name) + "\" needs a prior value");
            if (prev->dtype() != next.dtype() || prev->shape() != next.shape())
                bad_shape("sparse update for \"" + std::string(name) +
                          "\" needs matching shape and dtype");
            return sparse_from_delta(*prev, next);
        }
        case ExtractRequest::low_rank:
            return extract_low_rank(prev, next, side, name);
        case ExtractRequest::scale_vector:
            return extract_scale_vector(prev, next, side, name);
    }
    raise(Errc::invalid_argument, "unknown extract request");
}

Tensor apply_payload(const UpdatePayload& payload, const Tensor* prior,
                     Dtype declared_dtype, std::span<const uint64_t> declared_shape) {
    return std::visit(Applier{prior, declared_dtype, declared_shape}, payload);
}

LabeledTensors write_update(const UpdatePayload& payload) {
    LabeledTensors out;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, DensePayload>) {
                out.emplace_back("value", p.value);
            } else if constexpr (std::is_same_v<P, SparsePayload>) {
                out.emplace_back("indices", p.indices);
                out.emplace_back("values", p.values);
            } else if constexpr (std::is_same_v<P, LowRankPayload>) {
                out.emplace_back("A", p.A);
                out.emplace_back("B", p.B);
            } else {
                out.emplace_back("v", p.v);
            }
        },
        payload);
    return out;
}

std::map<std::string, std::string> payload_flags(const UpdatePayload& payload) {
    if (const auto* sv = std::get_if<ScaleVectorPayload>(&payload))
        return {{"axis", std::to_string(sv->axis)}};
    return {};
}

UpdatePayload read_update(UpdateKind kind, const LabeledTensors& tensors,
                          const std::map<std::string, std::string>& flags) {
    switch (kind) {
        case UpdateKind::dense: {
            if (tensors.size() != 1) bad_payload("dense payload must hold one tensor");
            return DensePayload{labeled(tensors, 0, "value")};
        }
        case UpdateKind::sparse: {
            if (tensors.size() != 2) bad_payload("sparse payload must hold two tensors");
            const Tensor& idx = labeled(tensors, 0, "indices");
            const Tensor& val = labeled(tensors, 1, "values");
            if (idx.dtype() != Dtype::i64 || idx.shape().size() != 1)
                bad_payload("sparse indices must be a rank-1 i64 tensor");
            if (val.shape().size() != 1 || val.numel() != idx.numel())
                bad_payload("sparse values must pair up with the indices");
            for (uint64_t k = 1; k < idx.numel(); ++k)
                if (idx.int_at(k - 1) >= idx.int_at(k))
                    bad_payload("sparse indices must be strictly increasing");
            return SparsePayload{idx, val};
        }
        case UpdateKind::low_rank: {
            if (tensors.size() != 2) bad_payload("low_rank payload must hold two tensors");
            const Tensor& a = labeled(tensors, 0, "A");
            const Tensor& b = labeled(tensors, 1, "B");
            if (a.shape().size() != 2 || b.shape().size() != 2 || a.dtype() != b.dtype() ||
                a.shape()[1] != b.shape()[0] || a.shape()[1] < 1)
                bad_payload("low_rank factors must be M×K and K×N with one dtype");
            return LowRankPayload{a, b};
        }
        case UpdateKind::scale_vector: {
            if (tensors.size() != 1) bad_payload("scale_vector payload must hold one tensor");
            const Tensor& v = labeled(tensors, 0, "v");
            if (v.shape().size() != 1) bad_payload("scale vector must be rank-1");
            auto it = flags.find("axis");
            if (it == flags.end()) bad_payload("scale_vector record must carry an axis flag");
            uint64_t axis = 0;
            for (char c : it->second) {
                if (c < '0' || c > '9') bad_payload("axis flag must be a decimal integer");
                axis = axis * 10 + static_cast<uint64_t>(c - '0');
                if (axis > 255) bad_payload("axis flag out of range");
            }
            if (it->second.empty()) bad_payload("axis flag must be a decimal integer");
            return ScaleVectorPayload{v, axis};
        }
    }
    raise(Errc::invalid_argument, "unknown update kind");
}

Tensor resolve_group(const GroupMetadata& meta, const std::string& name,
                     PriorResolver& resolver) {
    return resolve_at(meta, name, resolver, 0, 0);
}

}  // namespace theta
