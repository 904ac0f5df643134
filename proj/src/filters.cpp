#include "theta/filters.hpp"

#include <thread>

#include "theta/checkpoint.hpp"
#include "theta/container.hpp"
#include "theta/error.hpp"
#include "theta/util.hpp"

namespace theta {
namespace {

unsigned worker_count(unsigned requested) {
    if (requested) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 4;
}

const GroupMetadata* prev_group(const CleanContext& ctx, const std::string& name) {
    if (!ctx.prev) return nullptr;
    auto it = ctx.prev->groups.find(name);
    return it == ctx.prev->groups.end() ? nullptr : &it->second;
}

GroupMetadata store_update(const CleanContext& ctx, const Tensor& value,
                           const UpdatePayload& payload) {
    GroupMetadata g;
    g.dtype = value.dtype();
    g.shape = value.shape();
    g.lsh = lsh_signature(value, ctx.lsh);
    g.update_kind = payload_kind(payload);
    g.pointer = ctx.store->put(serialize_tensors(write_update(payload)));
    g.flags = payload_flags(payload);
    return g;
}

GroupMetadata clean_group(const CleanContext& ctx, const std::string& name,
                          const Tensor& value) {
    const GroupMetadata* prev = prev_group(ctx, name);

    // The previous tensor serves both the closeness check and extraction;
    // resolve it at most once.
    std::optional<Tensor> prev_value;
    auto load_prev = [&]() -> const Tensor& {
        if (!prev_value) {
            if (!ctx.resolver)
                raise(Errc::prior_value_unavailable,
                      "no history available to load the previous \"" + name + '"');
            prev_value = resolve_group(*prev, name, *ctx.resolver);
        }
        return *prev_value;
    };

    if (prev) {
        Change change = lsh_compare(*prev, value, [&] { return load_prev(); }, ctx.band);
        if (change == Change::unchanged) return *prev;  // reuse the stored object
        load_prev();
    }

    GroupMetadata g = store_update(
        ctx, value,
        extract_update(prev_value ? &*prev_value : nullptr, value, ctx.request,
                       ctx.side, name));

    // A non-dense record identical to the previous one is indistinguishable
    // from an unchanged carry-over, which would make resolution apply it
    // once instead of twice. Storing dense instead keeps the chain
    // unambiguous (repeating the same dense record is genuinely a no-op).
    if (prev && g.update_kind != UpdateKind::dense && g.same_record(*prev))
        g = store_update(ctx, value, DensePayload{value});
    return g;
}

}  // namespace

std::string filter_clean(const Blob& checkpoint_bytes, const CleanContext& ctx) {
    if (!ctx.store) raise(Errc::invalid_argument, "clean filter needs an object store");
    ModelSnapshot snapshot = load_checkpoint(ctx.checkpoint_type, checkpoint_bytes);

    std::vector<std::pair<const std::string*, const Tensor*>> groups;
    groups.reserve(snapshot.size());
    for (const auto& [name, tensor] : snapshot) groups.emplace_back(&name, &tensor);

    std::vector<GroupMetadata> results(groups.size());
    parallel_for(groups.size(), worker_count(ctx.workers), [&](uint64_t i) {
        results[i] = clean_group(ctx, *groups[i].first, *groups[i].second);
    });

    ModelMetadata meta;
    meta.checkpoint_type = ctx.checkpoint_type;
    for (size_t i = 0; i < groups.size(); ++i)
        meta.groups.emplace(*groups[i].first, std::move(results[i]));
    return encode_metadata(meta);
}

Blob filter_smudge(std::string_view metadata_bytes, PriorResolver& resolver,
                   unsigned workers) {
    ModelMetadata meta = decode_metadata(metadata_bytes);

    std::vector<std::pair<const std::string*, const GroupMetadata*>> groups;
    groups.reserve(meta.groups.size());
    for (const auto& [name, g] : meta.groups) groups.emplace_back(&name, &g);

    std::vector<std::optional<Tensor>> values(groups.size());
    parallel_for(groups.size(), worker_count(workers), [&](uint64_t i) {
        values[i] = resolve_group(*groups[i].second, *groups[i].first, resolver);
    });

    ModelSnapshot snapshot;
    for (size_t i = 0; i < groups.size(); ++i)
        snapshot.put(*groups[i].first, std::move(*values[i]));
    return save_checkpoint(meta.checkpoint_type, snapshot);
}

}  // namespace theta
