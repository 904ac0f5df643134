#include "theta/merge.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "theta/container.hpp"
#include "theta/error.hpp"
#include "theta/lsh.hpp"
#include "theta/update.hpp"

namespace theta {
namespace {

const GroupMetadata* find_group(const ModelMetadata& m, const std::string& name) {
    auto it = m.groups.find(name);
    return it == m.groups.end() ? nullptr : &it->second;
}

bool same_presence_content(const GroupMetadata* a, const GroupMetadata* b) {
    if (!a || !b) return !a && !b;
    return a->same_content(*b);
}

std::set<std::string> name_union(std::initializer_list<const ModelMetadata*> metas) {
    std::set<std::string> names;
    for (const ModelMetadata* m : metas)
        for (const auto& [name, _] : m->groups) names.insert(name);
    return names;
}

bool always(const MergeConflict&) { return true; }

bool average_applicable(const MergeConflict& c) {
    return c.ours && c.theirs && c.ours->dtype == c.theirs->dtype &&
           c.ours->shape == c.theirs->shape;
}

constexpr MergeStrategy kStrategies[] = {
    {"ours", "keep this branch's version", always},
    {"theirs", "take the other branch's version", always},
    {"ancestor", "fall back to the common ancestor's version", always},
    {"average", "store the elementwise mean of both branches", average_applicable},
};

std::string describe_side(const std::optional<GroupMetadata>& g) {
    if (!g) return "absent";
    return std::string(dtype_name(g->dtype)) + shape_to_string(g->shape) + ' ' +
           std::string(update_kind_name(g->update_kind));
}

}  // namespace

std::vector<GroupChange> diff_models(const ModelMetadata& old_meta,
                                     const ModelMetadata& new_meta) {
    std::vector<GroupChange> out;
    for (const std::string& name : name_union({&old_meta, &new_meta})) {
        const GroupMetadata* o = find_group(old_meta, name);
        const GroupMetadata* n = find_group(new_meta, name);
        if (o && !n) {
            out.push_back({name, ChangeStatus::removed, {}, {}});
        } else if (!o && n) {
            out.push_back({name, ChangeStatus::added, {}, {}});
        } else if (o && n && !o->same_content(*n)) {
            GroupChange c{name, ChangeStatus::modified, {}, {}};
            if (o->shape != n->shape) c.shape_change = {{o->shape, n->shape}};
            if (o->dtype != n->dtype) c.dtype_change = {{o->dtype, n->dtype}};
            out.push_back(std::move(c));
        }
    }
    return out;  // std::set iteration is already name-sorted
}

std::string render_diff(const std::vector<GroupChange>& changes) {
    std::string out;
    for (const GroupChange& c : changes) {
        switch (c.status) {
            case ChangeStatus::added: out += "A "; break;
            case ChangeStatus::removed: out += "D "; break;
            case ChangeStatus::modified: out += "M "; break;
        }
        out += c.name;
        if (c.shape_change)
            out += " shape " + shape_to_string(c.shape_change->first) + "->" +
                   shape_to_string(c.shape_change->second);
        if (c.dtype_change)
            out += " dtype " + std::string(dtype_name(c.dtype_change->first)) + "->" +
                   std::string(dtype_name(c.dtype_change->second));
        out += '\n';
    }
    return out;
}

MergeAnalysis detect_conflicts(const ModelMetadata& ancestor, const ModelMetadata& ours,
                               const ModelMetadata& theirs) {
    MergeAnalysis res;
    for (const std::string& name : name_union({&ancestor, &ours, &theirs})) {
        const GroupMetadata* a = find_group(ancestor, name);
        const GroupMetadata* o = find_group(ours, name);
        const GroupMetadata* t = find_group(theirs, name);

        auto keep = [&](const GroupMetadata* g) {
            res.auto_resolved.emplace(name,
                                      g ? std::optional<GroupMetadata>(*g) : std::nullopt);
        };
        if (same_presence_content(o, t)) {
            keep(o);  // convergent (or untouched); ours' record keeps the
                      // first-parent chain resolvable
        } else if (same_presence_content(a, o)) {
            keep(t);  // changed only in theirs
        } else if (same_presence_content(a, t)) {
            keep(o);  // changed only in ours
        } else {
            res.conflicts.push_back(
                {name, a ? std::optional<GroupMetadata>(*a) : std::nullopt,
                 o ? std::optional<GroupMetadata>(*o) : std::nullopt,
                 t ? std::optional<GroupMetadata>(*t) : std::nullopt});
        }
    }
    return res;
}

std::span<const MergeStrategy> merge_strategies() { return kStrategies; }

const MergeStrategy* find_strategy(std::string_view keyword) {
    for (const MergeStrategy& s : kStrategies)
        if (s.keyword == keyword) return &s;
    return nullptr;
}

std::optional<GroupMetadata> resolve_conflict(const MergeConflict& conflict,
                                              std::string_view keyword,
                                              const MergeContext& ctx) {
    const MergeStrategy* strategy = find_strategy(keyword);
    if (!strategy)
        raise(Errc::inapplicable_strategy,
              "no merge strategy \"" + std::string(keyword) + '"');
    if (!strategy->applicable(conflict))
        raise(Errc::inapplicable_strategy,
              '"' + std::string(keyword) + "\" cannot resolve \"" + conflict.name + '"');

    if (keyword == "ours") return conflict.ours;
    if (keyword == "theirs") return conflict.theirs;
    if (keyword == "ancestor") return conflict.ancestor;

    // average
    Tensor ours_t = ctx.load_ours(*conflict.ours, conflict.name);
    Tensor theirs_t = ctx.load_theirs(*conflict.theirs, conflict.name);
    if (ours_t.dtype() != theirs_t.dtype() || ours_t.shape() != theirs_t.shape())
        raise(Errc::shape_mismatch,
              "sides of \"" + conflict.name + "\" disagree after reconstruction");

    std::vector<double> mean(ours_t.numel());
    for (uint64_t i = 0; i < ours_t.numel(); ++i)
        mean[i] = (ours_t.f64_at(i) + theirs_t.f64_at(i)) / 2.0;  // symmetric in the sides
    Tensor merged = Tensor::from_f64(ours_t.dtype(), ours_t.shape(), mean);

    GroupMetadata g;
    g.dtype = merged.dtype();
    g.shape = merged.shape();
    g.lsh = lsh_signature(merged);
    g.update_kind = UpdateKind::dense;
    g.pointer = ctx.store->put(serialize_tensors(write_update(DensePayload{merged})));
    return g;
}

std::map<std::string, std::string> present_menu(
    const std::vector<MergeConflict>& conflicts, std::istream& in, std::ostream& out,
    bool interactive, std::string_view default_keyword) {
    std::map<std::string, std::string> choice;
    if (!interactive) {
        if (default_keyword.empty())
            raise(Errc::aborted_by_user,
                  "conflicts present and no interactive terminal; set theta.mergeDefault "
                  "to resolve without prompting");
        for (const MergeConflict& c : conflicts) choice[c.name] = default_keyword;
        return choice;
    }

    size_t n = 0;
    for (const MergeConflict& c : conflicts) {
        ++n;
        out << "conflict " << n << '/' << conflicts.size() << ": " << c.name << '\n'
            << "  ours:     " << describe_side(c.ours) << '\n'
            << "  theirs:   " << describe_side(c.theirs) << '\n'
            << "  ancestor: " << describe_side(c.ancestor) << '\n';
        for (const MergeStrategy& s : kStrategies)
            if (s.applicable(c))
                out << "    " << s.keyword << std::string(10 - s.keyword.size(), ' ')
                    << s.summary << '\n';

        // One prompt plus at most three re-prompts.
        bool chosen = false;
        for (int attempt = 0; attempt < 4 && !chosen; ++attempt) {
            out << "resolve " << c.name << "> " << std::flush;
            std::string line;
            if (!std::getline(in, line))
                raise(Errc::aborted_by_user, "input closed during conflict resolution");
            while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                line.pop_back();
            size_t start = line.find_first_not_of(' ');
            if (start != std::string::npos) line = line.substr(start);
            const MergeStrategy* s = find_strategy(line);
            if (s && s->applicable(c)) {
                choice[c.name] = line;
                chosen = true;
            } else {
                out << "  \"" << line << "\" is not an applicable strategy here\n";
            }
        }
        if (!chosen)
            raise(Errc::aborted_by_user,
                  "no valid strategy chosen for \"" + c.name + '"');
    }
    return choice;
}

}  // namespace theta
