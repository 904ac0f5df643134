#include <doctest.h>

#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "theta/container.hpp"
#include "theta/error.hpp"
#include "theta/lsh.hpp"
#include "theta/merge.hpp"
#include "theta/object_store.hpp"
#include "theta/update.hpp"

#include "helpers.hpp"

using namespace theta;
using theta::test::make_rng;
using theta::test::object_count;
using theta::test::random_dtype;
using theta::test::random_shape;
using theta::test::random_tensor;
using theta::test::TempDir;

namespace {

Tensor f32v(std::vector<double> v) {
    return Tensor::from_f64(Dtype::f32, {v.size()}, v);
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::invalid_argument;  // placeholder: callers expect a throw
}

// Metadata describing `t` with a synthetic stored record (diff and conflict
// detection never dereference the pointer).
GroupMetadata group_of(const Tensor& t, char tag = 'a') {
    GroupMetadata g;
    g.dtype = t.dtype();
    g.shape = t.shape();
    g.lsh = lsh_signature(t);
    g.update_kind = UpdateKind::dense;
    g.pointer = ObjectPointer{std::string(64, tag), t.data().size()};
    return g;
}

ModelMetadata model_of(std::map<std::string, Tensor> tensors, char tag = 'a') {
    ModelMetadata m;
    m.checkpoint_type = "flat-bin";
    for (const auto& [name, t] : tensors) m.groups.emplace(name, group_of(t, tag));
    return m;
}

bool same_change(const GroupChange& got, const GroupChange& want) {
    return got.name == want.name && got.status == want.status &&
           got.shape_change == want.shape_change &&
           got.dtype_change == want.dtype_change;
}

// Independent re-derivation of the diff contract from the two group maps.
std::vector<GroupChange> oracle_diff(const ModelMetadata& a, const ModelMetadata& b) {
    std::set<std::string> names;
    for (const auto& [n, g] : a.groups) names.insert(n);
    for (const auto& [n, g] : b.groups) names.insert(n);
    std::vector<GroupChange> out;
    for (const std::string& n : names) {
        auto ia = a.groups.find(n);
        auto ib = b.groups.find(n);
        if (ia == a.groups.end()) {
            out.push_back({n, ChangeStatus::added, {}, {}});
        } else if (ib == b.groups.end()) {
            out.push_back({n, ChangeStatus::removed, {}, {}});
        } else if (!(ia->second.lsh == ib->second.lsh &&
                     ia->second.shape == ib->second.shape &&
                     ia->second.dtype == ib->second.dtype)) {
            GroupChange c{n, ChangeStatus::modified, {}, {}};
            if (ia->second.shape != ib->second.shape)
                c.shape_change = {{ia->second.shape, ib->second.shape}};
            if (ia->second.dtype != ib->second.dtype)
                c.dtype_change = {{ia->second.dtype, ib->second.dtype}};
            out.push_back(std::move(c));
        }
    }
    return out;  // std::set iteration is already name-sorted
}

MergeConflict conflict_over(const Tensor& ancestor, const Tensor& ours,
                            const Tensor& theirs) {
    return MergeConflict{"w", group_of(ancestor, 'a'), group_of(ours, 'b'),
                         group_of(theirs, 'c')};
}

}  // namespace

TEST_CASE("diff reports removals, modifications and additions by name") {
    auto rng = make_rng(91);
    Tensor ta = random_tensor(rng, Dtype::f32, {4});
    Tensor tb = random_tensor(rng, Dtype::f32, {4});
    Tensor tb2 = random_tensor(rng, Dtype::f32, {4});
    Tensor tc = random_tensor(rng, Dtype::f32, {4});

    ModelMetadata old_meta = model_of({{"a", ta}, {"b", tb}});
    ModelMetadata new_meta = model_of({{"b", tb2}, {"c", tc}});

    std::vector<GroupChange> d = diff_models(old_meta, new_meta);
    REQUIRE(d.size() == 3);
    CHECK(d[0].name == "a");
    CHECK(d[0].status == ChangeStatus::removed);
    CHECK(d[1].name == "b");
    CHECK(d[1].status == ChangeStatus::modified);
    CHECK_FALSE(d[1].shape_change.has_value());
    CHECK_FALSE(d[1].dtype_change.has_value());
    CHECK(d[2].name == "c");
    CHECK(d[2].status == ChangeStatus::added);

    CHECK(render_diff(d) == "D a\nM b\nA c\n");
}

TEST_CASE("diff render spells out shape and dtype clauses") {
    Tensor before = Tensor::zeros(Dtype::f32, {2, 2});
    Tensor after = Tensor::zeros(Dtype::f64, {2, 3});
    ModelMetadata old_meta = model_of({{"w", before}});
    ModelMetadata new_meta = model_of({{"w", after}});
    std::vector<GroupChange> d = diff_models(old_meta, new_meta);
    REQUIRE(d.size() == 1);
    REQUIRE(d[0].shape_change.has_value());
    CHECK(d[0].shape_change->first == std::vector<uint64_t>{2, 2});
    CHECK(d[0].shape_change->second == std::vector<uint64_t>{2, 3});
    REQUIRE(d[0].dtype_change.has_value());
    CHECK(render_diff(d) == "M w shape [2,2]->[2,3] dtype f32->f64\n");
}

TEST_CASE("diff of a model with itself is empty and swapping flips direction") {
    auto rng = make_rng(92);
    ModelMetadata m = model_of({{"x", random_tensor(rng, Dtype::f32, {3})},
                                {"y", random_tensor(rng, Dtype::i32, {2, 2})}});
    CHECK(diff_models(m, m).empty());

    ModelMetadata n = model_of({{"y", random_tensor(rng, Dtype::i32, {2, 2})},
                                {"z", random_tensor(rng, Dtype::f32, {5})}});
    std::vector<GroupChange> fwd = diff_models(m, n);
    std::vector<GroupChange> rev = diff_models(n, m);
    REQUIRE(fwd.size() == rev.size());
    for (const GroupChange& c : fwd) {
        auto it = std::find_if(rev.begin(), rev.end(),
                               [&](const GroupChange& r) { return r.name == c.name; });
        REQUIRE(it != rev.end());
        if (c.status == ChangeStatus::added) CHECK(it->status == ChangeStatus::removed);
        if (c.status == ChangeStatus::removed) CHECK(it->status == ChangeStatus::added);
        if (c.status == ChangeStatus::modified) {
            CHECK(it->status == ChangeStatus::modified);
            if (c.shape_change)
                CHECK(it->shape_change->first == c.shape_change->second);
        }
    }
}

TEST_CASE("200 random mutations agree with a brute-force diff oracle") {
    auto rng = make_rng(93);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, Tensor> base;
        int n_groups = 3 + int(rng() % 6);
        for (int i = 0; i < n_groups; ++i)
            base.emplace("g" + std::to_string(i),
                         random_tensor(rng, random_dtype(rng), random_shape(rng, 16)));

        std::map<std::string, Tensor> mutated = base;
        int n_mutations = 1 + int(rng() % 4);
        for (int k = 0; k < n_mutations; ++k) {
            switch (rng() % 4) {
                case 0:
                    mutated.insert_or_assign(
                        "extra" + std::to_string(rng() % 3),
                        random_tensor(rng, random_dtype(rng), random_shape(rng, 16)));
                    break;
                case 1:
                    if (!mutated.empty()) {
                        auto it = mutated.begin();
                        std::advance(it, rng() % mutated.size());
                        mutated.erase(it);
                    }
                    break;
                default:
                    if (!mutated.empty()) {
                        auto it = mutated.begin();
                        std::advance(it, rng() % mutated.size());
                        it->second = random_tensor(rng, random_dtype(rng),
                                                   random_shape(rng, 16));
                    }
                    break;
            }
        }

        ModelMetadata old_meta = model_of(base);
        ModelMetadata new_meta = model_of(mutated);
        std::vector<GroupChange> got = diff_models(old_meta, new_meta);
        std::vector<GroupChange> want = oracle_diff(old_meta, new_meta);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) CHECK(same_change(got[i], want[i]));
    }
}

TEST_CASE("conflict detection splits union names into auto and conflict") {
    auto rng = make_rng(94);
    Tensor base_w = random_tensor(rng, Dtype::f32, {4});
    Tensor base_x = random_tensor(rng, Dtype::f32, {4});
    Tensor base_y = random_tensor(rng, Dtype::f32, {4});
    Tensor ours_w = random_tensor(rng, Dtype::f32, {4});
    Tensor theirs_x = random_tensor(rng, Dtype::f32, {4});
    Tensor added_o = random_tensor(rng, Dtype::f32, {2});
    Tensor both_w2 = random_tensor(rng, Dtype::f32, {4});

    ModelMetadata ancestor =
        model_of({{"w", base_w}, {"x", base_x}, {"y", base_y}}, 'a');

    SUBCASE("one-sided changes take that side") {
        ModelMetadata ours =
            model_of({{"w", ours_w}, {"x", base_x}, {"y", base_y}, {"n", added_o}}, 'b');
        ModelMetadata theirs =
            model_of({{"w", base_w}, {"x", theirs_x}}, 'c');  // also deletes y

        MergeAnalysis a = detect_conflicts(ancestor, ours, theirs);
        CHECK(a.conflicts.empty());
        REQUIRE(a.auto_resolved.size() == 4);
        CHECK(a.auto_resolved.at("w")->pointer.oid == std::string(64, 'b'));
        CHECK(a.auto_resolved.at("x")->pointer.oid == std::string(64, 'c'));
        CHECK_FALSE(a.auto_resolved.at("y").has_value());  // deletion wins
        CHECK(a.auto_resolved.at("n")->pointer.oid == std::string(64, 'b'));
    }
    SUBCASE("convergent changes keep ours' record") {
        ModelMetadata ours = model_of({{"w", both_w2}}, 'b');
        ModelMetadata theirs = model_of({{"w", both_w2}}, 'c');
        MergeAnalysis a = detect_conflicts(ancestor, ours, theirs);
        // x and y deleted on both sides; w converges.
        CHECK(a.conflicts.empty());
        CHECK(a.auto_resolved.at("w")->pointer.oid == std::string(64, 'b'));
    }
    SUBCASE("divergent edits conflict") {
        ModelMetadata ours = model_of({{"w", ours_w}, {"x", base_x}, {"y", base_y}}, 'b');
        ModelMetadata theirs =
            model_of({{"w", both_w2}, {"x", base_x}, {"y", base_y}}, 'c');
        MergeAnalysis a = detect_conflicts(ancestor, ours, theirs);
        REQUIRE(a.conflicts.size() == 1);
        CHECK(a.conflicts[0].name == "w");
        REQUIRE(a.conflicts[0].ancestor.has_value());
        REQUIRE(a.conflicts[0].ours.has_value());
        REQUIRE(a.conflicts[0].theirs.has_value());
        CHECK(a.auto_resolved.size() == 2);
    }
    SUBCASE("modify versus delete conflicts") {
        ModelMetadata ours = model_of({{"x", base_x}, {"y", base_y}}, 'b');  // deleted w
        ModelMetadata theirs =
            model_of({{"w", ours_w}, {"x", base_x}, {"y", base_y}}, 'c');
        MergeAnalysis a = detect_conflicts(ancestor, ours, theirs);
        REQUIRE(a.conflicts.size() == 1);
        CHECK(a.conflicts[0].name == "w");
        CHECK_FALSE(a.conflicts[0].ours.has_value());
        CHECK(a.conflicts[0].theirs.has_value());
    }
    SUBCASE("both-added divergent content conflicts") {
        ModelMetadata ours = model_of({{"w", base_w}, {"n", added_o}}, 'b');
        Tensor added_t = random_tensor(rng, Dtype::f32, {2});
        ModelMetadata theirs = model_of({{"w", base_w}, {"n", added_t}}, 'c');
        ModelMetadata empty_ancestor = model_of({{"w", base_w}}, 'a');
        MergeAnalysis a = detect_conflicts(empty_ancestor, ours, theirs);
        REQUIRE(a.conflicts.size() == 1);
        CHECK(a.conflicts[0].name == "n");
        CHECK_FALSE(a.conflicts[0].ancestor.has_value());
    }
    SUBCASE("identical sides never conflict") {
        ModelMetadata ours =
            model_of({{"w", ours_w}, {"x", base_x}, {"n", added_o}}, 'b');
        MergeAnalysis a = detect_conflicts(ancestor, ours, ours);
        CHECK(a.conflicts.empty());
        for (const auto& [name, g] : ours.groups)
            CHECK(a.auto_resolved.at(name)->pointer.oid == g.pointer.oid);
        CHECK_FALSE(a.auto_resolved.at("y").has_value());
    }
    SUBCASE("every union name appears exactly once") {
        ModelMetadata ours = model_of({{"w", ours_w}, {"x", base_x}, {"n", added_o}}, 'b');
        ModelMetadata theirs = model_of({{"w", both_w2}, {"y", base_y}}, 'c');
        MergeAnalysis a = detect_conflicts(ancestor, ours, theirs);
        std::set<std::string> seen;
        for (const auto& [name, g] : a.auto_resolved) CHECK(seen.insert(name).second);
        for (const MergeConflict& c : a.conflicts) CHECK(seen.insert(c.name).second);
        CHECK(seen == std::set<std::string>{"w", "x", "y", "n"});
    }
}

TEST_CASE("strategy menu order and lookup") {
    auto strategies = merge_strategies();
    REQUIRE(strategies.size() == 4);
    CHECK(strategies[0].keyword == "ours");
    CHECK(strategies[1].keyword == "theirs");
    CHECK(strategies[2].keyword == "ancestor");
    CHECK(strategies[3].keyword == "average");
    CHECK(find_strategy("average") == &strategies[3]);
    CHECK(find_strategy("nonesuch") == nullptr);
}

TEST_CASE("ours/theirs/ancestor pass the chosen side's record through") {
    auto rng = make_rng(95);
    MergeConflict c = conflict_over(random_tensor(rng, Dtype::f32, {4}),
                                    random_tensor(rng, Dtype::f32, {4}),
                                    random_tensor(rng, Dtype::f32, {4}));
    MergeContext ctx;  // side loads unused by the passthrough strategies

    auto ours = resolve_conflict(c, "ours", ctx);
    REQUIRE(ours.has_value());
    CHECK(ours->pointer.oid == std::string(64, 'b'));
    auto theirs = resolve_conflict(c, "theirs", ctx);
    REQUIRE(theirs.has_value());
    CHECK(theirs->pointer.oid == std::string(64, 'c'));
    auto ancestor = resolve_conflict(c, "ancestor", ctx);
    REQUIRE(ancestor.has_value());
    CHECK(ancestor->pointer.oid == std::string(64, 'a'));

    // Absent side: the group is omitted from the merged model.
    MergeConflict deletion = c;
    deletion.ours.reset();
    CHECK_FALSE(resolve_conflict(deletion, "ours", ctx).has_value());
    MergeConflict no_ancestor = c;
    no_ancestor.ancestor.reset();
    CHECK_FALSE(resolve_conflict(no_ancestor, "ancestor", ctx).has_value());
}

TEST_CASE("average stores the elementwise mean as a fresh dense record") {
    TempDir tmp("theta-merge");
    ObjectStore store(tmp.path);

    Tensor ours_t = f32v({1, 3});
    Tensor theirs_t = f32v({3, 5});
    Tensor mean = f32v({2, 4});
    MergeConflict c = conflict_over(f32v({0, 0}), ours_t, theirs_t);

    MergeContext ctx;
    ctx.load_ours = [&](const GroupMetadata&, const std::string&) { return ours_t; };
    ctx.load_theirs = [&](const GroupMetadata&, const std::string&) { return theirs_t; };
    ctx.store = &store;

    auto merged = resolve_conflict(c, "average", ctx);
    REQUIRE(merged.has_value());
    CHECK(merged->update_kind == UpdateKind::dense);
    CHECK(merged->dtype == Dtype::f32);
    CHECK(merged->shape == std::vector<uint64_t>{2});
    CHECK(merged->lsh == lsh_signature(mean));

    // The pointer resolves to exactly the mean, stored uncompressed: putting
    // the same record again adds no new object and lands on the same oid.
    Blob stored = store.get(merged->pointer.oid);
    UpdatePayload back =
        read_update(UpdateKind::dense, deserialize_tensors(stored), merged->flags);
    CHECK(std::get<DensePayload>(back).value.same_bytes(mean));
    size_t before = object_count(tmp.path);
    ObjectPointer again = store.put(serialize_tensors(write_update(DensePayload{mean})));
    CHECK(again.oid == merged->pointer.oid);
    CHECK(object_count(tmp.path) == before);

    SUBCASE("swapping the sides yields the identical object") {
        MergeConflict swapped{"w", c.ancestor, c.theirs, c.ours};
        MergeContext sctx;
        sctx.load_ours = ctx.load_theirs;
        sctx.load_theirs = ctx.load_ours;
        sctx.store = &store;
        auto other = resolve_conflict(swapped, "average", sctx);
        REQUIRE(other.has_value());
        CHECK(other->pointer.oid == merged->pointer.oid);
        CHECK(other->lsh == merged->lsh);
    }
    SUBCASE("averaging a side with itself reproduces it") {
        MergeConflict same = conflict_over(f32v({0, 0}), ours_t, ours_t);
        MergeContext sctx = ctx;
        sctx.load_theirs = ctx.load_ours;
        auto self = resolve_conflict(same, "average", sctx);
        REQUIRE(self.has_value());
        Blob b = store.get(self->pointer.oid);
        UpdatePayload p =
            read_update(UpdateKind::dense, deserialize_tensors(b), self->flags);
        CHECK(std::get<DensePayload>(p).value.same_bytes(ours_t));
    }
}

TEST_CASE("average is inapplicable across shape or presence mismatches") {
    auto rng = make_rng(96);
    MergeConflict shape_clash = conflict_over(random_tensor(rng, Dtype::f32, {4}),
                                              random_tensor(rng, Dtype::f32, {4}),
                                              random_tensor(rng, Dtype::f32, {2, 2}));
    const MergeStrategy* avg = find_strategy("average");
    REQUIRE(avg != nullptr);
    CHECK_FALSE(avg->applicable(shape_clash));

    MergeConflict deletion = conflict_over(random_tensor(rng, Dtype::f32, {4}),
                                           random_tensor(rng, Dtype::f32, {4}),
                                           random_tensor(rng, Dtype::f32, {4}));
    deletion.theirs.reset();
    CHECK_FALSE(avg->applicable(deletion));
    CHECK(find_strategy("ours")->applicable(deletion));

    TempDir tmp("theta-merge");
    ObjectStore store(tmp.path);
    MergeContext ctx;
    ctx.store = &store;
    CHECK(code_of([&] { resolve_conflict(shape_clash, "average", ctx); }) ==
          Errc::inapplicable_strategy);
    CHECK(code_of([&] { resolve_conflict(shape_clash, "nonesuch", ctx); }) ==
          Errc::inapplicable_strategy);
}

TEST_CASE("menu selection") {
    auto rng = make_rng(97);
    std::vector<MergeConflict> conflicts;
    conflicts.push_back(conflict_over(random_tensor(rng, Dtype::f32, {4}),
                                      random_tensor(rng, Dtype::f32, {4}),
                                      random_tensor(rng, Dtype::f32, {4})));
    conflicts[0].name = "alpha";

    SUBCASE("a valid keyword is accepted") {
        std::istringstream in("average\n");
        std::ostringstream out;
        auto picks = present_menu(conflicts, in, out, true, "");
        CHECK(picks.at("alpha") == "average");
        CHECK(out.str().find("alpha") != std::string::npos);
        CHECK(out.str().find("average") != std::string::npos);
    }
    SUBCASE("bad entries re-prompt, then a good one lands") {
        std::istringstream in("bogus\nuurs\nours\n");
        std::ostringstream out;
        auto picks = present_menu(conflicts, in, out, true, "");
        CHECK(picks.at("alpha") == "ours");
    }
    SUBCASE("four bad entries abort") {
        std::istringstream in("a\nb\nc\nd\n");
        std::ostringstream out;
        CHECK(code_of([&] { present_menu(conflicts, in, out, true, ""); }) ==
              Errc::aborted_by_user);
    }
    SUBCASE("EOF aborts immediately") {
        std::istringstream in;
        std::ostringstream out;
        CHECK(code_of([&] { present_menu(conflicts, in, out, true, ""); }) ==
              Errc::aborted_by_user);
    }
    SUBCASE("inapplicable picks are rejected like bad ones") {
        conflicts[0].theirs.reset();  // average no longer applies
        std::istringstream in("average\nours\n");
        std::ostringstream out;
        auto picks = present_menu(conflicts, in, out, true, "");
        CHECK(picks.at("alpha") == "ours");
        // The strategy listing (4-space indent) never offered it, and the
        // rejected entry was called out.
        CHECK(out.str().find("    average") == std::string::npos);
        CHECK(out.str().find("not an applicable strategy") != std::string::npos);
    }
    SUBCASE("non-interactive applies the default silently") {
        std::istringstream in;
        std::ostringstream out;
        auto picks = present_menu(conflicts, in, out, false, "theirs");
        CHECK(picks.at("alpha") == "theirs");
    }
    SUBCASE("non-interactive with no default aborts") {
        std::istringstream in;
        std::ostringstream out;
        CHECK(code_of([&] { present_menu(conflicts, in, out, false, ""); }) ==
              Errc::aborted_by_user);
    }
    SUBCASE("an inapplicable non-interactive default fails at resolution") {
        conflicts[0].theirs.reset();
        std::istringstream in;
        std::ostringstream out;
        auto picks = present_menu(conflicts, in, out, false, "average");
        CHECK(picks.at("alpha") == "average");
        MergeContext ctx;
        CHECK(code_of([&] { resolve_conflict(conflicts[0], picks.at("alpha"), ctx); }) ==
              Errc::inapplicable_strategy);
    }
}
