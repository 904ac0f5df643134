#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "theta/metadata.hpp"
#include "theta/object_store.hpp"
#include "theta/snapshot.hpp"
#include "theta/tensor.hpp"
#include "theta/update.hpp"

namespace theta::test {

// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        std::string tmpl =
            (std::filesystem::temp_directory_path() / (tag + ".XXXXXX")).string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (::mkdtemp(buf.data()) == nullptr)
            throw std::runtime_error("mkdtemp failed for " + tmpl);
        path = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// PriorResolver over an explicit version list (newest first: versions[0] is
// one step back from the state under resolution) and a backing store.
class MemoryResolver final : public PriorResolver {
public:
    MemoryResolver(std::vector<ModelMetadata> versions_newest_first, ObjectStore& store)
        : versions_(std::move(versions_newest_first)), store_(store) {}

    std::optional<GroupMetadata> group_at(std::string_view name,
                                          int steps_back) override {
        if (steps_back < 1 || static_cast<size_t>(steps_back) > versions_.size())
            return std::nullopt;
        const ModelMetadata& v = versions_[steps_back - 1];
        auto it = v.groups.find(std::string(name));
        if (it == v.groups.end()) return std::nullopt;
        return it->second;
    }
    Blob fetch(const ObjectPointer& ptr) override { return store_.get(ptr.oid); }
    int max_depth() const override { return static_cast<int>(versions_.size()) + 2; }

    // Pushes a newer version on top (what the store just committed).
    void push(ModelMetadata v) { versions_.insert(versions_.begin(), std::move(v)); }

private:
    std::vector<ModelMetadata> versions_;
    ObjectStore& store_;
};

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

inline Tensor random_tensor(std::mt19937_64& rng, Dtype dtype,
                            std::vector<uint64_t> shape) {
    uint64_t n = shape_numel(shape);
    std::vector<double> values(n);
    if (dtype_is_float(dtype)) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : values) v = dist(rng);
        if (dtype == Dtype::f16)  // keep representable: quantize through f16
            for (double& v : values) v = half_to_double(double_to_half(v));
    } else if (dtype == Dtype::boolean) {
        std::uniform_int_distribution<int> dist(0, 1);
        for (double& v : values) v = dist(rng);
    } else {
        std::uniform_int_distribution<int64_t> dist(-100, 100);
        for (double& v : values) v = static_cast<double>(dist(rng));
    }
    return Tensor::from_f64(dtype, std::move(shape), values);
}

inline std::vector<uint64_t> random_shape(std::mt19937_64& rng, uint64_t max_elems = 64) {
    std::uniform_int_distribution<int> rank_dist(0, 3);
    int rank = rank_dist(rng);
    std::vector<uint64_t> shape;
    uint64_t total = 1;
    for (int i = 0; i < rank; ++i) {
        std::uniform_int_distribution<uint64_t> dim(1, 4);
        uint64_t d = dim(rng);
        if (total * d > max_elems) d = 1;
        shape.push_back(d);
        total *= d;
    }
    return shape;
}

inline Dtype random_dtype(std::mt19937_64& rng) {
    static const Dtype all[] = {Dtype::f16, Dtype::f32, Dtype::f64,
                                Dtype::i8,  Dtype::i16, Dtype::i32,
                                Dtype::i64, Dtype::u8,  Dtype::boolean};
    std::uniform_int_distribution<size_t> pick(0, std::size(all) - 1);
    return all[pick(rng)];
}

inline ModelSnapshot random_snapshot(std::mt19937_64& rng, size_t groups,
                                     uint64_t max_elems = 64) {
    ModelSnapshot snap;
    for (size_t i = 0; i < groups; ++i)
        snap.put("g" + std::to_string(i) + "/w",
                 random_tensor(rng, random_dtype(rng), random_shape(rng, max_elems)));
    return snap;
}

// Counts regular files under the store's objects tree.
inline size_t object_count(const std::filesystem::path& store_root) {
    size_t n = 0;
    std::error_code ec;
    std::filesystem::recursive_directory_iterator it(store_root / "objects", ec), end;
    if (ec) return 0;
    for (; it != end; ++it)
        if (it->is_regular_file()) ++n;
    return n;
}

}  // namespace theta::test
