#include "theta/object_store.hpp"

#include <algorithm>
#include <system_error>

#include "theta/error.hpp"
#include "theta/sha256.hpp"
#include "theta/util.hpp"

namespace theta {

namespace fs = std::filesystem;

fs::path object_layout_path(const fs::path& root, std::string_view oid) {
    if (!valid_oid(oid))
        raise(Errc::invalid_argument, "not an object id: \"" + std::string(oid) + '"');
    return root / "objects" / std::string(oid.substr(0, 2)) /
           std::string(oid.substr(2, 2)) / std::string(oid);
}

ObjectStore::ObjectStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "objects", ec);
    if (ec)
        raise(Errc::storage_failure,
              "cannot create object store at " + root_.string() + ": " + ec.message());
}

fs::path ObjectStore::object_path(std::string_view oid) const {
    return object_layout_path(root_, oid);
}

ObjectPointer ObjectStore::put(const Blob& blob) {
    ObjectPointer ptr{sha256_hex(blob), blob.size()};
    fs::path dest = object_path(ptr.oid);
    if (!fs::exists(dest)) write_file_atomic(dest, blob);
    return ptr;
}

bool ObjectStore::contains(std::string_view oid) const {
    return fs::exists(object_path(oid));
}

Blob ObjectStore::get(std::string_view oid, const std::vector<fs::path>& remotes) const {
    auto verified = [&](Blob blob, const fs::path& from) {
        if (sha256_hex(blob) != oid)
            raise(Errc::integrity_failure,
                  "object " + std::string(oid) + " at " + from.string() +
                      " does not match its id");
        return blob;
    };

    fs::path local = object_path(oid);
    if (auto blob = read_file_if_exists(local)) return verified(std::move(*blob), local);

    for (const fs::path& remote : remotes) {
        fs::path there = object_layout_path(remote, oid);
        auto blob = read_file_if_exists(there);
        if (!blob) continue;
        Blob ok = verified(std::move(*blob), there);
        write_file_atomic(local, ok);  // cache fill
        return ok;
    }
    raise(Errc::object_missing,
          "object " + std::string(oid) + " not found locally or on any remote");
}

size_t ObjectStore::sync_objects(const std::vector<std::string>& oids,
                                 const fs::path& remote_root) const {
    size_t uploaded = 0;
    for (const std::string& oid : oids) {
        fs::path dest = object_layout_path(remote_root, oid);
        if (fs::exists(dest)) continue;
        auto blob = read_file_if_exists(object_path(oid));
        if (!blob)
            raise(Errc::object_missing,
                  "object " + oid + " is referenced by a commit but absent locally");
        write_file_atomic(dest, *blob);
        ++uploaded;
    }
    return uploaded;
}

uint64_t ObjectStore::total_object_bytes() const {
    uint64_t total = 0;
    std::error_code ec;
    fs::recursive_directory_iterator it(root_ / "objects", ec), end;
    if (ec) return 0;
    for (; it != end; ++it)
        if (it->is_regular_file()) total += it->file_size();
    return total;
}

void write_commit_index(const fs::path& store_root, const std::string& commit_id,
                        std::vector<std::string> oids) {
    std::sort(oids.begin(), oids.end());
    oids.erase(std::unique(oids.begin(), oids.end()), oids.end());
    std::string text;
    for (const std::string& oid : oids) {
        if (!valid_oid(oid))
            raise(Errc::invalid_argument, "not an object id: \"" + oid + '"');
        text += oid;
        text += '\n';
    }
    write_file_atomic(store_root / "commits" / commit_id, to_blob(text));
}

std::optional<std::vector<std::string>> read_commit_index(const fs::path& store_root,
                                                          const std::string& commit_id) {
    auto blob = read_file_if_exists(store_root / "commits" / commit_id);
    if (!blob) return std::nullopt;
    return split_lines(as_string_view(*blob));
}

}  // namespace theta
