#include <fstream>

#include "hsa/bytes.hpp"
#include "hsa/fabric.hpp"

namespace hsa::fabric {

using Reader = detail::Reader<FabricError>;

namespace {

void check_key(const std::string& key) {
    if (key.empty() || key.front() == '/' || key.back() == '/') throw FabricError("invalid object key '" + key + "'");
    std::size_t start = 0;
    while (start <= key.size()) {
        const auto end = std::min(key.find('/', start), key.size());
        const auto part = key.substr(start, end - start);
        if (part.empty() || part == "." || part == "..") throw FabricError("invalid object key '" + key + "'");
        start = end + 1;
    }
}

}  // namespace

ObjectStore::ObjectStore(std::uint64_t nonce_seed, std::optional<std::filesystem::path> root)
    : nonce_rng_(nonce_seed), root_(std::move(root)) {
    if (!root_) return;
    std::filesystem::create_directories(*root_);
    for (const auto& entry : std::filesystem::recursive_directory_iterator(*root_)) {
        if (!entry.is_regular_file() || entry.path().extension() == ".tmp") continue;
        const auto key = std::filesystem::relative(entry.path(), *root_).generic_string();
        std::ifstream in(entry.path(), std::ios::binary);
        objects_[key] = std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
    }
}

std::filesystem::path ObjectStore::path_for(const std::string& key) const { return *root_ / key; }

void ObjectStore::put(const std::string& key, std::vector<std::uint8_t> bytes) {
    check_key(key);
    if (root_) {
        const auto path = path_for(key);
        std::filesystem::create_directories(path.parent_path());
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw FabricError("cannot write " + tmp.string());
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!out) throw FabricError("cannot write " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }
    objects_[key] = std::move(bytes);
}

bool ObjectStore::put_if_absent(const std::string& key, std::vector<std::uint8_t> bytes) {
    check_key(key);
    if (objects_.contains(key)) return false;
    put(key, std::move(bytes));
    return true;
}

std::vector<std::uint8_t> ObjectStore::get(const std::string& key) const {
    const auto it = objects_.find(key);
    if (it == objects_.end()) throw MissingKeyError("no object '" + key + "'");
    return it->second;
}

bool ObjectStore::contains(const std::string& key) const { return objects_.contains(key); }

std::vector<std::string> ObjectStore::keys(std::string_view prefix) const {
    std::vector<std::string> out;
    for (auto it = objects_.lower_bound(std::string(prefix)); it != objects_.end(); ++it) {
        if (!it->first.starts_with(prefix)) break;
        out.push_back(it->first);
    }
    return out;
}

SignedToken ObjectStore::presign(const std::string& key, Tick ttl, Tick now) {
    if (!contains(key)) throw MissingKeyError("no object '" + key + "'");
    if (ttl < 0) throw FabricError("negative token ttl");
    std::uint64_t nonce = 0;
    do {
        nonce = nonce_rng_();
    } while (nonce == 0 || grants_.contains(nonce));
    grants_[nonce] = Grant{key, now + ttl, true};
    return SignedToken{key, now + ttl, true, nonce};
}

std::vector<std::uint8_t> ObjectStore::fetch_with_token(const SignedToken& token, Tick now) {
    const auto it = grants_.find(token.nonce);
    // A token whose fields disagree with the grant was not issued by us.
    if (it == grants_.end() || it->second.key != token.key || it->second.expiry != token.expiry ||
        it->second.single_use != token.single_use)
        throw FabricError("unknown token for '" + token.key + "'");
    auto& grant = it->second;
    if (grant.consumed) throw TokenConsumedError("token for '" + token.key + "' already used");
    if (now >= grant.expiry) throw TokenExpiredError("token for '" + token.key + "' expired");
    auto bytes = get(grant.key);
    if (grant.single_use) grant.consumed = true;
    return bytes;
}

std::vector<std::uint8_t> encode_token(const SignedToken& token) {
    detail::Writer w;
    w.str(token.key);
    w.i64(token.expiry);
    w.u8(token.single_use ? 1 : 0);
    w.u64(token.nonce);
    return w.take();
}

SignedToken decode_token(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    SignedToken t;
    t.key = r.str();
    t.expiry = r.i64();
    t.single_use = r.u8() != 0;
    t.nonce = r.u64();
    if (!r.done()) throw FabricError("trailing bytes after token");
    return t;
}

}  // namespace hsa::fabric
