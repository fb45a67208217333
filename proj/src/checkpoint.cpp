#include "smot/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "smot/errors.hpp"
#include "smot/ingest.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace smot::ckpt {

namespace {

constexpr char kMagic[8] = {'S', 'M', 'O', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

std::uint32_t get_u32(const std::string& bytes, std::size_t& off) {
    if (off + 4 > bytes.size()) throw DataError("checkpoint: truncated header");
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    off += 4;
    return v;
}

}  // namespace

std::string serialize(const std::vector<TensorRef>& tensors) {
    std::string out;
    out.append(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const TensorRef& t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.append(t.name);
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        std::size_t n = 1;
        for (std::uint32_t d : t.shape) {
            put_u32(out, d);
            n *= d;
        }
        if (n != t.size) throw DataError("checkpoint: shape/size mismatch for " + t.name);
    }
    for (const TensorRef& t : tensors)
        out.append(reinterpret_cast<const char*>(t.data), t.size * sizeof(double));
    return out;
}

std::map<std::string, LoadedTensor> deserialize(const std::string& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw DataError("checkpoint: bad magic");
    std::size_t off = 8;
    const std::uint32_t version = get_u32(bytes, off);
    if (version != kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t count = get_u32(bytes, off);

    struct Entry {
        std::string name;
        std::vector<std::uint32_t> shape;
        std::size_t size;
    };
    std::vector<Entry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        const std::uint32_t name_len = get_u32(bytes, off);
        if (off + name_len > bytes.size()) throw DataError("checkpoint: truncated name");
        e.name.assign(bytes.data() + off, name_len);
        off += name_len;
        const std::uint32_t ndim = get_u32(bytes, off);
        e.size = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            e.shape.push_back(get_u32(bytes, off));
            e.size *= e.shape.back();
        }
        entries.push_back(std::move(e));
    }

    std::map<std::string, LoadedTensor> out;
    for (const Entry& e : entries) {
        if (off + e.size * sizeof(double) > bytes.size())
            throw DataError("checkpoint: truncated payload for " + e.name);
        LoadedTensor t;
        t.shape = e.shape;
        t.data.resize(e.size);
        std::memcpy(t.data.data(), bytes.data() + off, e.size * sizeof(double));
        off += e.size * sizeof(double);
        if (!out.emplace(e.name, std::move(t)).second)
            throw DataError("checkpoint: duplicate tensor " + e.name);
    }
    if (off != bytes.size()) throw DataError("checkpoint: trailing bytes");
    return out;
}

void load_into(const std::map<std::string, LoadedTensor>& loaded,
               const std::vector<TensorRef>& refs, bool subset) {
    std::size_t used = 0;
    for (const TensorRef& r : refs) {
        auto it = loaded.find(r.name);
        if (it == loaded.end()) {
            if (subset) continue;
            throw DataError("checkpoint: missing tensor " + r.name);
        }
        if (it->second.shape != r.shape)
            throw DataError("checkpoint: shape mismatch for " + r.name);
        std::memcpy(r.data, it->second.data.data(), r.size * sizeof(double));
        ++used;
    }
    if (used != loaded.size())
        throw DataError("checkpoint: file contains tensors with no destination");
}

void save_file(const std::string& path, const std::vector<TensorRef>& tensors) {
    ingest::write_file(path, serialize(tensors));
}

std::map<std::string, LoadedTensor> load_file(const std::string& path) {
    return deserialize(ingest::read_file(path));
}

}  // namespace smot::ckpt
