#include "ednig/archive.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace ednig {

namespace {

std::uint32_t crc32_of(const std::vector<char>& bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // crc32 takes uInt lengths; feed in chunks to stay safe on huge payloads.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const std::size_t chunk = std::min<std::size_t>(bytes.size() - off, 1u << 30);
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), uInt(chunk));
        off += chunk;
    }
    return std::uint32_t(crc);
}

}  // namespace

struct TensorArchive::Impl {
    struct Entry {
        std::string name;
        std::vector<std::int64_t> shape;
        std::vector<float> data;
    };
    std::vector<Entry> entries;
    std::map<std::string, std::size_t> index;
    nlohmann::json meta = nlohmann::json::object();

    const Entry& find(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw ArchiveError("archive: no tensor named '" + name + "'");
        return entries[it->second];
    }
};

TensorArchive::TensorArchive() : impl_(new Impl) {}
TensorArchive::~TensorArchive() = default;
TensorArchive::TensorArchive(TensorArchive&&) noexcept = default;
TensorArchive& TensorArchive::operator=(TensorArchive&&) noexcept = default;

void TensorArchive::add(const std::string& name, std::vector<std::int64_t> shape,
                        std::vector<float> data) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) n *= d;
    if (n != std::int64_t(data.size()))
        throw ArchiveError("archive: shape does not match data size for '" + name + "'");
    if (impl_->index.count(name))
        throw ArchiveError("archive: duplicate tensor name '" + name + "'");
    impl_->index[name] = impl_->entries.size();
    impl_->entries.push_back({name, std::move(shape), std::move(data)});
}

bool TensorArchive::has(const std::string& name) const { return impl_->index.count(name) != 0; }

const std::vector<float>& TensorArchive::data(const std::string& name) const {
    return impl_->find(name).data;
}

const std::vector<std::int64_t>& TensorArchive::shape(const std::string& name) const {
    return impl_->find(name).shape;
}

std::vector<std::string> TensorArchive::names() const {
    std::vector<std::string> out;
    out.reserve(impl_->entries.size());
    for (const auto& e : impl_->entries) out.push_back(e.name);
    return out;
}

std::size_t TensorArchive::tensor_count() const { return impl_->entries.size(); }

nlohmann::json& TensorArchive::meta() { return impl_->meta; }
const nlohmann::json& TensorArchive::meta() const { return impl_->meta; }

void TensorArchive::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    std::vector<char> payload;
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& e : impl_->entries) {
        const std::size_t bytes = e.data.size() * sizeof(float);
        tensors.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", offset}});
        payload.resize(offset + bytes);
        std::memcpy(payload.data() + offset, e.data.data(), bytes);
        offset += bytes;
    }

    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["meta"] = impl_->meta;
    manifest["crc32"] = crc32_of(payload);
    manifest["payload_bytes"] = payload.size();
    manifest["tensors"] = tensors;

    {
        std::ofstream f(dir / "tensors.bin", std::ios::binary | std::ios::trunc);
        if (!f) throw ArchiveError("archive: cannot write " + (dir / "tensors.bin").string());
        f.write(payload.data(), std::streamsize(payload.size()));
        if (!f) throw ArchiveError("archive: short write to " + (dir / "tensors.bin").string());
    }
    {
        std::ofstream f(dir / "manifest.json", std::ios::trunc);
        if (!f) throw ArchiveError("archive: cannot write " + (dir / "manifest.json").string());
        f << manifest.dump(2) << "\n";
    }
}

TensorArchive TensorArchive::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) throw ArchiveError("archive: cannot open " + manifest_path.string());
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ArchiveError("archive: bad manifest " + manifest_path.string() + ": " + e.what());
    }

    const int version = manifest.value("format_version", -1);
    if (version != kFormatVersion)
        throw ArchiveError("archive: incompatible format_version " + std::to_string(version) +
                           " in " + manifest_path.string() + " (expected " +
                           std::to_string(kFormatVersion) + ")");

    const auto bin_path = dir / "tensors.bin";
    std::ifstream bf(bin_path, std::ios::binary);
    if (!bf) throw ArchiveError("archive: cannot open " + bin_path.string());
    std::vector<char> payload((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());

    if (payload.size() != manifest.value("payload_bytes", std::size_t(0)))
        throw ArchiveError("archive: payload size mismatch in " + bin_path.string());
    if (crc32_of(payload) != manifest.value("crc32", std::uint32_t(0)))
        throw ArchiveError("archive: checksum mismatch in " + bin_path.string());

    TensorArchive out;
    out.impl_->meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& t : manifest.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        auto shape = t.at("shape").get<std::vector<std::int64_t>>();
        const std::size_t offset = t.at("offset").get<std::size_t>();
        std::int64_t n = 1;
        for (std::int64_t d : shape) n *= d;
        const std::size_t bytes = std::size_t(n) * sizeof(float);
        if (offset + bytes > payload.size())
            throw ArchiveError("archive: tensor '" + name + "' overruns payload");
        std::vector<float> data(std::size_t(n), 0.f);
        std::memcpy(data.data(), payload.data() + offset, bytes);
        out.add(name, std::move(shape), std::move(data));
    }
    return out;
}

}  // namespace ednig
