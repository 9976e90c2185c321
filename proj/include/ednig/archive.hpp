#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ednig/error.hpp"

namespace ednig {

// Named float32 arrays stored as a directory: manifest.json (names, shapes,
// offsets, metadata, CRC32 of the payload) + tensors.bin (little-endian
// float32, concatenated in manifest order). Manifest order is the canonical
// parameter order for checkpoints.
class TensorArchive {
public:
    TensorArchive();
    ~TensorArchive();
    TensorArchive(TensorArchive&&) noexcept;
    TensorArchive& operator=(TensorArchive&&) noexcept;
    TensorArchive(const TensorArchive&) = delete;
    TensorArchive& operator=(const TensorArchive&) = delete;

    void add(const std::string& name, std::vector<std::int64_t> shape, std::vector<float> data);

    bool has(const std::string& name) const;
    const std::vector<float>& data(const std::string& name) const;           // throws ArchiveError
    const std::vector<std::int64_t>& shape(const std::string& name) const;   // throws ArchiveError
    std::vector<std::string> names() const;
    std::size_t tensor_count() const;

    nlohmann::json& meta();
    const nlohmann::json& meta() const;

    void save(const std::filesystem::path& dir) const;
    static TensorArchive load(const std::filesystem::path& dir);

    static constexpr int kFormatVersion = 1;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ednig
