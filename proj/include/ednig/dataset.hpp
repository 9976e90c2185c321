#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ednig/image.hpp"

namespace ednig {

struct PairedSample {
    Image low;      // 3-channel byte-range
    Image target;   // 3-channel byte-range, same dims as low
    std::string id;
};

enum class Split { Train, Val };

// Path pair for lazy loading. Order is lexicographic by filename.
struct PairedPaths {
    std::filesystem::path low;
    std::filesystem::path target;
    std::string id;
};

// Scans the LOL layout (root/our485/{low,high}, root/eval15/{low,high}) and
// pairs files by name. Throws DatasetError on a missing directory or an
// unmatched filename (the message names the orphan file).
std::vector<PairedPaths> scan_lol_dataset(const std::filesystem::path& root, Split split);

std::vector<PairedSample> load_lol_dataset(const std::filesystem::path& root, Split split);

PairedSample load_pair(const PairedPaths& paths);

struct AugmentationParams {
    bool enable_flip = true;          // horizontal, probability 0.5
    float crop_scale_min = 0.8f;      // fraction of source area
    float crop_scale_max = 1.0f;
    int out_height = 512;
    int out_width = 512;
    std::uint64_t seed = 0;

    void validate() const {
        if (out_height % 16 != 0 || out_width % 16 != 0)
            throw ContractError("AugmentationParams: output size must be divisible by 16");
        if (!(crop_scale_min > 0.f) || crop_scale_min > crop_scale_max || crop_scale_max > 1.f)
            throw ContractError("AugmentationParams: crop scale range must satisfy 0 < min <= max <= 1");
    }
};

// Random crop of 0.8-1.0 of the source area, bilinear resize to the output
// size, then an optional horizontal flip. Identical transform on low and
// target; deterministic under a fixed seed.
PairedSample augment(const PairedSample& pair, const AugmentationParams& params);

}  // namespace ednig
