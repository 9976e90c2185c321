#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ednig/layers.hpp"
#include "ednig/tensor.hpp"

namespace ednig {

struct VggWorkspace {
    Tensor preprocessed;
    std::vector<Tensor> z, y;                // per conv
    std::vector<std::vector<int>> pool_idx;  // per pool
    std::vector<Tensor> pooled;
    ConvScratch scratch;
};

// VGG16 prefix up to Conv3-3 (post-ReLU): conv pairs at widths 64/128, a conv
// triple at 256, 2x2 max pools between blocks. Weights are fixed; only the
// input gradient is ever needed. Inputs are signed-range RGB, mapped to [0,1]
// and standardized with the ImageNet channel statistics before the first conv.
class FeatureExtractor {
public:
    // Reads the converted archive (see tools/import_vgg16.py). Throws
    // ArchiveError with instructions when the directory is missing.
    static FeatureExtractor load(const std::filesystem::path& dir);

    // Same topology at 1/width_divisor of the channel widths with seeded
    // random weights. For tests and for training runs without the converted
    // VGG16 weights.
    static FeatureExtractor random_for_tests(std::uint64_t seed, int width_divisor = 8);

    const Tensor& features(const Tensor& rgb_signed, VggWorkspace& ws) const;

    // d(loss)/d(input) given d(loss)/d(features); requires the matching
    // forward workspace.
    Tensor input_gradient(const Tensor& d_features, VggWorkspace& ws) const;

    std::size_t parameter_count() const;
    bool is_surrogate() const { return surrogate_; }

private:
    FeatureExtractor() = default;
    void build(const std::vector<int>& widths);

    std::vector<ConvLayer> convs_;      // 7 convs
    std::vector<int> pool_after_;       // conv indices followed by a pool
    bool surrogate_ = false;
};

}  // namespace ednig
