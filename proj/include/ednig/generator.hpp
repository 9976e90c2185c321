#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ednig/layers.hpp"
#include "ednig/params.hpp"
#include "ednig/tensor.hpp"

namespace ednig {

struct GeneratorConfig {
    int base_channels = 12;
    int num_stages = 5;
    int convs_per_encoder_stage = 3;
    int convs_per_decoder_stage = 2;
    std::array<int, 3> spp_kernels{5, 9, 13};
    int input_channels = 4;
    int output_channels = 3;

    int stage_width(int stage) const { return base_channels << stage; }
    int downsample_factor() const { return 1 << (num_stages - 1); }  // 16 at defaults

    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
};

// Forward activations plus conv scratch; reusable across calls. After a
// forward pass the encoder/SPP tensors stay inspectable (tests use this to
// trace shapes and SPP branches).
struct GeneratorWorkspace {
    Tensor input;
    struct EncStage {
        std::vector<Tensor> z, y;  // pre/post Swish per conv; y.back() feeds the skip
        Tensor pooled;
        std::vector<int> pool_idx;
    };
    std::vector<EncStage> enc;

    std::array<Tensor, 3> spp_branch;  // stride-1 max pools, pre-fusion
    std::array<std::vector<int>, 3> spp_idx;
    Tensor spp_concat, spp_z, spp_y;

    struct DecLevel {
        Tensor upsampled, up_z, up_y, cat;
        std::vector<Tensor> z, y;
    };
    std::vector<DecLevel> dec;

    Tensor head_z, head_y;
    ConvScratch scratch;
};

// Five-stage encoder (3x3 convs + Swish, 2x2 max pools), SPP bottleneck
// (5/9/13 stride-1 max pools fused by a 1x1 conv), four decoder levels
// (nearest x2 + halving conv, skip concat, two convs), 1x1 Tanh head.
class Generator {
public:
    Generator(const GeneratorConfig& cfg, std::uint64_t init_seed);

    const GeneratorConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }

    // x: signed-range, input_channels channels, dims divisible by the
    // downsample factor. Output: same H x W, output_channels, inside (-1,1).
    const Tensor& forward(const Tensor& x, GeneratorWorkspace& ws) const;

    // Accumulates dL/dparams given dL/doutput; requires the workspace of the
    // matching forward call.
    void backward(const Tensor& d_out, GeneratorWorkspace& ws, GradBuffer& grads) const;

    std::size_t parameter_count() const;

    ParamList params();
    ConstParamList params() const;

private:
    GeneratorConfig cfg_;
    std::uint64_t init_seed_;

    std::vector<std::vector<ConvLayer>> enc_;           // [stage][conv]
    ConvLayer spp_fuse_;
    struct DecLevel {
        ConvLayer up;
        std::vector<ConvLayer> convs;
    };
    std::vector<DecLevel> dec_;
    ConvLayer head_;

    template <typename Self, typename Ref>
    static std::vector<Ref> list_params(Self& self);
};

// Number of parameters a config yields, by construction (no weights needed).
std::size_t generator_parameter_count(const GeneratorConfig& cfg);

}  // namespace ednig
