#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ednig/layers.hpp"
#include "ednig/params.hpp"
#include "ednig/tensor.hpp"

namespace ednig {

struct CriticConfig {
    int base_channels = 12;
    int num_blocks = 5;
    int kernel = 3;
    int stride = 2;
    int input_channels = 3;

    int block_width(int i) const { return base_channels << i; }
    int downsample_factor() const { return 1 << num_blocks; }  // 32 at defaults

    void validate() const;
    nlohmann::json to_json() const;
    static CriticConfig from_json(const nlohmann::json& j);
};

struct CriticWorkspace {
    Tensor input;
    std::vector<Tensor> z, x;    // per block, pre/post Swish
    std::vector<double> gap;     // pooled feature vector
    double score = 0.0;

    // tangent chain for the gradient-penalty second-order pass
    std::vector<Tensor> tz, tx;
    Tensor tangent_in;

    ConvScratch scratch;
};

// Wasserstein critic: stride-2 3x3 conv blocks with Swish (widths doubling
// from base_channels), global average pooling, one linear unit, no output
// activation and no normalization layers.
class Critic {
public:
    Critic(const CriticConfig& cfg, std::uint64_t init_seed);

    const CriticConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }

    // x: signed-range RGB, dims divisible by the downsample factor.
    // Throws NumericError naming the offending block on non-finite activations.
    double score(const Tensor& x, CriticWorkspace& ws) const;

    // d(dscore * score)/dparams, accumulated. Requires a prior score() on ws.
    void backward_params(double dscore, CriticWorkspace& ws, GradBuffer& grads) const;

    // d(score)/d(input). Requires a prior score() on ws.
    Tensor input_gradient(CriticWorkspace& ws) const;

    // One-sample gradient penalty (|grad_x C(x_hat)| - 1)^2 evaluated at
    // x_hat. Returns the penalty; when grads != nullptr also accumulates
    // d(scale * penalty)/dparams through the exact second-order path.
    double gradient_penalty_at(const Tensor& x_hat, CriticWorkspace& ws, GradBuffer* grads,
                               double scale) const;

    std::size_t parameter_count() const;

    ParamList params();
    ConstParamList params() const;

private:
    CriticConfig cfg_;
    std::uint64_t init_seed_;
    std::vector<ConvLayer> blocks_;
    std::vector<float> head_w;  // widths.back() -> 1
    std::vector<float> head_b;  // 1

    template <typename Self, typename Ref>
    static std::vector<Ref> list_params(Self& self);

    void backward_input_only(CriticWorkspace& ws, Tensor& dx) const;
};

}  // namespace ednig
