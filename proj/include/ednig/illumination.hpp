#pragma once

#include "ednig/image.hpp"

namespace ednig {

struct IlluminationParams {
    int patch_size = 15;     // local window of the bright-channel estimate, odd
    int gf_radius = 40;      // guided-filter box radius
    float gf_epsilon = 1e-3f;

    void validate() const {
        if (patch_size < 1 || patch_size % 2 == 0)
            throw ContractError("IlluminationParams: patch_size must be odd and >= 1");
        if (gf_radius < 1) throw ContractError("IlluminationParams: gf_radius must be positive");
        if (!(gf_epsilon > 0.f)) throw ContractError("IlluminationParams: gf_epsilon must be > 0");
    }
};

// Single-channel map in [0,1] with the same dims as its source image.
struct IlluminationMap {
    Image map;             // 1 channel, unit range
    bool refined = false;  // false: raw bright-channel estimate, true: guided-filtered
};

// Windowed channel max: map(x) = max over the patch around x of max_c I_c(y).
// Window clamped at image borders. Input must be unit-range RGB.
IlluminationMap bright_channel(const Image& rgb_unit, int patch_size);

// Edge-preserving refinement: q = mean_a * guide + mean_b with
// a = cov(guide,src) / (var(guide) + eps), b = mean(src) - a * mean(guide),
// box means over (2r+1)^2 windows clamped to the image. Output clamped to [0,1].
IlluminationMap guided_filter(const Image& guide_unit_1ch, const IlluminationMap& src, int radius,
                              float epsilon);

// Full pipeline: bright channel on the RGB image, refined with a guided filter
// whose guide is the luma grayscale of the same image.
IlluminationMap illumination_map(const Image& rgb_unit, const IlluminationParams& params);

// Box mean over windows clamped to the image, normalized by true window size.
// Exposed for the metrics/oracle code.
void box_mean(const float* src, float* dst, int h, int w, int radius);

}  // namespace ednig
