#include "ednig/illumination.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ednig {

namespace {

// 1D max filter along `count` lines of length n; elements of a line are
// `stride` apart, lines start `line_stride` apart. Window clamped to the line.
void dilate_1d(const std::vector<float>& src, std::vector<float>& dst, int n, int stride,
               int count, int line_stride, int radius) {
    for (int line = 0; line < count; ++line) {
        const std::size_t base = std::size_t(line) * line_stride;
        for (int i = 0; i < n; ++i) {
            const int lo = std::max(0, i - radius);
            const int hi = std::min(n - 1, i + radius);
            float m = src[base + std::size_t(lo) * stride];
            for (int j = lo + 1; j <= hi; ++j)
                m = std::max(m, src[base + std::size_t(j) * stride]);
            dst[base + std::size_t(i) * stride] = m;
        }
    }
}

}  // namespace

void box_mean(const float* src, float* dst, int h, int w, int radius) {
    // Integral image in double; window intersected with the image and
    // normalized by its true pixel count.
    const int iw = w + 1;
    std::vector<double> integral(std::size_t(h + 1) * iw, 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += src[std::size_t(y) * w + x];
            integral[std::size_t(y + 1) * iw + (x + 1)] = integral[std::size_t(y) * iw + (x + 1)] + row;
        }
    }
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            const double sum = integral[std::size_t(y1 + 1) * iw + (x1 + 1)] -
                               integral[std::size_t(y0) * iw + (x1 + 1)] -
                               integral[std::size_t(y1 + 1) * iw + x0] +
                               integral[std::size_t(y0) * iw + x0];
            const double area = double(y1 - y0 + 1) * double(x1 - x0 + 1);
            dst[std::size_t(y) * w + x] = float(sum / area);
        }
    }
}

IlluminationMap bright_channel(const Image& rgb_unit, int patch_size) {
    if (rgb_unit.channels != 3)
        throw ContractError("bright_channel: expected an RGB image, got " +
                            std::to_string(rgb_unit.channels) + " channels");
    if (rgb_unit.range != ValueRange::Unit)
        throw ContractError("bright_channel: expected a unit-range image");
    if (patch_size < 1 || patch_size % 2 == 0)
        throw ContractError("bright_channel: patch_size must be odd and >= 1");

    const int h = rgb_unit.height, w = rgb_unit.width;
    const int radius = patch_size / 2;

    IlluminationMap out;
    out.map = Image(h, w, 1, ValueRange::Unit);
    out.refined = false;

    // Per-pixel channel max, then a square dilation done separably.
    std::vector<float> chan_max(std::size_t(h) * w);
    const float* p = rgb_unit.data.data();
    for (std::size_t i = 0; i < chan_max.size(); ++i, p += 3)
        chan_max[i] = std::max(p[0], std::max(p[1], p[2]));

    if (radius == 0) {
        out.map.data = std::move(chan_max);
        return out;
    }

    std::vector<float> tmp(chan_max.size());
    dilate_1d(chan_max, tmp, w, 1, h, w, radius);  // along rows
    dilate_1d(tmp, chan_max, h, w, w, 1, radius);  // along columns
    out.map.data = std::move(chan_max);
    return out;
}

IlluminationMap guided_filter(const Image& guide_unit_1ch, const IlluminationMap& src, int radius,
                              float epsilon) {
    const Image& g = guide_unit_1ch;
    const Image& s = src.map;
    if (g.channels != 1)
        throw ContractError("guided_filter: guide must be single-channel");
    if (g.height != s.height || g.width != s.width)
        throw ContractError("guided_filter: guide and src dims differ (" +
                            std::to_string(g.height) + "x" + std::to_string(g.width) + " vs " +
                            std::to_string(s.height) + "x" + std::to_string(s.width) + ")");
    if (radius < 1) throw ContractError("guided_filter: radius must be positive");
    if (!(epsilon > 0.f)) throw ContractError("guided_filter: epsilon must be > 0");

    const int h = g.height, w = g.width;
    const std::size_t n = std::size_t(h) * w;

    std::vector<float> mean_g(n), mean_s(n), corr_gg(n), corr_gs(n);
    {
        std::vector<float> gg(n), gs(n);
        for (std::size_t i = 0; i < n; ++i) {
            gg[i] = g.data[i] * g.data[i];
            gs[i] = g.data[i] * s.data[i];
        }
        box_mean(g.data.data(), mean_g.data(), h, w, radius);
        box_mean(s.data.data(), mean_s.data(), h, w, radius);
        box_mean(gg.data(), corr_gg.data(), h, w, radius);
        box_mean(gs.data(), corr_gs.data(), h, w, radius);
    }

    std::vector<float> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float var_g = corr_gg[i] - mean_g[i] * mean_g[i];
        const float cov_gs = corr_gs[i] - mean_g[i] * mean_s[i];
        a[i] = cov_gs / (var_g + epsilon);
        b[i] = mean_s[i] - a[i] * mean_g[i];
    }

    std::vector<float> mean_a(n), mean_b(n);
    box_mean(a.data(), mean_a.data(), h, w, radius);
    box_mean(b.data(), mean_b.data(), h, w, radius);

    IlluminationMap out;
    out.map = Image(h, w, 1, ValueRange::Unit);
    out.refined = true;
    for (std::size_t i = 0; i < n; ++i)
        out.map.data[i] = std::clamp(mean_a[i] * g.data[i] + mean_b[i], 0.f, 1.f);
    return out;
}

IlluminationMap illumination_map(const Image& rgb_unit, const IlluminationParams& params) {
    params.validate();
    IlluminationMap raw = bright_channel(rgb_unit, params.patch_size);
    const Image guide = grayscale_luma(rgb_unit);
    return guided_filter(guide, raw, params.gf_radius, params.gf_epsilon);
}

}  // namespace ednig
