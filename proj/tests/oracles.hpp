#pragma once

// Brute-force reference implementations used by the unit and acceptance
// suites. Kept independent of the library's fast paths on purpose.

#include <algorithm>
#include <cmath>

#include "ednig/image.hpp"

namespace ednig::test {

// O(HW k^2) windowed channel max.
inline Image naive_bright_channel(const Image& img, int patch) {
    const int r = patch / 2;
    Image out(img.height, img.width, 1, ValueRange::Unit);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float m = 0.f;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) continue;
                    for (int ch = 0; ch < 3; ++ch) m = std::max(m, img.at(yy, xx, ch));
                }
            out.at(y, x, 0) = m;
        }
    return out;
}

inline double naive_window_mean(const Image& img, int cy, int cx, int r) {
    double sum = 0.0;
    int n = 0;
    for (int y = std::max(0, cy - r); y <= std::min(img.height - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(img.width - 1, cx + r); ++x) {
            sum += img.at(y, x, 0);
            ++n;
        }
    return sum / n;
}

// Direct per-pixel evaluation of the guided filter equations.
inline Image naive_guided_filter(const Image& guide, const Image& src, int r, float eps) {
    const int h = guide.height, w = guide.width;
    Image a(h, w, 1, ValueRange::Unit), b(h, w, 1, ValueRange::Unit);
    Image gg(h, w, 1, ValueRange::Unit), gs(h, w, 1, ValueRange::Unit);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            gg.at(y, x, 0) = guide.at(y, x, 0) * guide.at(y, x, 0);
            gs.at(y, x, 0) = guide.at(y, x, 0) * src.at(y, x, 0);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double mg = naive_window_mean(guide, y, x, r);
            const double ms = naive_window_mean(src, y, x, r);
            const double var = naive_window_mean(gg, y, x, r) - mg * mg;
            const double cov = naive_window_mean(gs, y, x, r) - mg * ms;
            a.at(y, x, 0) = float(cov / (var + eps));
            b.at(y, x, 0) = float(ms - (cov / (var + eps)) * mg);
        }
    Image out(h, w, 1, ValueRange::Unit);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ma = naive_window_mean(a, y, x, r);
            const double mb = naive_window_mean(b, y, x, r);
            out.at(y, x, 0) = std::clamp(float(ma * guide.at(y, x, 0) + mb), 0.f, 1.f);
        }
    return out;
}

}  // namespace ednig::test
