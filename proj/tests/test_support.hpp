#pragma once

#include <filesystem>
#include <string>

#include "ednig/image.hpp"
#include "ednig/rng.hpp"
#include "ednig/tensor.hpp"

namespace ednig::test {

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("ednig_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Image random_image(int h, int w, int c, ValueRange range, std::uint64_t seed) {
    Image img(h, w, c, range);
    Rng rng(seed);
    float lo = 0.f, hi = 1.f;
    if (range == ValueRange::Byte) hi = 255.f;
    if (range == ValueRange::Signed) { lo = -1.f; hi = 1.f; }
    for (float& v : img.data) v = float(rng.uniform(lo, hi));
    return img;
}

inline Tensor random_tensor(int h, int w, int c, std::uint64_t seed, float lo = -1.f,
                            float hi = 1.f) {
    Tensor t(h, w, c);
    Rng rng(seed);
    fill_uniform(t, rng, lo, hi);
    return t;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

// A well-lit synthetic scene: smooth blobs over a gradient base.
inline Image synthetic_scene(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w, 3, ValueRange::Byte);
    struct Blob {
        float cy, cx, r, amp[3];
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 6; ++i) {
        Blob b;
        b.cy = float(rng.uniform(0, h));
        b.cx = float(rng.uniform(0, w));
        b.r = float(rng.uniform(0.15, 0.5)) * float(std::min(h, w));
        for (auto& a : b.amp) a = float(rng.uniform(-70, 70));
        blobs.push_back(b);
    }
    const float gx = float(rng.uniform(-40, 40)), gy = float(rng.uniform(-40, 40));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                float v = 150.f + gx * (float(x) / float(w) - 0.5f) + gy * (float(y) / float(h) - 0.5f);
                for (const auto& b : blobs) {
                    const float d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
                    v += b.amp[ch] * std::exp(-d2 / (2.f * b.r * b.r));
                }
                img.at(y, x, ch) = float(quantize_u8(std::clamp(v, 20.f, 240.f)));
            }
    return img;
}

// Darkened counterpart of a scene (the "low-light" input).
inline Image darken_scene(const Image& target, std::uint64_t seed) {
    Rng rng(seed);
    Image low(target.height, target.width, target.channels, ValueRange::Byte);
    for (std::size_t i = 0; i < low.data.size(); ++i) {
        const float v = target.data[i] * 0.16f + 4.f + float(rng.uniform(-2.0, 2.0));
        low.data[i] = float(quantize_u8(std::clamp(v, 0.f, 255.f)));
    }
    return low;
}

// Writes a LOL-layout tree of synthetic pairs and returns the root.
inline std::filesystem::path make_synthetic_lol(const std::string& tag, int n_train, int n_val,
                                                int h, int w, std::uint64_t seed) {
    const auto root = temp_dir("lol_" + tag);
    auto emit = [&](const std::filesystem::path& subset, int count, std::uint64_t salt) {
        std::filesystem::create_directories(root / subset / "low");
        std::filesystem::create_directories(root / subset / "high");
        for (int i = 0; i < count; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%03d.png", i + 1);
            const Image target = synthetic_scene(h, w, Rng::derive(seed, salt, std::uint64_t(i)));
            const Image low = darken_scene(target, Rng::derive(seed, salt + 1, std::uint64_t(i)));
            write_png(root / subset / "high" / name, target);
            write_png(root / subset / "low" / name, low);
        }
    };
    emit("our485", n_train, 10);
    emit("eval15", n_val, 20);
    return root;
}

}  // namespace ednig::test
