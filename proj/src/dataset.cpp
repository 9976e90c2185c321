#include "ednig/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "ednig/rng.hpp"

namespace ednig {

namespace {

bool is_image_file(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::map<std::string, std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw DatasetError("dataset layout: missing directory " + dir.string());
    std::map<std::string, std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path())) out[e.path().filename().string()] = e.path();
    return out;
}

}  // namespace

std::vector<PairedPaths> scan_lol_dataset(const std::filesystem::path& root, Split split) {
    const char* subset = split == Split::Train ? "our485" : "eval15";
    const auto low_dir = root / subset / "low";
    const auto high_dir = root / subset / "high";

    auto lows = list_images(low_dir);
    auto highs = list_images(high_dir);

    for (const auto& [name, path] : lows)
        if (!highs.count(name))
            throw DatasetError("dataset pairing: no ground truth for " + path.string());
    for (const auto& [name, path] : highs)
        if (!lows.count(name))
            throw DatasetError("dataset pairing: no low-light input for " + path.string());

    std::vector<PairedPaths> out;
    out.reserve(lows.size());
    for (const auto& [name, path] : lows)  // std::map iterates lexicographically
        out.push_back({path, highs.at(name), std::filesystem::path(name).stem().string()});
    return out;
}

PairedSample load_pair(const PairedPaths& paths) {
    PairedSample s;
    s.low = read_png(paths.low);
    s.target = read_png(paths.target);
    s.id = paths.id;
    if (s.low.channels != 3 || s.target.channels != 3)
        throw DatasetError("dataset pairing: non-RGB image in pair " + paths.id);
    if (s.low.height != s.target.height || s.low.width != s.target.width)
        throw DatasetError("dataset pairing: dimension mismatch in pair " + paths.id);
    return s;
}

std::vector<PairedSample> load_lol_dataset(const std::filesystem::path& root, Split split) {
    std::vector<PairedSample> out;
    for (const auto& p : scan_lol_dataset(root, split)) out.push_back(load_pair(p));
    return out;
}

PairedSample augment(const PairedSample& pair, const AugmentationParams& params) {
    params.validate();
    if (!pair.low.same_dims(pair.target))
        throw ContractError("augment: low/target dims differ for pair " + pair.id);

    Rng rng(params.seed);
    const int src_h = pair.low.height, src_w = pair.low.width;

    const float area_scale = float(rng.uniform(params.crop_scale_min, params.crop_scale_max));
    const float side_scale = std::sqrt(area_scale);
    const int crop_h = std::clamp(int(std::lround(src_h * side_scale)), 1, src_h);
    const int crop_w = std::clamp(int(std::lround(src_w * side_scale)), 1, src_w);
    const int y0 = int(rng.uniform_index(std::uint64_t(src_h - crop_h + 1)));
    const int x0 = int(rng.uniform_index(std::uint64_t(src_w - crop_w + 1)));
    const bool flip = params.enable_flip && rng.bernoulli(0.5);

    if (crop_h < params.out_height || crop_w < params.out_width) {
        // Source smaller than the requested output: the resize below upscales.
        static bool warned = false;
        if (!warned) {
            std::cerr << "augment: crop window " << crop_w << "x" << crop_h
                      << " smaller than output " << params.out_width << "x" << params.out_height
                      << ", upscaling\n";
            warned = true;
        }
    }

    auto transform = [&](const Image& img) {
        Image out = crop(img, y0, x0, crop_h, crop_w);
        out = resize_bilinear(out, params.out_height, params.out_width);
        if (flip) out = flip_horizontal(out);
        return out;
    };

    PairedSample out;
    out.low = transform(pair.low);
    out.target = transform(pair.target);
    out.id = pair.id;
    return out;
}

}  // namespace ednig
