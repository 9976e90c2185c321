// Prepares the no-reference IQA model data files.
//
//   fit_nr_models niqe             fits the pristine multivariate Gaussian
//   fit_nr_models brisque-features dumps labeled distortion features as CSV
//                                  (consumed by tools/train_brisque_svr.py)

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ednig/nr_iqa.hpp"
#include "ednig/rng.hpp"

using namespace ednig;

namespace {

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw std::runtime_error("no PNG files under " + dir.string());
    return out;
}

Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    for (float& v : out.data)
        v = float(quantize_u8(float(v + sigma * rng.normal())));
    return out;
}

Image gaussian_blur_img(const Image& img, double sigma) {
    const int r = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> k(std::size_t(2 * r + 1), 0.0);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[std::size_t(i + r)] = std::exp(-double(i) * i / (2.0 * sigma * sigma));
        sum += k[std::size_t(i + r)];
    }
    for (double& v : k) v /= sum;

    const int h = img.height, w = img.width, c = img.channels;
    Image tmp = img, out = img;
    auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i)
                    acc += k[std::size_t(i + r)] * img.at(y, clampi(x + i, w), ch);
                tmp.at(y, x, ch) = float(acc);
            }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i)
                    acc += k[std::size_t(i + r)] * tmp.at(clampi(y + i, h), x, ch);
                out.at(y, x, ch) = float(acc);
            }
    return out;
}

Image darken(const Image& img, double scale, double noise_sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    for (float& v : out.data)
        v = float(quantize_u8(float(v * scale + 4.0 + noise_sigma * rng.normal())));
    return out;
}

int run_niqe(const std::string& corpus, const std::string& out) {
    std::vector<Image> images;
    for (const auto& p : list_pngs(corpus)) images.push_back(read_png(p));
    NiqeModel model = fit_niqe_model(images);
    model.save(out, "fitted over " + std::to_string(images.size()) + " pristine images from " +
                        corpus);
    std::cout << "niqe model -> " << out << " (" << images.size() << " images)\n";
    return 0;
}

int run_brisque_features(const std::string& corpus, const std::string& out) {
    std::ofstream csv(out, std::ios::trunc);
    csv << "label";
    for (int i = 0; i < 36; ++i) csv << ",f" << i;
    csv << "\n";
    csv.precision(10);

    // severity labels on a 0-100 scale, worst = 100
    struct Variant {
        const char* name;
        double label;
    };
    std::uint64_t seed = 1;
    std::size_t rows = 0;
    for (const auto& path : list_pngs(corpus)) {
        const Image img = read_png(path);
        auto emit = [&](const Image& distorted, double label) {
            const auto f = brisque_features(distorted);
            csv << label;
            for (double v : f) csv << ',' << v;
            csv << "\n";
            ++rows;
        };
        emit(img, 10.0);
        emit(add_gaussian_noise(img, 5.0, seed++), 28.0);
        emit(add_gaussian_noise(img, 15.0, seed++), 48.0);
        emit(add_gaussian_noise(img, 30.0, seed++), 68.0);
        emit(add_gaussian_noise(img, 50.0, seed++), 85.0);
        emit(gaussian_blur_img(img, 1.0), 30.0);
        emit(gaussian_blur_img(img, 2.5), 55.0);
        emit(gaussian_blur_img(img, 4.0), 72.0);
        emit(darken(img, 0.15, 4.0, seed++), 62.0);
        std::cout << path.filename().string() << " done\n";
    }
    std::cout << rows << " feature rows -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"no-reference IQA model preparation"};
    app.require_subcommand(1);

    std::string corpus = "data/corpus";
    std::string out;

    auto* niqe_cmd = app.add_subcommand("niqe", "fit the pristine NIQE model");
    niqe_cmd->add_option("--corpus", corpus, "pristine PNG corpus directory");
    niqe_cmd->add_option("--out", out, "output model directory")->required();

    auto* feat_cmd = app.add_subcommand("brisque-features", "dump labeled distortion features");
    feat_cmd->add_option("--corpus", corpus, "pristine PNG corpus directory");
    feat_cmd->add_option("--out", out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (app.got_subcommand("niqe")) return run_niqe(corpus, out);
        return run_brisque_features(corpus, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
