#include "ednig/vgg.hpp"

#include <array>

#include "ednig/archive.hpp"
#include "ednig/error.hpp"
#include "ednig/rng.hpp"

namespace ednig {

namespace {

constexpr std::array<float, 3> kMean{0.485f, 0.456f, 0.406f};
constexpr std::array<float, 3> kStd{0.229f, 0.224f, 0.225f};

const char* kConvNames[7] = {"conv1_1", "conv1_2", "conv2_1", "conv2_2",
                             "conv3_1", "conv3_2", "conv3_3"};

}  // namespace

void FeatureExtractor::build(const std::vector<int>& widths) {
    convs_.clear();
    int in = 3;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        convs_.emplace_back(in, widths[i], 3, 1);
        in = widths[i];
    }
    pool_after_ = {1, 3};  // after conv1_2 and conv2_2
}

FeatureExtractor FeatureExtractor::load(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "manifest.json"))
        throw ArchiveError(
            "VGG16 feature weights not found at '" + dir.string() +
            "'. Convert the public torchvision checkpoint once with "
            "tools/import_vgg16.py, or run with the perceptual term disabled "
            "(lambda_per = 0) or with the seeded test extractor "
            "(vgg_weights = \"random:<seed>\").");
    TensorArchive a = TensorArchive::load(dir);

    FeatureExtractor fe;
    std::vector<int> widths;
    for (const char* n : kConvNames) {
        const auto& shape = a.shape(std::string(n) + "/w");
        if (shape.size() != 4 || shape[0] != 3 || shape[1] != 3)
            throw ArchiveError("VGG16 archive: bad shape for " + std::string(n));
        widths.push_back(int(shape[3]));
    }
    fe.build(widths);
    for (std::size_t i = 0; i < fe.convs_.size(); ++i) {
        const std::string n = kConvNames[i];
        const auto& w = a.data(n + "/w");
        const auto& b = a.data(n + "/b");
        if (w.size() != fe.convs_[i].w.size() || b.size() != fe.convs_[i].b.size())
            throw ArchiveError("VGG16 archive: size mismatch for " + n);
        fe.convs_[i].w = w;
        fe.convs_[i].b = b;
    }
    return fe;
}

FeatureExtractor FeatureExtractor::random_for_tests(std::uint64_t seed, int width_divisor) {
    if (width_divisor < 1) throw ContractError("random_for_tests: width_divisor must be >= 1");
    FeatureExtractor fe;
    std::vector<int> widths;
    for (int w : {64, 64, 128, 128, 256, 256, 256})
        widths.push_back(std::max(1, w / width_divisor));
    fe.build(widths);
    Rng rng(seed);
    for (auto& c : fe.convs_) c.init_he_uniform(rng);
    fe.surrogate_ = true;
    return fe;
}

const Tensor& FeatureExtractor::features(const Tensor& rgb_signed, VggWorkspace& ws) const {
    if (rgb_signed.c != 3) throw ContractError("feature extractor: expected RGB input");

    ws.preprocessed.resize(rgb_signed.h, rgb_signed.w, 3);
    for (std::size_t i = 0; i < rgb_signed.v.size(); i += 3)
        for (int ch = 0; ch < 3; ++ch) {
            const float unit = (rgb_signed.v[i + std::size_t(ch)] + 1.f) * 0.5f;
            ws.preprocessed.v[i + std::size_t(ch)] =
                (unit - kMean[std::size_t(ch)]) / kStd[std::size_t(ch)];
        }

    ws.z.resize(convs_.size());
    ws.y.resize(convs_.size());
    ws.pool_idx.resize(pool_after_.size());
    ws.pooled.resize(pool_after_.size());

    const Tensor* cur = &ws.preprocessed;
    std::size_t pool_i = 0;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        conv_forward(convs_[i], *cur, ws.z[i], ws.scratch);
        relu_forward(ws.z[i], ws.y[i]);
        cur = &ws.y[i];
        if (pool_i < pool_after_.size() && int(i) == pool_after_[pool_i]) {
            maxpool2x2_forward(*cur, ws.pooled[pool_i], ws.pool_idx[pool_i]);
            cur = &ws.pooled[pool_i];
            ++pool_i;
        }
    }
    return *cur;
}

Tensor FeatureExtractor::input_gradient(const Tensor& d_features, VggWorkspace& ws) const {
    auto pool_index_of = [&](int conv_idx) -> int {
        for (std::size_t p = 0; p < pool_after_.size(); ++p)
            if (pool_after_[p] == conv_idx) return int(p);
        return -1;
    };

    Tensor cur = d_features, tmp;
    int pool_i = int(pool_after_.size()) - 1;
    for (int i = int(convs_.size()) - 1; i >= 0; --i) {
        if (pool_i >= 0 && i == pool_after_[std::size_t(pool_i)]) {
            tmp.resize(ws.y[std::size_t(i)].h, ws.y[std::size_t(i)].w, ws.y[std::size_t(i)].c);
            tmp.zero();
            maxpool2x2_backward(cur, ws.pool_idx[std::size_t(pool_i)], tmp);
            std::swap(cur, tmp);
            --pool_i;
        }
        relu_backward(ws.z[std::size_t(i)], cur, tmp);
        const int prev_pool = i > 0 ? pool_index_of(i - 1) : -1;
        const Tensor& conv_in = i == 0 ? ws.preprocessed
                                : prev_pool >= 0 ? ws.pooled[std::size_t(prev_pool)]
                                                 : ws.y[std::size_t(i - 1)];
        cur.resize(conv_in.h, conv_in.w, conv_in.c);
        conv_backward_input(convs_[std::size_t(i)], tmp, cur, ws.scratch);
    }
    // back through the preprocessing affine map
    for (std::size_t i = 0; i < cur.v.size(); i += 3)
        for (int ch = 0; ch < 3; ++ch)
            cur.v[i + std::size_t(ch)] *= 0.5f / kStd[std::size_t(ch)];
    return cur;
}

std::size_t FeatureExtractor::parameter_count() const {
    std::size_t n = 0;
    for (const auto& c : convs_) n += c.param_count();
    return n;
}

}  // namespace ednig
