#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "ednig/nr_iqa.hpp"
#include "test_support.hpp"

#ifdef EDNIG_HAVE_OPENCV_QUALITY
#include <opencv2/imgcodecs.hpp>
#include <opencv2/quality/qualitybrisque.hpp>
#endif

using namespace ednig;

namespace {

const std::filesystem::path kData = std::filesystem::path(EDNIG_SOURCE_DIR) / "data";

Image corpus_image(const std::string& name) {
    return read_png(kData / "corpus" / (name + ".png"));
}

Image with_noise(const Image& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    for (float& v : out.data) v = float(quantize_u8(float(v + sigma * rng.normal())));
    return out;
}

// Direct per-pixel evaluation of the local-statistics definition.
Image naive_mscn(const Image& gray, int window, double sigma_w) {
    const int r = window / 2;
    std::vector<double> kernel;
    double ksum = 0.0;
    for (int i = -r; i <= r; ++i) {
        kernel.push_back(std::exp(-double(i) * i / (2.0 * sigma_w * sigma_w)));
        ksum += kernel.back();
    }
    for (double& k : kernel) k /= ksum;
    auto mirror = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };

    Image out(gray.height, gray.width, 1, ValueRange::Unit);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x) {
            double mu = 0.0, mu2 = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double wgt = kernel[std::size_t(dy + r)] * kernel[std::size_t(dx + r)];
                    const double v = gray.at(mirror(y + dy, gray.height), mirror(x + dx, gray.width), 0);
                    mu += wgt * v;
                    mu2 += wgt * v * v;
                }
            const double s = std::sqrt(std::max(0.0, mu2 - mu * mu));
            out.at(y, x, 0) = float((gray.at(y, x, 0) - mu) / (s + 1.0));
        }
    return out;
}

}  // namespace

TEST_CASE("mscn of a constant image is zero") {
    Image img(24, 24, 1, ValueRange::Byte);
    std::fill(img.data.begin(), img.data.end(), 73.f);
    Image out = mscn(img);
    // sigma is exactly zero; the numerator carries only kernel-normalization
    // rounding, orders of magnitude below any real coefficient
    for (float v : out.data) CHECK(std::abs(v) < 1e-4f);
}

TEST_CASE("mscn matches the naive windowed implementation") {
    Image img = test::random_image(16, 16, 1, ValueRange::Byte, 1);
    Image fast = mscn(img);
    Image slow = naive_mscn(img, 7, 7.0 / 6.0);
    CHECK(test::max_abs_diff(fast.data, slow.data) < 1e-6);
}

TEST_CASE("mscn of white noise has near-unit sample variance") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Image img(64, 64, 1, ValueRange::Byte);
        Rng rng(100 + seed);
        for (float& v : img.data) v = float(rng.uniform(0.0, 255.0));
        Image coeff = mscn(img);
        double mean = 0.0, var = 0.0;
        for (float v : coeff.data) mean += v;
        mean /= double(coeff.data.size());
        for (float v : coeff.data) var += (v - mean) * (v - mean);
        var /= double(coeff.data.size());
        CHECK(var > 0.5);
        CHECK(var < 1.5);
    }
}

TEST_CASE("ggd fit recovers alpha=2 for gaussian and alpha=1 for laplacian") {
    Rng rng(7);
    std::vector<float> gauss(100000);
    for (float& v : gauss) v = float(rng.normal());
    const GgdFit g = fit_ggd(gauss);
    CHECK(g.alpha == doctest::Approx(2.0).epsilon(0.05));
    CHECK(g.sigma == doctest::Approx(1.0).epsilon(0.05));

    std::vector<float> laplace(100000);
    for (float& v : laplace) {
        const double u = rng.uniform() - 0.5;
        v = float(-std::copysign(std::log(1.0 - 2.0 * std::abs(u)), u));
    }
    CHECK(fit_ggd(laplace).alpha == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("aggd fit: gaussian samples give alpha ~2 with balanced sides") {
    Rng rng(8);
    std::vector<float> samples(100000);
    for (float& v : samples) v = float(rng.normal());
    const AggdFit f = fit_aggd(samples);
    CHECK(f.alpha == doctest::Approx(2.0).epsilon(0.05));
    CHECK(f.sigma_left == doctest::Approx(f.sigma_right).epsilon(0.05));
    CHECK(std::abs(f.mean_eta) < 0.05);
}

TEST_CASE("aggd fit: negation swaps the sides and preserves alpha exactly") {
    Rng rng(9);
    std::vector<float> x(5000);
    for (float& v : x) v = float(rng.normal() * 0.8 + 0.3);
    std::vector<float> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];

    const AggdFit a = fit_aggd(x);
    const AggdFit b = fit_aggd(neg);
    CHECK(a.alpha == b.alpha);  // bitwise: canonical ratio makes the grid argmin symmetric
    CHECK(a.sigma_left == b.sigma_right);
    CHECK(a.sigma_right == b.sigma_left);
    CHECK(a.mean_eta == doctest::Approx(-b.mean_eta).epsilon(1e-12));
}

TEST_CASE("aggd fit: degenerate all-zero input falls back gracefully") {
    std::vector<float> zeros(500, 0.f);
    const AggdFit f = fit_aggd(zeros);
    CHECK(f.alpha == 2.0);
    CHECK(f.sigma_left > 0.0);
    CHECK(f.sigma_right > 0.0);
}

#ifdef EDNIG_HAVE_OPENCV_QUALITY
TEST_CASE("brisque features cross-check against the reference implementation") {
    for (const char* name : {"chelsea", "camera", "coffee"}) {
        CAPTURE(name);
        const auto path = kData / "corpus" / (std::string(name) + ".png");
        cv::Mat m = cv::imread(path.string());
        REQUIRE_FALSE(m.empty());
        cv::Mat ref;
        cv::quality::QualityBRISQUE::computeFeatures(m, ref);
        REQUIRE(ref.cols == 36);

        const auto ours = brisque_features(read_png(path));
        for (int i = 0; i < 36; ++i) {
            CAPTURE(i);
            const double want = double(ref.at<float>(0, i));
            const double tol = std::max(0.012, 0.06 * std::abs(want));
            CHECK(std::abs(ours[std::size_t(i)] - want) < tol);
        }
    }
}
#endif

TEST_CASE("brisque model: evaluator matches the exported regressor goldens") {
    const BrisqueModel model = BrisqueModel::load(kData / "brisque");

    std::ifstream f(kData / "brisque" / "golden.json");
    REQUIRE(f.good());
    nlohmann::json golden;
    f >> golden;
    const auto feats = golden.at("features");
    const auto scores = golden.at("scores");
    for (std::size_t i = 0; i < feats.size(); ++i) {
        std::array<double, 36> x{};
        for (std::size_t j = 0; j < 36; ++j) x[j] = feats[i][j].get<double>();
        CHECK(model.predict(x) == doctest::Approx(scores[i].get<double>()).epsilon(1e-4));
    }
}

TEST_CASE("brisque: distortion raises the score; flip changes it only marginally") {
    const BrisqueModel model = BrisqueModel::load(kData / "brisque");
    for (const char* name : {"astronaut", "coffee"}) {
        CAPTURE(name);
        const Image img = corpus_image(name);
        const double clean = brisque(img, model);
        const double noisy = brisque(with_noise(img, 35.0, 5), model);
        CHECK(noisy > clean + 5.0);

        const double flipped = brisque(flip_horizontal(img), model);
        CHECK(std::abs(flipped - clean) < 0.05);
    }
}

TEST_CASE("brisque is deterministic") {
    const BrisqueModel model = BrisqueModel::load(kData / "brisque");
    const Image img = corpus_image("camera");
    CHECK(brisque(img, model) == brisque(img, model));
}

TEST_CASE("missing model files raise errors naming the expected path") {
    CHECK_THROWS_WITH_AS(BrisqueModel::load("/nonexistent/brisque"),
                         doctest::Contains("/nonexistent/brisque"), ArchiveError);
    CHECK_THROWS_WITH_AS(NiqeModel::load("/nonexistent/niqe"),
                         doctest::Contains("/nonexistent/niqe"), ArchiveError);
}

TEST_CASE("niqe: pristine corpus fixture scores low") {
    const NiqeModel model = NiqeModel::load(kData / "niqe");
    const Image img = corpus_image("astronaut");
    const double score = niqe(img, model);
    CHECK(score < 6.0);
    CHECK(score >= 0.0);
    CHECK(niqe(img, model) == score);  // deterministic
}

TEST_CASE("niqe strictly increases under strong gaussian noise (5 fixtures)") {
    const NiqeModel model = NiqeModel::load(kData / "niqe");
    for (const char* name : {"astronaut", "camera", "chelsea", "coffee", "rocket"}) {
        CAPTURE(name);
        const Image img = corpus_image(name);
        const double clean = niqe(img, model);
        const double noisy = niqe(with_noise(img, 50.0, 11), model);
        CHECK(noisy > clean);
    }
}

TEST_CASE("niqe rejects images with fewer than two patches") {
    const NiqeModel model = NiqeModel::load(kData / "niqe");
    Image tiny = test::random_image(96, 96, 3, ValueRange::Byte, 12);
    CHECK_THROWS_AS(niqe(tiny, model), ContractError);
}

TEST_CASE("niqe model round-trips through its archive") {
    const auto dir = test::temp_dir("niqe_rt");
    NiqeModel m = NiqeModel::load(kData / "niqe");
    m.save(dir / "model", "round-trip test");
    const NiqeModel back = NiqeModel::load(dir / "model");
    CHECK(back.patch_size == m.patch_size);
    CHECK(back.sharpness_fraction == m.sharpness_fraction);
    for (std::size_t i = 0; i < 36; ++i)
        CHECK(back.mean[i] == doctest::Approx(m.mean[i]).epsilon(1e-6));
    std::filesystem::remove_all(dir);
}
