#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ednig/illumination.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ednig;



TEST_CASE("bright channel of a constant image is that constant") {
    Image img(9, 9, 3, ValueRange::Unit);
    std::fill(img.data.begin(), img.data.end(), 0.37f);
    auto m = bright_channel(img, 5);
    CHECK_FALSE(m.refined);
    for (float v : m.map.data) CHECK(v == doctest::Approx(0.37f));
}

TEST_CASE("bright channel dilates a single bright pixel to its patch") {
    Image img(5, 5, 3, ValueRange::Unit);
    img.at(2, 2, 0) = 1.f;  // red pixel at the center
    auto m = bright_channel(img, 3);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            const bool inside = std::abs(y - 2) <= 1 && std::abs(x - 2) <= 1;
            CHECK(m.map.at(y, x, 0) == doctest::Approx(inside ? 1.f : 0.f));
        }
}

TEST_CASE("bright channel matches the brute-force oracle") {
    Image img = test::random_image(16, 16, 3, ValueRange::Unit, 31);
    auto m = bright_channel(img, 5);
    Image ref = test::naive_bright_channel(img, 5);
    CHECK(test::max_abs_diff(m.map.data, ref.data) < 1e-7);
}

TEST_CASE("bright channel with patch 1 is the per-pixel channel max") {
    Image img = test::random_image(8, 10, 3, ValueRange::Unit, 32);
    auto m = bright_channel(img, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) {
            const float expect =
                std::max(img.at(y, x, 0), std::max(img.at(y, x, 1), img.at(y, x, 2)));
            CHECK(m.map.at(y, x, 0) == expect);
        }
}

TEST_CASE("bright channel is monotone and dominates the channel max") {
    Image a = test::random_image(12, 12, 3, ValueRange::Unit, 33);
    Image b = a;
    Rng rng(34);
    for (float& v : b.data) v = std::min(1.f, v + float(rng.uniform()) * 0.2f);  // b >= a

    auto ma = bright_channel(a, 5);
    auto mb = bright_channel(b, 5);
    for (std::size_t i = 0; i < ma.map.data.size(); ++i)
        CHECK(mb.map.data[i] >= ma.map.data[i]);

    auto m1 = bright_channel(a, 1);
    for (std::size_t i = 0; i < ma.map.data.size(); ++i)
        CHECK(ma.map.data[i] >= m1.map.data[i]);
}

TEST_CASE("bright channel rejects non-RGB and non-unit inputs") {
    Image gray(4, 4, 1, ValueRange::Unit);
    CHECK_THROWS_AS(bright_channel(gray, 3), ContractError);
    Image bytes(4, 4, 3, ValueRange::Byte);
    CHECK_THROWS_AS(bright_channel(bytes, 3), ContractError);
    Image ok(4, 4, 3, ValueRange::Unit);
    CHECK_THROWS_AS(bright_channel(ok, 4), ContractError);
}

TEST_CASE("guided filter of a constant src returns the constant") {
    Image guide = grayscale_luma(test::random_image(16, 16, 3, ValueRange::Unit, 40));
    IlluminationMap src;
    src.map = Image(16, 16, 1, ValueRange::Unit);
    std::fill(src.map.data.begin(), src.map.data.end(), 0.6f);
    auto out = guided_filter(guide, src, 3, 1e-3f);
    CHECK(out.refined);
    for (float v : out.map.data) CHECK(v == doctest::Approx(0.6f).epsilon(1e-5));
}

TEST_CASE("guided filter self-guidance with tiny epsilon is near identity") {
    Image guide(32, 32, 1, ValueRange::Unit);
    Rng rng(41);
    for (float& v : guide.data) v = float(rng.uniform());
    IlluminationMap src;
    src.map = guide;
    auto out = guided_filter(guide, src, 2, 1e-8f);
    CHECK(test::max_abs_diff(out.map.data, guide.data) < 1e-3);
}

TEST_CASE("guided filter matches the naive windowed-statistics oracle") {
    Image guide(32, 32, 1, ValueRange::Unit);
    Rng rng(42);
    for (float& v : guide.data) v = float(rng.uniform());
    IlluminationMap src;
    src.map = Image(32, 32, 1, ValueRange::Unit);
    for (float& v : src.map.data) v = float(rng.uniform());

    auto out = guided_filter(guide, src, 4, 1e-3f);
    Image ref = test::naive_guided_filter(guide, src.map, 4, 1e-3f);
    CHECK(test::max_abs_diff(out.map.data, ref.data) < 1e-5);
}

TEST_CASE("guided filter preserves the src mean under a constant guide") {
    // Every window touching the perturbation must be full for exact mass
    // preservation, so the non-constant content stays >= 3r from the border.
    const int n = 48, r = 3;
    Image guide(n, n, 1, ValueRange::Unit);
    std::fill(guide.data.begin(), guide.data.end(), 0.5f);

    IlluminationMap src;
    src.map = Image(n, n, 1, ValueRange::Unit);
    std::fill(src.map.data.begin(), src.map.data.end(), 0.5f);
    Rng rng(43);
    for (int y = 3 * r + 1; y < n - 3 * r - 1; ++y)
        for (int x = 3 * r + 1; x < n - 3 * r - 1; ++x)
            src.map.at(y, x, 0) = 0.5f + float(rng.uniform(-0.3, 0.3));

    auto out = guided_filter(guide, src, r, 1e-3f);
    double mean_in = 0.0, mean_out = 0.0;
    for (float v : src.map.data) mean_in += v;
    for (float v : out.map.data) mean_out += v;
    mean_in /= double(src.map.data.size());
    mean_out /= double(out.map.data.size());
    CHECK(std::abs(mean_in - mean_out) < 1e-6);
}

TEST_CASE("guided filter rejects mismatched dims") {
    Image guide(8, 8, 1, ValueRange::Unit);
    IlluminationMap src;
    src.map = Image(8, 9, 1, ValueRange::Unit);
    CHECK_THROWS_AS(guided_filter(guide, src, 2, 1e-3f), ContractError);
}

TEST_CASE("illumination map preserves constants and composes the two stages") {
    Image gray_img(24, 24, 3, ValueRange::Unit);
    std::fill(gray_img.data.begin(), gray_img.data.end(), 0.5f);
    IlluminationParams params{5, 4, 1e-3f};
    auto m = illumination_map(gray_img, params);
    CHECK(m.refined);
    for (float v : m.map.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-5));

    // pipeline equals the composition of the component oracles
    Image img = test::random_image(64, 64, 3, ValueRange::Unit, 44);
    IlluminationParams p2{5, 3, 1e-3f};
    auto full = illumination_map(img, p2);
    Image bc = test::naive_bright_channel(img, p2.patch_size);
    Image ref = test::naive_guided_filter(grayscale_luma(img), bc, p2.gf_radius, p2.gf_epsilon);
    CHECK(test::max_abs_diff(full.map.data, ref.data) < 1e-5);

    for (float v : full.map.data) {
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
    }
}
