#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ednig/layers.hpp"
#include "test_support.hpp"

using namespace ednig;

namespace {

// Direct evaluation of the conv definition (zero "same" padding).
Tensor naive_conv(const ConvLayer& l, const Tensor& x) {
    const int pad = l.ksize / 2;
    Tensor y(ConvLayer::out_dim(x.h, l.stride), ConvLayer::out_dim(x.w, l.stride), l.out_ch);
    for (int oy = 0; oy < y.h; ++oy)
        for (int ox = 0; ox < y.w; ++ox)
            for (int oc = 0; oc < l.out_ch; ++oc) {
                double acc = l.b[std::size_t(oc)];
                for (int ky = 0; ky < l.ksize; ++ky)
                    for (int kx = 0; kx < l.ksize; ++kx) {
                        const int iy = oy * l.stride - pad + ky;
                        const int ix = ox * l.stride - pad + kx;
                        if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                        for (int ic = 0; ic < l.in_ch; ++ic)
                            acc += double(x.at(iy, ix, ic)) *
                                   double(l.w[((std::size_t(ky) * l.ksize + kx) * l.in_ch + ic) *
                                                  l.out_ch +
                                              oc]);
                    }
                y.at(oy, ox, oc) = float(acc);
            }
    return y;
}

// Weighted sum of conv outputs -> scalar, used as the loss for grad checks.
double weighted_sum(const Tensor& t, const std::vector<float>& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.v.size(); ++i) s += double(t.v[i]) * double(weights[i]);
    return s;
}

}  // namespace

TEST_CASE("conv forward matches the naive definition (stride 1 and 2)") {
    for (int stride : {1, 2}) {
        ConvLayer l(3, 5, 3, stride);
        Rng rng(7);
        l.init_he_uniform(rng);
        fill_uniform(l.b, rng, -0.5f, 0.5f);
        Tensor x = test::random_tensor(9, 11, 3, 8);
        Tensor y;
        ConvScratch scratch;
        conv_forward(l, x, y, scratch);
        Tensor ref = naive_conv(l, x);
        REQUIRE(y.same_shape(ref));
        CHECK(test::max_abs_diff(y.v, ref.v) < 1e-5);
    }
}

TEST_CASE("1x1 conv fast path matches the naive definition") {
    ConvLayer l(6, 4, 1, 1);
    Rng rng(9);
    l.init_he_uniform(rng);
    fill_uniform(l.b, rng, -0.5f, 0.5f);
    Tensor x = test::random_tensor(5, 7, 6, 10);
    Tensor y;
    ConvScratch scratch;
    conv_forward(l, x, y, scratch);
    Tensor ref = naive_conv(l, x);
    CHECK(test::max_abs_diff(y.v, ref.v) < 1e-5);
}

TEST_CASE("conv backward input/params match finite differences") {
    for (int stride : {1, 2}) {
        CAPTURE(stride);
        ConvLayer l(2, 3, 3, stride);
        Rng rng(11);
        l.init_he_uniform(rng);
        fill_uniform(l.b, rng, -0.2f, 0.2f);
        Tensor x = test::random_tensor(6, 5, 2, 12);
        ConvScratch scratch;

        Tensor y0;
        conv_forward(l, x, y0, scratch);
        std::vector<float> head(y0.v.size());
        Rng hrng(13);
        fill_uniform(head, hrng, -1.f, 1.f);

        // analytic gradients
        Tensor dy(y0.h, y0.w, y0.c);
        dy.v = head;
        Tensor dx(x.h, x.w, x.c);
        conv_backward_input(l, dy, dx, scratch);
        std::vector<float> dw(l.w.size(), 0.f), db(l.b.size(), 0.f);
        conv_backward_params(l, x, dy, dw, db, scratch);

        auto eval = [&]() {
            Tensor y;
            conv_forward(l, x, y, scratch);
            return weighted_sum(y, head);
        };

        const double h = 1e-3;
        Rng pick(14);
        for (int trial = 0; trial < 20; ++trial) {
            // input coordinate
            std::size_t i = pick.uniform_index(x.v.size());
            float orig = x.v[i];
            x.v[i] = float(orig + h);
            const double lp = eval();
            x.v[i] = float(orig - h);
            const double lm = eval();
            x.v[i] = orig;
            const double fd = (lp - lm) / (2 * h);
            CHECK(double(dx.v[i]) == doctest::Approx(fd).epsilon(1e-3).scale(1.0));

            // weight coordinate
            std::size_t j = pick.uniform_index(l.w.size());
            orig = l.w[j];
            l.w[j] = float(orig + h);
            const double wp = eval();
            l.w[j] = float(orig - h);
            const double wm = eval();
            l.w[j] = orig;
            const double wfd = (wp - wm) / (2 * h);
            CHECK(double(dw[j]) == doctest::Approx(wfd).epsilon(1e-3).scale(1.0));
        }

        // bias gradient is the plain column sum
        for (int oc = 0; oc < l.out_ch; ++oc) {
            double expect = 0.0;
            for (std::size_t i = std::size_t(oc); i < dy.v.size(); i += std::size_t(l.out_ch))
                expect += dy.v[i];
            CHECK(double(db[std::size_t(oc)]) == doctest::Approx(expect).epsilon(1e-4));
        }
    }
}

TEST_CASE("swish derivatives match finite differences") {
    for (float x : {-3.f, -0.7f, 0.f, 0.4f, 2.5f}) {
        const double h = 1e-4;
        const double d1 = (double(swish(x + float(h))) - double(swish(x - float(h)))) / (2 * h);
        CHECK(double(swish_d1(x)) == doctest::Approx(d1).epsilon(1e-3));
        const double d2 =
            (double(swish_d1(x + float(h))) - double(swish_d1(x - float(h)))) / (2 * h);
        CHECK(double(swish_d2(x)) == doctest::Approx(d2).epsilon(1e-2).scale(0.1));
    }
}

TEST_CASE("stride-1 same max pool: impulse produces a k x k plateau") {
    Tensor x(15, 15, 1);
    x.at(7, 7, 0) = 1.f;
    for (int k : {5, 9, 13}) {
        Tensor y;
        std::vector<int> idx;
        maxpool_same_forward(x, k, y, idx);
        const int r = k / 2;
        for (int yy = 0; yy < 15; ++yy)
            for (int xx = 0; xx < 15; ++xx) {
                const bool inside = std::abs(yy - 7) <= r && std::abs(xx - 7) <= r;
                CHECK(y.at(yy, xx, 0) == (inside ? 1.f : 0.f));
            }
    }
}

TEST_CASE("max pools route gradients to their argmax (adjoint check)") {
    Tensor x = test::random_tensor(8, 8, 3, 21);
    Tensor y;
    std::vector<int> idx;
    maxpool2x2_forward(x, y, idx);

    // <pool(x), g> gradient w.r.t. x == scatter of g to argmax positions;
    // verify via finite differences on a few coordinates.
    std::vector<float> g(y.v.size());
    Rng rng(22);
    fill_uniform(g, rng, -1.f, 1.f);
    Tensor dy(y.h, y.w, y.c);
    dy.v = g;
    Tensor dx(x.h, x.w, x.c);
    dx.zero();
    maxpool2x2_backward(dy, idx, dx);

    auto eval = [&]() {
        Tensor yy;
        std::vector<int> ii;
        maxpool2x2_forward(x, yy, ii);
        return weighted_sum(yy, g);
    };
    Rng pick(23);
    for (int t = 0; t < 15; ++t) {
        const std::size_t i = pick.uniform_index(x.v.size());
        const float orig = x.v[i];
        const double h = 1e-3;  // small enough to not flip any argmax here
        x.v[i] = float(orig + h);
        const double lp = eval();
        x.v[i] = float(orig - h);
        const double lm = eval();
        x.v[i] = orig;
        CHECK(double(dx.v[i]) == doctest::Approx((lp - lm) / (2 * h)).epsilon(5e-2).scale(1.0));
    }
}

TEST_CASE("nearest upsample backward is the adjoint of forward") {
    Tensor x = test::random_tensor(4, 5, 3, 25);
    Tensor y;
    upsample_nearest_x2_forward(x, y);
    REQUIRE(y.h == 8);
    REQUIRE(y.w == 10);

    Tensor g = test::random_tensor(8, 10, 3, 26);
    Tensor dx(4, 5, 3);
    upsample_nearest_x2_backward(g, dx);

    // <up(x), g> == <x, up^T(g)>
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) lhs += double(y.v[i]) * double(g.v[i]);
    for (std::size_t i = 0; i < x.v.size(); ++i) rhs += double(x.v[i]) * double(dx.v[i]);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("concat/split are inverse channel maps") {
    Tensor a = test::random_tensor(3, 4, 2, 27);
    Tensor b = test::random_tensor(3, 4, 5, 28);
    Tensor y;
    concat_channels(a, b, y);
    REQUIRE(y.c == 7);
    Tensor da(3, 4, 2), db(3, 4, 5);
    split_channels(y, da, db);
    CHECK(test::max_abs_diff(da.v, a.v) == 0.0);
    CHECK(test::max_abs_diff(db.v, b.v) == 0.0);
}

TEST_CASE("require_finite names the offending site") {
    Tensor t(2, 2, 1);
    t.v[2] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_WITH_AS(require_finite(t, "critic block 3"), doctest::Contains("critic block 3"),
                         NumericError);
}
