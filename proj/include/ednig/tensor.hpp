#pragma once

#include <cstddef>
#include <vector>

#include "ednig/error.hpp"
#include "ednig/rng.hpp"

namespace ednig {

// Dense H x W x C float map, HWC layout. The working currency of the networks.
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(std::size_t(h_) * w_ * c_, 0.f) {}

    float& at(int y, int x, int ch) { return v[(std::size_t(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return v[(std::size_t(y) * w + x) * c + ch]; }

    float* ptr(int y, int x) { return v.data() + (std::size_t(y) * w + x) * c; }
    const float* ptr(int y, int x) const { return v.data() + (std::size_t(y) * w + x) * c; }

    std::size_t size() const { return v.size(); }

    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

    void zero() { std::fill(v.begin(), v.end(), 0.f); }

    void resize(int h_, int w_, int c_) {
        h = h_; w = w_; c = c_;
        v.assign(std::size_t(h_) * w_ * c_, 0.f);
    }
};

inline void fill_uniform(std::vector<float>& v, Rng& rng, float lo, float hi) {
    for (float& x : v) x = float(rng.uniform(lo, hi));
}

inline void fill_uniform(Tensor& t, Rng& rng, float lo, float hi) { fill_uniform(t.v, rng, lo, hi); }

}  // namespace ednig
