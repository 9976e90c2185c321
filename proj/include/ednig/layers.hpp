#pragma once

#include <array>
#include <string>
#include <vector>

#include "ednig/rng.hpp"
#include "ednig/tensor.hpp"

namespace ednig {

// 2D convolution with zero "same" padding (pad = ksize/2).
// Weights laid out [ky][kx][in][out] (HWIO), matching the HWC tensors.
struct ConvLayer {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1;
    std::vector<float> w, b;

    ConvLayer() = default;
    ConvLayer(int in, int out, int k, int s)
        : in_ch(in), out_ch(out), ksize(k), stride(s),
          w(std::size_t(k) * k * in * out, 0.f), b(out, 0.f) {}

    void init_he_uniform(Rng& rng) {
        const float fan_in = float(ksize) * ksize * in_ch;
        const float limit = std::sqrt(6.f / fan_in);
        fill_uniform(w, rng, -limit, limit);
        std::fill(b.begin(), b.end(), 0.f);
    }

    std::size_t param_count() const { return w.size() + b.size(); }

    static int out_dim(int in, int stride) { return (in + stride - 1) / stride; }
};

// Reusable im2col strip buffers.
struct ConvScratch {
    std::vector<float> cols;
    std::vector<float> dcols;
};

void conv_forward(const ConvLayer& l, const Tensor& x, Tensor& y, ConvScratch& scratch);
// dx is overwritten.
void conv_backward_input(const ConvLayer& l, const Tensor& dy, Tensor& dx, ConvScratch& scratch);
// dw/db are accumulated into.
void conv_backward_params(const ConvLayer& l, const Tensor& x, const Tensor& dy,
                          std::vector<float>& dw, std::vector<float>& db, ConvScratch& scratch);

// Swish x*sigmoid(x) and its first two derivatives.
float swish(float x);
float swish_d1(float x);
float swish_d2(float x);

void swish_forward(const Tensor& z, Tensor& y);
// dz = dy * swish'(z); dz may alias dy.
void swish_backward(const Tensor& z, const Tensor& dy, Tensor& dz);

void relu_forward(const Tensor& z, Tensor& y);
void relu_backward(const Tensor& z, const Tensor& dy, Tensor& dz);

// Output kept strictly inside (-1, 1).
void tanh_forward(const Tensor& z, Tensor& y);
void tanh_backward(const Tensor& y, const Tensor& dy, Tensor& dz);

// 2x2 stride-2 max pooling; idx stores the linear argmax into x.
void maxpool2x2_forward(const Tensor& x, Tensor& y, std::vector<int>& idx);
// Accumulates into dx (caller zeroes when appropriate).
void maxpool2x2_backward(const Tensor& dy, const std::vector<int>& idx, Tensor& dx);

// k x k stride-1 max pooling, window clamped to the image (SPP branches).
void maxpool_same_forward(const Tensor& x, int ksize, Tensor& y, std::vector<int>& idx);
void maxpool_same_backward(const Tensor& dy, const std::vector<int>& idx, Tensor& dx);

void upsample_nearest_x2_forward(const Tensor& x, Tensor& y);
void upsample_nearest_x2_backward(const Tensor& dy, Tensor& dx);

void concat_channels(const Tensor& a, const Tensor& b, Tensor& y);
// Splits dy back into the two channel groups, overwriting da/db.
void split_channels(const Tensor& dy, Tensor& da, Tensor& db);

// Throws NumericError naming `where` if t contains NaN/Inf.
void require_finite(const Tensor& t, const std::string& where);

}  // namespace ednig
