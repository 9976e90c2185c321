#include "ednig/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "ednig/error.hpp"

namespace ednig {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

constexpr std::size_t kStripBudgetFloats = 8u << 20;  // ~32 MB per strip buffer

int strip_rows_for(int w_out, int patch) {
    const std::size_t per_row = std::size_t(w_out) * patch;
    return std::max<int>(1, int(kStripBudgetFloats / std::max<std::size_t>(per_row, 1)));
}

// Gather im2col rows for output rows [oy0, oy1).
void im2col_strip(const ConvLayer& l, const Tensor& x, int oy0, int oy1, float* cols) {
    const int k = l.ksize, s = l.stride, pad = l.ksize / 2, cin = l.in_ch;
    const int w_out = ConvLayer::out_dim(x.w, s);
    const int row_len = k * k * cin;
    for (int oy = oy0; oy < oy1; ++oy) {
        float* row = cols + std::size_t(oy - oy0) * w_out * row_len;
        for (int ox = 0; ox < w_out; ++ox, row += row_len) {
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * s - pad + ky;
                float* seg = row + std::size_t(ky) * k * cin;
                if (iy < 0 || iy >= x.h) {
                    std::memset(seg, 0, sizeof(float) * k * cin);
                    continue;
                }
                const int ix0 = ox * s - pad;
                if (s == 1 && ix0 >= 0 && ix0 + k <= x.w) {
                    std::memcpy(seg, x.ptr(iy, ix0), sizeof(float) * k * cin);
                } else {
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ix0 + kx * 1;
                        if (ix < 0 || ix >= x.w)
                            std::memset(seg + kx * cin, 0, sizeof(float) * cin);
                        else
                            std::memcpy(seg + kx * cin, x.ptr(iy, ix), sizeof(float) * cin);
                    }
                }
            }
        }
    }
}

// Scatter-add dcols (rows for output rows [oy0, oy1)) back into dx.
void col2im_strip(const ConvLayer& l, const float* dcols, int oy0, int oy1, Tensor& dx) {
    const int k = l.ksize, s = l.stride, pad = l.ksize / 2, cin = l.in_ch;
    const int w_out = ConvLayer::out_dim(dx.w, s);
    const int row_len = k * k * cin;
    for (int oy = oy0; oy < oy1; ++oy) {
        const float* row = dcols + std::size_t(oy - oy0) * w_out * row_len;
        for (int ox = 0; ox < w_out; ++ox, row += row_len) {
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * s - pad + ky;
                if (iy < 0 || iy >= dx.h) continue;
                const float* seg = row + std::size_t(ky) * k * cin;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * s - pad + kx;
                    if (ix < 0 || ix >= dx.w) continue;
                    float* d = &dx.at(iy, ix, 0);
                    const float* g = seg + kx * cin;
                    for (int ch = 0; ch < cin; ++ch) d[ch] += g[ch];
                }
            }
        }
    }
}

}  // namespace

void conv_forward(const ConvLayer& l, const Tensor& x, Tensor& y, ConvScratch& scratch) {
    if (x.c != l.in_ch) throw ContractError("conv_forward: channel mismatch");
    const int h_out = ConvLayer::out_dim(x.h, l.stride);
    const int w_out = ConvLayer::out_dim(x.w, l.stride);
    if (y.h != h_out || y.w != w_out || y.c != l.out_ch) y.resize(h_out, w_out, l.out_ch);

    MapConst wmat(l.w.data(), l.ksize * l.ksize * l.in_ch, l.out_ch);

    if (l.ksize == 1 && l.stride == 1) {
        MapConst xm(x.v.data(), x.h * x.w, x.c);
        MapMat ym(y.v.data(), h_out * w_out, l.out_ch);
        ym.noalias() = xm * wmat;
    } else {
        const int patch = l.ksize * l.ksize * l.in_ch;
        const int strip = strip_rows_for(w_out, patch);
        scratch.cols.resize(std::size_t(strip) * w_out * patch);
        for (int oy0 = 0; oy0 < h_out; oy0 += strip) {
            const int oy1 = std::min(h_out, oy0 + strip);
            im2col_strip(l, x, oy0, oy1, scratch.cols.data());
            MapConst cm(scratch.cols.data(), (oy1 - oy0) * w_out, patch);
            MapMat ym(y.v.data() + std::size_t(oy0) * w_out * l.out_ch, (oy1 - oy0) * w_out,
                      l.out_ch);
            ym.noalias() = cm * wmat;
        }
    }

    // bias
    float* p = y.v.data();
    const std::size_t pixels = std::size_t(h_out) * w_out;
    for (std::size_t i = 0; i < pixels; ++i, p += l.out_ch)
        for (int ch = 0; ch < l.out_ch; ++ch) p[ch] += l.b[ch];
}

void conv_backward_input(const ConvLayer& l, const Tensor& dy, Tensor& dx, ConvScratch& scratch) {
    const int h_out = dy.h, w_out = dy.w;
    dx.zero();
    MapConst wmat(l.w.data(), l.ksize * l.ksize * l.in_ch, l.out_ch);

    if (l.ksize == 1 && l.stride == 1) {
        MapConst dym(dy.v.data(), h_out * w_out, l.out_ch);
        MapMat dxm(dx.v.data(), dx.h * dx.w, dx.c);
        dxm.noalias() = dym * wmat.transpose();
        return;
    }

    const int patch = l.ksize * l.ksize * l.in_ch;
    const int strip = strip_rows_for(w_out, patch);
    scratch.dcols.resize(std::size_t(strip) * w_out * patch);
    for (int oy0 = 0; oy0 < h_out; oy0 += strip) {
        const int oy1 = std::min(h_out, oy0 + strip);
        MapConst dym(dy.v.data() + std::size_t(oy0) * w_out * l.out_ch, (oy1 - oy0) * w_out,
                     l.out_ch);
        MapMat dcm(scratch.dcols.data(), (oy1 - oy0) * w_out, patch);
        dcm.noalias() = dym * wmat.transpose();
        col2im_strip(l, scratch.dcols.data(), oy0, oy1, dx);
    }
}

void conv_backward_params(const ConvLayer& l, const Tensor& x, const Tensor& dy,
                          std::vector<float>& dw, std::vector<float>& db, ConvScratch& scratch) {
    const int h_out = dy.h, w_out = dy.w;
    MapMat dwm(dw.data(), l.ksize * l.ksize * l.in_ch, l.out_ch);

    if (l.ksize == 1 && l.stride == 1) {
        MapConst xm(x.v.data(), x.h * x.w, x.c);
        MapConst dym(dy.v.data(), h_out * w_out, l.out_ch);
        dwm.noalias() += xm.transpose() * dym;
    } else {
        const int patch = l.ksize * l.ksize * l.in_ch;
        const int strip = strip_rows_for(w_out, patch);
        scratch.cols.resize(std::size_t(strip) * w_out * patch);
        for (int oy0 = 0; oy0 < h_out; oy0 += strip) {
            const int oy1 = std::min(h_out, oy0 + strip);
            im2col_strip(l, x, oy0, oy1, scratch.cols.data());
            MapConst cm(scratch.cols.data(), (oy1 - oy0) * w_out, patch);
            MapConst dym(dy.v.data() + std::size_t(oy0) * w_out * l.out_ch, (oy1 - oy0) * w_out,
                         l.out_ch);
            dwm.noalias() += cm.transpose() * dym;
        }
    }

    const float* p = dy.v.data();
    const std::size_t pixels = std::size_t(h_out) * w_out;
    for (std::size_t i = 0; i < pixels; ++i, p += l.out_ch)
        for (int ch = 0; ch < l.out_ch; ++ch) db[ch] += p[ch];
}

float swish(float x) {
    const float s = 1.f / (1.f + std::exp(-x));
    return x * s;
}

float swish_d1(float x) {
    const float s = 1.f / (1.f + std::exp(-x));
    return s + x * s * (1.f - s);
}

float swish_d2(float x) {
    const float s = 1.f / (1.f + std::exp(-x));
    return s * (1.f - s) * (2.f + x * (1.f - 2.f * s));
}

void swish_forward(const Tensor& z, Tensor& y) {
    if (!y.same_shape(z)) y.resize(z.h, z.w, z.c);
    for (std::size_t i = 0; i < z.v.size(); ++i) y.v[i] = swish(z.v[i]);
}

void swish_backward(const Tensor& z, const Tensor& dy, Tensor& dz) {
    if (!dz.same_shape(z)) dz.resize(z.h, z.w, z.c);
    for (std::size_t i = 0; i < z.v.size(); ++i) dz.v[i] = dy.v[i] * swish_d1(z.v[i]);
}

void relu_forward(const Tensor& z, Tensor& y) {
    if (!y.same_shape(z)) y.resize(z.h, z.w, z.c);
    for (std::size_t i = 0; i < z.v.size(); ++i) y.v[i] = z.v[i] > 0.f ? z.v[i] : 0.f;
}

void relu_backward(const Tensor& z, const Tensor& dy, Tensor& dz) {
    if (!dz.same_shape(z)) dz.resize(z.h, z.w, z.c);
    for (std::size_t i = 0; i < z.v.size(); ++i) dz.v[i] = z.v[i] > 0.f ? dy.v[i] : 0.f;
}

void tanh_forward(const Tensor& z, Tensor& y) {
    if (!y.same_shape(z)) y.resize(z.h, z.w, z.c);
    constexpr float bound = 1.f - 1e-6f;
    for (std::size_t i = 0; i < z.v.size(); ++i)
        y.v[i] = std::clamp(std::tanh(z.v[i]), -bound, bound);
}

void tanh_backward(const Tensor& y, const Tensor& dy, Tensor& dz) {
    if (!dz.same_shape(y)) dz.resize(y.h, y.w, y.c);
    for (std::size_t i = 0; i < y.v.size(); ++i) dz.v[i] = dy.v[i] * (1.f - y.v[i] * y.v[i]);
}

void maxpool2x2_forward(const Tensor& x, Tensor& y, std::vector<int>& idx) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw ContractError("maxpool2x2: dims must be even, got " + std::to_string(x.h) + "x" +
                            std::to_string(x.w));
    const int oh = x.h / 2, ow = x.w / 2;
    if (y.h != oh || y.w != ow || y.c != x.c) y.resize(oh, ow, x.c);
    idx.resize(y.v.size());
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int ch = 0; ch < x.c; ++ch) {
                int best = int((std::size_t(2 * oy) * x.w + 2 * ox) * x.c + ch);
                float m = x.v[best];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int cand =
                            int((std::size_t(2 * oy + dy) * x.w + (2 * ox + dx)) * x.c + ch);
                        if (x.v[cand] > m) { m = x.v[cand]; best = cand; }
                    }
                const std::size_t o = (std::size_t(oy) * ow + ox) * x.c + ch;
                y.v[o] = m;
                idx[o] = best;
            }
}

void maxpool2x2_backward(const Tensor& dy, const std::vector<int>& idx, Tensor& dx) {
    for (std::size_t i = 0; i < dy.v.size(); ++i) dx.v[std::size_t(idx[i])] += dy.v[i];
}

void maxpool_same_forward(const Tensor& x, int ksize, Tensor& y, std::vector<int>& idx) {
    const int r = ksize / 2;
    if (!y.same_shape(x)) y.resize(x.h, x.w, x.c);
    idx.resize(x.v.size());
    for (int oy = 0; oy < x.h; ++oy) {
        const int y0 = std::max(0, oy - r), y1 = std::min(x.h - 1, oy + r);
        for (int ox = 0; ox < x.w; ++ox) {
            const int x0 = std::max(0, ox - r), x1 = std::min(x.w - 1, ox + r);
            for (int ch = 0; ch < x.c; ++ch) {
                int best = int((std::size_t(y0) * x.w + x0) * x.c + ch);
                float m = x.v[best];
                for (int iy = y0; iy <= y1; ++iy)
                    for (int ix = x0; ix <= x1; ++ix) {
                        const int cand = int((std::size_t(iy) * x.w + ix) * x.c + ch);
                        if (x.v[cand] > m) { m = x.v[cand]; best = cand; }
                    }
                const std::size_t o = (std::size_t(oy) * x.w + ox) * x.c + ch;
                y.v[o] = m;
                idx[o] = best;
            }
        }
    }
}

void maxpool_same_backward(const Tensor& dy, const std::vector<int>& idx, Tensor& dx) {
    for (std::size_t i = 0; i < dy.v.size(); ++i) dx.v[std::size_t(idx[i])] += dy.v[i];
}

void upsample_nearest_x2_forward(const Tensor& x, Tensor& y) {
    if (y.h != 2 * x.h || y.w != 2 * x.w || y.c != x.c) y.resize(2 * x.h, 2 * x.w, x.c);
    for (int oy = 0; oy < y.h; ++oy) {
        const int iy = oy / 2;
        for (int ox = 0; ox < y.w; ++ox)
            std::memcpy(y.ptr(oy, ox), x.ptr(iy, ox / 2), sizeof(float) * x.c);
    }
}

void upsample_nearest_x2_backward(const Tensor& dy, Tensor& dx) {
    if (dy.h != 2 * dx.h || dy.w != 2 * dx.w || dy.c != dx.c)
        throw ContractError("upsample_nearest_x2_backward: shape mismatch");
    dx.zero();
    for (int oy = 0; oy < dy.h; ++oy) {
        const int iy = oy / 2;
        for (int ox = 0; ox < dy.w; ++ox) {
            float* d = &dx.at(iy, ox / 2, 0);
            const float* g = dy.ptr(oy, ox);
            for (int ch = 0; ch < dy.c; ++ch) d[ch] += g[ch];
        }
    }
}

void concat_channels(const Tensor& a, const Tensor& b, Tensor& y) {
    if (a.h != b.h || a.w != b.w) throw ContractError("concat_channels: spatial dims differ");
    if (y.h != a.h || y.w != a.w || y.c != a.c + b.c) y.resize(a.h, a.w, a.c + b.c);
    const std::size_t pixels = std::size_t(a.h) * a.w;
    for (std::size_t i = 0; i < pixels; ++i) {
        std::memcpy(&y.v[i * y.c], &a.v[i * a.c], sizeof(float) * a.c);
        std::memcpy(&y.v[i * y.c + a.c], &b.v[i * b.c], sizeof(float) * b.c);
    }
}

void split_channels(const Tensor& dy, Tensor& da, Tensor& db) {
    if (dy.c != da.c + db.c || dy.h != da.h || dy.w != da.w)
        throw ContractError("split_channels: shape mismatch");
    const std::size_t pixels = std::size_t(dy.h) * dy.w;
    for (std::size_t i = 0; i < pixels; ++i) {
        std::memcpy(&da.v[i * da.c], &dy.v[i * dy.c], sizeof(float) * da.c);
        std::memcpy(&db.v[i * db.c], &dy.v[i * dy.c + da.c], sizeof(float) * db.c);
    }
}

void require_finite(const Tensor& t, const std::string& where) {
    for (float x : t.v)
        if (!std::isfinite(x)) throw NumericError("non-finite value in " + where);
}

}  // namespace ednig
