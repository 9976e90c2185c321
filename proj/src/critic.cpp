#include "ednig/critic.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "ednig/error.hpp"

namespace ednig {

void CriticConfig::validate() const {
    if (base_channels < 1) throw ContractError("CriticConfig: base_channels must be positive");
    if (num_blocks < 1) throw ContractError("CriticConfig: num_blocks must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw ContractError("CriticConfig: kernel must be odd");
    if (stride != 2) throw ContractError("CriticConfig: stride must be 2");
    if (input_channels < 1) throw ContractError("CriticConfig: input_channels must be positive");
}

nlohmann::json CriticConfig::to_json() const {
    return {{"base_channels", base_channels},
            {"num_blocks", num_blocks},
            {"kernel", kernel},
            {"stride", stride},
            {"input_channels", input_channels}};
}

CriticConfig CriticConfig::from_json(const nlohmann::json& j) {
    CriticConfig c;
    c.base_channels = j.value("base_channels", c.base_channels);
    c.num_blocks = j.value("num_blocks", c.num_blocks);
    c.kernel = j.value("kernel", c.kernel);
    c.stride = j.value("stride", c.stride);
    c.input_channels = j.value("input_channels", c.input_channels);
    c.validate();
    return c;
}

Critic::Critic(const CriticConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), init_seed_(init_seed) {
    cfg_.validate();
    Rng rng(init_seed);
    for (int i = 0; i < cfg_.num_blocks; ++i) {
        const int in = i == 0 ? cfg_.input_channels : cfg_.block_width(i - 1);
        blocks_.emplace_back(in, cfg_.block_width(i), cfg_.kernel, cfg_.stride);
        blocks_.back().init_he_uniform(rng);
    }
    const int top = cfg_.block_width(cfg_.num_blocks - 1);
    head_w.resize(std::size_t(top));
    const float limit = std::sqrt(6.f / float(top));
    fill_uniform(head_w, rng, -limit, limit);
    head_b.assign(1, 0.f);
}

double Critic::score(const Tensor& x, CriticWorkspace& ws) const {
    if (x.c != cfg_.input_channels)
        throw ContractError("critic score: expected " + std::to_string(cfg_.input_channels) +
                            " channels, got " + std::to_string(x.c));
    const int f = cfg_.downsample_factor();
    if (x.h % f != 0 || x.w % f != 0)
        throw ContractError("critic score: dims " + std::to_string(x.w) + "x" +
                            std::to_string(x.h) + " not divisible by " + std::to_string(f));

    ws.input = x;
    ws.z.resize(blocks_.size());
    ws.x.resize(blocks_.size());
    const Tensor* cur = &ws.input;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        conv_forward(blocks_[i], *cur, ws.z[i], ws.scratch);
        swish_forward(ws.z[i], ws.x[i]);
        require_finite(ws.x[i], "critic block " + std::to_string(i + 1));
        cur = &ws.x[i];
    }

    const Tensor& top = *cur;
    const std::size_t pixels = std::size_t(top.h) * top.w;
    ws.gap.assign(std::size_t(top.c), 0.0);
    const float* p = top.v.data();
    for (std::size_t i = 0; i < pixels; ++i, p += top.c)
        for (int ch = 0; ch < top.c; ++ch) ws.gap[std::size_t(ch)] += p[ch];
    for (double& g : ws.gap) g /= double(pixels);

    double s = double(head_b[0]);
    for (std::size_t ch = 0; ch < ws.gap.size(); ++ch) s += ws.gap[ch] * double(head_w[ch]);
    if (!std::isfinite(s)) throw NumericError("non-finite value in critic head");
    ws.score = s;
    return s;
}

void Critic::backward_params(double dscore, CriticWorkspace& ws, GradBuffer& grads) const {
    // Slots: blocks (w, b pairs), then head w, head b.
    const std::size_t head_slot = 2 * blocks_.size();
    const Tensor& top = ws.x.back();
    const std::size_t pixels = std::size_t(top.h) * top.w;

    for (std::size_t ch = 0; ch < ws.gap.size(); ++ch)
        grads.g[head_slot][ch] += float(dscore * ws.gap[ch]);
    grads.g[head_slot + 1][0] += float(dscore);

    Tensor cur(top.h, top.w, top.c);
    const float scale = float(dscore / double(pixels));
    for (std::size_t i = 0; i < pixels; ++i)
        for (int ch = 0; ch < top.c; ++ch)
            cur.v[i * std::size_t(top.c) + ch] = scale * head_w[std::size_t(ch)];

    Tensor tmp;
    for (int i = int(blocks_.size()) - 1; i >= 0; --i) {
        swish_backward(ws.z[std::size_t(i)], cur, tmp);
        const Tensor& conv_in = i == 0 ? ws.input : ws.x[std::size_t(i - 1)];
        conv_backward_params(blocks_[std::size_t(i)], conv_in, tmp, grads.g[2 * std::size_t(i)],
                             grads.g[2 * std::size_t(i) + 1], ws.scratch);
        if (i > 0) {
            cur.resize(conv_in.h, conv_in.w, conv_in.c);
            conv_backward_input(blocks_[std::size_t(i)], tmp, cur, ws.scratch);
        }
    }
}

void Critic::backward_input_only(CriticWorkspace& ws, Tensor& dx) const {
    const Tensor& top = ws.x.back();
    const std::size_t pixels = std::size_t(top.h) * top.w;

    Tensor cur(top.h, top.w, top.c);
    const float scale = 1.f / float(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
        for (int ch = 0; ch < top.c; ++ch)
            cur.v[i * std::size_t(top.c) + ch] = scale * head_w[std::size_t(ch)];

    Tensor tmp;
    for (int i = int(blocks_.size()) - 1; i >= 0; --i) {
        swish_backward(ws.z[std::size_t(i)], cur, tmp);
        const Tensor& conv_in = i == 0 ? ws.input : ws.x[std::size_t(i - 1)];
        cur.resize(conv_in.h, conv_in.w, conv_in.c);
        conv_backward_input(blocks_[std::size_t(i)], tmp, cur, ws.scratch);
    }
    dx = std::move(cur);
}

Tensor Critic::input_gradient(CriticWorkspace& ws) const {
    Tensor dx;
    backward_input_only(ws, dx);
    return dx;
}

double Critic::gradient_penalty_at(const Tensor& x_hat, CriticWorkspace& ws, GradBuffer* grads,
                                   double scale) const {
    score(x_hat, ws);
    Tensor g;
    backward_input_only(ws, g);

    double norm_sq = 0.0;
    for (float v : g.v) norm_sq += double(v) * double(v);
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm in gradient penalty");
    const double penalty = (norm - 1.0) * (norm - 1.0);
    if (grads == nullptr || scale == 0.0) return penalty;

    // d(scale * penalty)/dtheta = d/dtheta [ v . grad_x C ] with the
    // contraction vector v = 2 * scale * (norm - 1)/norm * g held constant.
    // v . grad_x C is the directional derivative of C along v, computed by a
    // tangent (JVP) pass; differentiating that scalar w.r.t. the parameters
    // walks both the primal and tangent chains.
    if (norm < 1e-12) return penalty;  // subgradient 0 at g = 0

    const double vscale = 2.0 * scale * (norm - 1.0) / norm;
    ws.tangent_in.resize(g.h, g.w, g.c);
    for (std::size_t i = 0; i < g.v.size(); ++i) ws.tangent_in.v[i] = float(vscale * double(g.v[i]));

    // Tangent forward: tz_i = W_i * t_{i-1} (no bias), tx_i = swish'(z_i) .* tz_i.
    ws.tz.resize(blocks_.size());
    ws.tx.resize(blocks_.size());
    const Tensor* t_cur = &ws.tangent_in;
    ConvLayer nobias;  // same weights, zero bias
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        nobias = blocks_[i];
        std::fill(nobias.b.begin(), nobias.b.end(), 0.f);
        conv_forward(nobias, *t_cur, ws.tz[i], ws.scratch);
        auto& tx = ws.tx[i];
        if (!tx.same_shape(ws.tz[i])) tx.resize(ws.tz[i].h, ws.tz[i].w, ws.tz[i].c);
        for (std::size_t k = 0; k < tx.v.size(); ++k)
            tx.v[k] = swish_d1(ws.z[i].v[k]) * ws.tz[i].v[k];
        t_cur = &ws.tx[i];
    }

    // s = head_w . gap(tx_top); reverse pass over primal + tangent chains.
    const Tensor& t_top = *t_cur;
    const std::size_t pixels = std::size_t(t_top.h) * t_top.w;
    const std::size_t head_slot = 2 * blocks_.size();

    // d s / d head_w = gap(tx_top)
    {
        std::vector<double> tgap(std::size_t(t_top.c), 0.0);
        const float* p = t_top.v.data();
        for (std::size_t i = 0; i < pixels; ++i, p += t_top.c)
            for (int ch = 0; ch < t_top.c; ++ch) tgap[std::size_t(ch)] += p[ch];
        for (std::size_t ch = 0; ch < tgap.size(); ++ch)
            grads->g[head_slot][ch] += float(tgap[ch] / double(pixels));
        // head bias does not enter the directional derivative
    }

    Tensor g_t(t_top.h, t_top.w, t_top.c);  // gradient w.r.t. tangent stream tx_i
    const float gscale = 1.f / float(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
        for (int ch = 0; ch < t_top.c; ++ch)
            g_t.v[i * std::size_t(t_top.c) + ch] = gscale * head_w[std::size_t(ch)];

    Tensor g_x(t_top.h, t_top.w, t_top.c);  // gradient w.r.t. primal stream x_i
    g_x.zero();

    Tensor gz_t, gz_x;
    std::vector<float> bias_dump;  // the tangent conv has no bias term
    for (int i = int(blocks_.size()) - 1; i >= 0; --i) {
        const auto iu = std::size_t(i);
        const ConvLayer& conv = blocks_[iu];
        const Tensor& z = ws.z[iu];
        const Tensor& tz = ws.tz[iu];

        // tx_i = swish'(z_i) .* tz_i   (tangent node)
        // x_i  = swish(z_i)            (primal node)
        gz_t.resize(z.h, z.w, z.c);
        gz_x.resize(z.h, z.w, z.c);
        for (std::size_t k = 0; k < z.v.size(); ++k) {
            const float d1 = swish_d1(z.v[k]);
            gz_t.v[k] = d1 * g_t.v[k];
            gz_x.v[k] = swish_d2(z.v[k]) * tz.v[k] * g_t.v[k] + d1 * g_x.v[k];
        }

        const Tensor& x_in = i == 0 ? ws.input : ws.x[iu - 1];
        const Tensor& t_in = i == 0 ? ws.tangent_in : ws.tx[iu - 1];

        // tangent conv: tz_i = W_i * t_{i-1}
        bias_dump.assign(std::size_t(conv.out_ch), 0.f);
        conv_backward_params(conv, t_in, gz_t, grads->g[2 * iu], bias_dump, ws.scratch);
        // primal conv: z_i = W_i * x_{i-1} + b_i
        conv_backward_params(conv, x_in, gz_x, grads->g[2 * iu], grads->g[2 * iu + 1], ws.scratch);

        if (i > 0) {
            g_t.resize(t_in.h, t_in.w, t_in.c);
            conv_backward_input(conv, gz_t, g_t, ws.scratch);
            g_x.resize(x_in.h, x_in.w, x_in.c);
            conv_backward_input(conv, gz_x, g_x, ws.scratch);
        }
    }

    return penalty;
}

std::size_t Critic::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.data->size();
    return n;
}

template <typename Self, typename Ref>
std::vector<Ref> Critic::list_params(Self& self) {
    std::vector<Ref> out;
    for (std::size_t i = 0; i < self.blocks_.size(); ++i) {
        auto& l = self.blocks_[i];
        out.push_back({"block" + std::to_string(i + 1) + "/w",
                       {l.ksize, l.ksize, l.in_ch, l.out_ch}, &l.w});
        out.push_back({"block" + std::to_string(i + 1) + "/b", {l.out_ch}, &l.b});
    }
    out.push_back({"head/w", {std::int64_t(self.head_w.size())}, &self.head_w});
    out.push_back({"head/b", {1}, &self.head_b});
    return out;
}

ParamList Critic::params() { return list_params<Critic, ParamRef>(*this); }
ConstParamList Critic::params() const { return list_params<const Critic, ConstParamRef>(*this); }

}  // namespace ednig
