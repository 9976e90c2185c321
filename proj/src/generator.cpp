#include "ednig/generator.hpp"

#include <cstring>

#include <nlohmann/json.hpp>

#include "ednig/error.hpp"

namespace ednig {

void GeneratorConfig::validate() const {
    if (base_channels < 1) throw ContractError("GeneratorConfig: base_channels must be positive");
    if (num_stages < 2) throw ContractError("GeneratorConfig: need at least 2 stages");
    if (convs_per_encoder_stage < 1 || convs_per_decoder_stage < 1)
        throw ContractError("GeneratorConfig: conv counts must be positive");
    if (input_channels < 1 || output_channels < 1)
        throw ContractError("GeneratorConfig: channel counts must be positive");
    int prev = 0;
    for (int k : spp_kernels) {
        if (k < 3 || k % 2 == 0)
            throw ContractError("GeneratorConfig: SPP kernels must be odd and >= 3");
        if (k <= prev) throw ContractError("GeneratorConfig: SPP kernels must be strictly increasing");
        prev = k;
    }
}

nlohmann::json GeneratorConfig::to_json() const {
    return {{"base_channels", base_channels},
            {"num_stages", num_stages},
            {"convs_per_encoder_stage", convs_per_encoder_stage},
            {"convs_per_decoder_stage", convs_per_decoder_stage},
            {"spp_kernels", spp_kernels},
            {"input_channels", input_channels},
            {"output_channels", output_channels}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.base_channels = j.value("base_channels", c.base_channels);
    c.num_stages = j.value("num_stages", c.num_stages);
    c.convs_per_encoder_stage = j.value("convs_per_encoder_stage", c.convs_per_encoder_stage);
    c.convs_per_decoder_stage = j.value("convs_per_decoder_stage", c.convs_per_decoder_stage);
    if (j.contains("spp_kernels")) {
        auto v = j.at("spp_kernels").get<std::vector<int>>();
        if (v.size() != 3) throw ContractError("GeneratorConfig: spp_kernels must have 3 entries");
        std::copy(v.begin(), v.end(), c.spp_kernels.begin());
    }
    c.input_channels = j.value("input_channels", c.input_channels);
    c.output_channels = j.value("output_channels", c.output_channels);
    c.validate();
    return c;
}

namespace {

std::vector<std::int64_t> conv_shape_w(const ConvLayer& l) {
    return {l.ksize, l.ksize, l.in_ch, l.out_ch};
}

}  // namespace

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), init_seed_(init_seed) {
    cfg_.validate();
    Rng rng(init_seed);

    enc_.resize(cfg_.num_stages);
    for (int s = 0; s < cfg_.num_stages; ++s) {
        const int width = cfg_.stage_width(s);
        const int in0 = s == 0 ? cfg_.input_channels : cfg_.stage_width(s - 1);
        for (int j = 0; j < cfg_.convs_per_encoder_stage; ++j) {
            enc_[s].emplace_back(j == 0 ? in0 : width, width, 3, 1);
            enc_[s].back().init_he_uniform(rng);
        }
    }

    const int bottleneck = cfg_.stage_width(cfg_.num_stages - 1);
    spp_fuse_ = ConvLayer(4 * bottleneck, bottleneck, 1, 1);
    spp_fuse_.init_he_uniform(rng);

    const int levels = cfg_.num_stages - 1;
    dec_.resize(levels);
    for (int l = 0; l < levels; ++l) {
        const int skip_stage = cfg_.num_stages - 2 - l;
        const int in_width = cfg_.stage_width(skip_stage + 1);
        const int width = cfg_.stage_width(skip_stage);
        dec_[l].up = ConvLayer(in_width, width, 3, 1);
        dec_[l].up.init_he_uniform(rng);
        for (int j = 0; j < cfg_.convs_per_decoder_stage; ++j) {
            dec_[l].convs.emplace_back(j == 0 ? 2 * width : width, width, 3, 1);
            dec_[l].convs.back().init_he_uniform(rng);
        }
    }

    head_ = ConvLayer(cfg_.base_channels, cfg_.output_channels, 1, 1);
    head_.init_he_uniform(rng);
}

const Tensor& Generator::forward(const Tensor& x, GeneratorWorkspace& ws) const {
    if (x.c != cfg_.input_channels)
        throw ContractError("generator forward: expected " + std::to_string(cfg_.input_channels) +
                            " channels, got " + std::to_string(x.c));
    const int f = cfg_.downsample_factor();
    if (x.h % f != 0 || x.w % f != 0)
        throw ContractError("generator forward: dims " + std::to_string(x.w) + "x" +
                            std::to_string(x.h) + " not divisible by " + std::to_string(f) +
                            "; pad with pad_to_multiple first");

    ws.input = x;
    ws.enc.resize(enc_.size());
    const Tensor* cur = &ws.input;

    for (std::size_t s = 0; s < enc_.size(); ++s) {
        auto& stage = ws.enc[s];
        stage.z.resize(enc_[s].size());
        stage.y.resize(enc_[s].size());
        for (std::size_t j = 0; j < enc_[s].size(); ++j) {
            conv_forward(enc_[s][j], *cur, stage.z[j], ws.scratch);
            swish_forward(stage.z[j], stage.y[j]);
            cur = &stage.y[j];
        }
        if (s + 1 < enc_.size()) {
            maxpool2x2_forward(*cur, stage.pooled, stage.pool_idx);
            cur = &stage.pooled;
        }
    }

    // SPP bottleneck: three stride-1 max pools concatenated with the input,
    // fused back to the bottleneck width by a 1x1 conv + Swish.
    {
        const Tensor& feat = ws.enc.back().y.back();
        for (int i = 0; i < 3; ++i)
            maxpool_same_forward(feat, cfg_.spp_kernels[std::size_t(i)], ws.spp_branch[std::size_t(i)],
                                 ws.spp_idx[std::size_t(i)]);
        if (ws.spp_concat.h != feat.h || ws.spp_concat.w != feat.w || ws.spp_concat.c != 4 * feat.c)
            ws.spp_concat.resize(feat.h, feat.w, 4 * feat.c);
        const std::size_t pixels = std::size_t(feat.h) * feat.w;
        for (std::size_t i = 0; i < pixels; ++i) {
            float* out = &ws.spp_concat.v[i * std::size_t(ws.spp_concat.c)];
            std::memcpy(out, &feat.v[i * std::size_t(feat.c)], sizeof(float) * feat.c);
            for (int br = 0; br < 3; ++br)
                std::memcpy(out + (br + 1) * feat.c, &ws.spp_branch[std::size_t(br)].v[i * std::size_t(feat.c)],
                            sizeof(float) * feat.c);
        }
        conv_forward(spp_fuse_, ws.spp_concat, ws.spp_z, ws.scratch);
        swish_forward(ws.spp_z, ws.spp_y);
        cur = &ws.spp_y;
    }

    ws.dec.resize(dec_.size());
    for (std::size_t l = 0; l < dec_.size(); ++l) {
        auto& lvl = ws.dec[l];
        upsample_nearest_x2_forward(*cur, lvl.upsampled);
        conv_forward(dec_[l].up, lvl.upsampled, lvl.up_z, ws.scratch);
        swish_forward(lvl.up_z, lvl.up_y);

        const int skip_stage = cfg_.num_stages - 2 - int(l);
        concat_channels(lvl.up_y, ws.enc[std::size_t(skip_stage)].y.back(), lvl.cat);

        lvl.z.resize(dec_[l].convs.size());
        lvl.y.resize(dec_[l].convs.size());
        cur = &lvl.cat;
        for (std::size_t j = 0; j < dec_[l].convs.size(); ++j) {
            conv_forward(dec_[l].convs[j], *cur, lvl.z[j], ws.scratch);
            swish_forward(lvl.z[j], lvl.y[j]);
            cur = &lvl.y[j];
        }
    }

    conv_forward(head_, *cur, ws.head_z, ws.scratch);
    tanh_forward(ws.head_z, ws.head_y);
    return ws.head_y;
}

void Generator::backward(const Tensor& d_out, GeneratorWorkspace& ws, GradBuffer& grads) const {
    // Gradient index bookkeeping mirrors list_params() order exactly:
    // enc stages, spp fuse, decoder levels, head; each conv contributes w then b.
    std::size_t gi = 0;
    auto grad_w = [&](std::size_t base) -> std::vector<float>& { return grads.g[base]; };
    auto grad_b = [&](std::size_t base) -> std::vector<float>& { return grads.g[base + 1]; };

    // Precompute parameter slot of each layer in canonical order.
    std::vector<std::vector<std::size_t>> enc_slot(enc_.size());
    for (std::size_t s = 0; s < enc_.size(); ++s)
        for (std::size_t j = 0; j < enc_[s].size(); ++j) {
            enc_slot[s].push_back(gi);
            gi += 2;
        }
    const std::size_t spp_slot = gi;
    gi += 2;
    std::vector<std::size_t> dec_up_slot(dec_.size());
    std::vector<std::vector<std::size_t>> dec_conv_slot(dec_.size());
    for (std::size_t l = 0; l < dec_.size(); ++l) {
        dec_up_slot[l] = gi;
        gi += 2;
        for (std::size_t j = 0; j < dec_[l].convs.size(); ++j) {
            dec_conv_slot[l].push_back(gi);
            gi += 2;
        }
    }
    const std::size_t head_slot = gi;

    Tensor cur, tmp;

    // Head: Tanh then 1x1 conv.
    tanh_backward(ws.head_y, d_out, tmp);
    conv_backward_params(head_, ws.dec.back().y.back(), tmp, grad_w(head_slot), grad_b(head_slot),
                         ws.scratch);
    cur.resize(ws.head_z.h, ws.head_z.w, head_.in_ch);
    conv_backward_input(head_, tmp, cur, ws.scratch);

    // Skip gradients collected per encoder stage while walking the decoder.
    std::vector<Tensor> d_skip(enc_.size());

    for (int l = int(dec_.size()) - 1; l >= 0; --l) {
        auto& lvl = ws.dec[std::size_t(l)];
        const int skip_stage = cfg_.num_stages - 2 - l;

        for (int j = int(dec_[std::size_t(l)].convs.size()) - 1; j >= 0; --j) {
            const ConvLayer& conv = dec_[std::size_t(l)].convs[std::size_t(j)];
            swish_backward(lvl.z[std::size_t(j)], cur, tmp);
            const Tensor& conv_in = j == 0 ? lvl.cat : lvl.y[std::size_t(j - 1)];
            conv_backward_params(conv, conv_in, tmp, grad_w(dec_conv_slot[std::size_t(l)][std::size_t(j)]),
                                 grad_b(dec_conv_slot[std::size_t(l)][std::size_t(j)]), ws.scratch);
            cur.resize(conv_in.h, conv_in.w, conv_in.c);
            conv_backward_input(conv, tmp, cur, ws.scratch);
        }

        // cur now holds d(cat); split into up branch and skip branch.
        Tensor d_up_y(lvl.up_y.h, lvl.up_y.w, lvl.up_y.c);
        auto& skip_grad = d_skip[std::size_t(skip_stage)];
        skip_grad.resize(lvl.up_y.h, lvl.up_y.w, lvl.cat.c - lvl.up_y.c);
        split_channels(cur, d_up_y, skip_grad);

        swish_backward(lvl.up_z, d_up_y, tmp);
        conv_backward_params(dec_[std::size_t(l)].up, lvl.upsampled, tmp,
                             grad_w(dec_up_slot[std::size_t(l)]), grad_b(dec_up_slot[std::size_t(l)]),
                             ws.scratch);
        Tensor d_upsampled(lvl.upsampled.h, lvl.upsampled.w, lvl.upsampled.c);
        conv_backward_input(dec_[std::size_t(l)].up, tmp, d_upsampled, ws.scratch);

        cur.resize(lvl.upsampled.h / 2, lvl.upsampled.w / 2, lvl.upsampled.c);
        upsample_nearest_x2_backward(d_upsampled, cur);
    }

    // SPP backward: 1x1 fuse then the three pool branches plus the identity.
    {
        const Tensor& feat = ws.enc.back().y.back();
        swish_backward(ws.spp_z, cur, tmp);
        conv_backward_params(spp_fuse_, ws.spp_concat, tmp, grad_w(spp_slot), grad_b(spp_slot),
                             ws.scratch);
        Tensor d_concat(ws.spp_concat.h, ws.spp_concat.w, ws.spp_concat.c);
        conv_backward_input(spp_fuse_, tmp, d_concat, ws.scratch);

        cur.resize(feat.h, feat.w, feat.c);
        cur.zero();
        const std::size_t pixels = std::size_t(feat.h) * feat.w;
        Tensor d_branch(feat.h, feat.w, feat.c);
        // identity slice
        for (std::size_t i = 0; i < pixels; ++i)
            for (int ch = 0; ch < feat.c; ++ch)
                cur.v[i * std::size_t(feat.c) + ch] = d_concat.v[i * std::size_t(d_concat.c) + ch];
        for (int br = 0; br < 3; ++br) {
            for (std::size_t i = 0; i < pixels; ++i)
                std::memcpy(&d_branch.v[i * std::size_t(feat.c)],
                            &d_concat.v[i * std::size_t(d_concat.c) + std::size_t(br + 1) * feat.c],
                            sizeof(float) * feat.c);
            maxpool_same_backward(d_branch, ws.spp_idx[std::size_t(br)], cur);
        }
    }

    // Encoder backward, deepest stage first.
    for (int s = int(enc_.size()) - 1; s >= 0; --s) {
        auto& stage = ws.enc[std::size_t(s)];
        if (d_skip[std::size_t(s)].size() > 0)
            for (std::size_t i = 0; i < cur.v.size(); ++i) cur.v[i] += d_skip[std::size_t(s)].v[i];

        for (int j = int(enc_[std::size_t(s)].size()) - 1; j >= 0; --j) {
            const ConvLayer& conv = enc_[std::size_t(s)][std::size_t(j)];
            swish_backward(stage.z[std::size_t(j)], cur, tmp);
            const Tensor& conv_in = j > 0        ? stage.y[std::size_t(j - 1)]
                                    : s == 0     ? ws.input
                                                 : ws.enc[std::size_t(s - 1)].pooled;
            conv_backward_params(conv, conv_in, tmp,
                                 grad_w(enc_slot[std::size_t(s)][std::size_t(j)]),
                                 grad_b(enc_slot[std::size_t(s)][std::size_t(j)]), ws.scratch);
            if (s == 0 && j == 0) break;  // input gradient not needed
            cur.resize(conv_in.h, conv_in.w, conv_in.c);
            conv_backward_input(conv, tmp, cur, ws.scratch);
        }

        if (s > 0) {
            // cur = d(pooled of stage s-1); route through the max pool.
            auto& below = ws.enc[std::size_t(s - 1)];
            tmp.resize(below.y.back().h, below.y.back().w, below.y.back().c);
            tmp.zero();
            maxpool2x2_backward(cur, below.pool_idx, tmp);
            std::swap(cur, tmp);
        }
    }
}

std::size_t Generator::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.data->size();
    return n;
}

template <typename Self, typename Ref>
std::vector<Ref> Generator::list_params(Self& self) {
    std::vector<Ref> out;
    auto push = [&](const std::string& name, auto& layer) {
        out.push_back({name + "/w", conv_shape_w(layer), &layer.w});
        out.push_back({name + "/b", {layer.out_ch}, &layer.b});
    };
    for (std::size_t s = 0; s < self.enc_.size(); ++s)
        for (std::size_t j = 0; j < self.enc_[s].size(); ++j)
            push("enc" + std::to_string(s + 1) + "/conv" + std::to_string(j + 1), self.enc_[s][j]);
    push("spp/fuse", self.spp_fuse_);
    for (std::size_t l = 0; l < self.dec_.size(); ++l) {
        push("dec" + std::to_string(l + 1) + "/up", self.dec_[l].up);
        for (std::size_t j = 0; j < self.dec_[l].convs.size(); ++j)
            push("dec" + std::to_string(l + 1) + "/conv" + std::to_string(j + 1),
                 self.dec_[l].convs[j]);
    }
    push("head/conv", self.head_);
    return out;
}

ParamList Generator::params() { return list_params<Generator, ParamRef>(*this); }

ConstParamList Generator::params() const {
    return list_params<const Generator, ConstParamRef>(*this);
}

std::size_t generator_parameter_count(const GeneratorConfig& cfg) {
    Generator g(cfg, 0);
    return g.parameter_count();
}

}  // namespace ednig
