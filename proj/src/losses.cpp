#include "ednig/losses.hpp"

namespace ednig {

double adversarial_loss(std::span<const double> critic_scores) {
    if (critic_scores.empty()) throw ContractError("adversarial_loss: empty batch");
    double sum = 0.0;
    for (double s : critic_scores) sum += -s;
    return sum / double(critic_scores.size());
}

double mse_loss(const Tensor& gen, const Tensor& gt) {
    if (!gen.same_shape(gt)) throw ContractError("mse_loss: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < gen.v.size(); ++i) {
        const double d = double(gen.v[i]) - double(gt.v[i]);
        sum += d * d;
    }
    return sum / double(gen.v.size());
}

void mse_loss_grad(const Tensor& gen, const Tensor& gt, Tensor& d_gen) {
    if (!gen.same_shape(gt)) throw ContractError("mse_loss_grad: shape mismatch");
    if (!d_gen.same_shape(gen)) d_gen.resize(gen.h, gen.w, gen.c);
    const float scale = 2.f / float(gen.v.size());
    for (std::size_t i = 0; i < gen.v.size(); ++i)
        d_gen.v[i] = scale * (gen.v[i] - gt.v[i]);
}

double perceptual_loss(const Tensor& gen, const Tensor& gt, const FeatureExtractor& extractor,
                       VggWorkspace& ws_gen, VggWorkspace& ws_gt, Tensor* d_gen) {
    if (!gen.same_shape(gt)) throw ContractError("perceptual_loss: shape mismatch");
    const Tensor& fg = extractor.features(gen, ws_gen);
    const Tensor& ft = extractor.features(gt, ws_gt);

    const std::size_t m = fg.v.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double d = double(fg.v[i]) - double(ft.v[i]);
        sum += d * d;
    }
    const double loss = sum / double(m);

    if (d_gen != nullptr) {
        Tensor d_feat(fg.h, fg.w, fg.c);
        const float scale = 2.f / float(m);
        for (std::size_t i = 0; i < m; ++i) d_feat.v[i] = scale * (fg.v[i] - ft.v[i]);
        *d_gen = extractor.input_gradient(d_feat, ws_gen);
    }
    return loss;
}

double generator_loss(double adv, double mse, double per, const LossWeights& w) {
    return w.lambda_adv * adv + w.lambda_mse * mse + w.lambda_per * per;
}

double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                   double gp_term, const LossWeights& w) {
    if (real_scores.size() != fake_scores.size() || real_scores.empty())
        throw ContractError("critic_loss: batch sizes differ or empty");
    double wasserstein = 0.0;
    for (std::size_t i = 0; i < real_scores.size(); ++i)
        wasserstein += fake_scores[i] - real_scores[i];
    wasserstein /= double(real_scores.size());
    return w.lambda_cri * wasserstein + w.gp_weight * gp_term;
}

double gradient_penalty(const Critic& critic, std::span<const Tensor> real_batch,
                        std::span<const Tensor> fake_batch, Rng& rng, CriticWorkspace& ws) {
    if (real_batch.size() != fake_batch.size() || real_batch.empty())
        throw ContractError("gradient_penalty: batch sizes differ or empty");
    double sum = 0.0;
    Tensor x_hat;
    for (std::size_t i = 0; i < real_batch.size(); ++i) {
        const Tensor& r = real_batch[i];
        const Tensor& f = fake_batch[i];
        if (!r.same_shape(f)) throw ContractError("gradient_penalty: shape mismatch in batch");
        const float eps = float(rng.uniform());
        x_hat.resize(r.h, r.w, r.c);
        for (std::size_t k = 0; k < r.v.size(); ++k)
            x_hat.v[k] = eps * r.v[k] + (1.f - eps) * f.v[k];
        sum += critic.gradient_penalty_at(x_hat, ws, nullptr, 0.0);
    }
    return sum / double(real_batch.size());
}

}  // namespace ednig
