#pragma once

#include <span>

#include "ednig/critic.hpp"
#include "ednig/tensor.hpp"
#include "ednig/vgg.hpp"

namespace ednig {

struct LossWeights {
    double lambda_adv = 100.0;
    double lambda_mse = 100.0;
    double lambda_per = 100.0;
    double lambda_cri = 1.0;
    double gp_weight = 10.0;
    bool use_gradient_penalty = true;

    void validate() const {
        if (lambda_adv < 0 || lambda_mse < 0 || lambda_per < 0 || lambda_cri < 0 || gp_weight < 0)
            throw ContractError("LossWeights: weights must be non-negative");
    }
};

// (1/B) * sum of -C(G(I)).
double adversarial_loss(std::span<const double> critic_scores);

// Mean squared difference over all elements (pixels x channels).
double mse_loss(const Tensor& gen, const Tensor& gt);
// d mse / d gen = 2 (gen - gt) / N.
void mse_loss_grad(const Tensor& gen, const Tensor& gt, Tensor& d_gen);

// Feature-space MSE on the extractor's output: (1/M) * sum (phi(gen) - phi(gt))^2.
// When d_gen is non-null it receives d loss / d gen.
double perceptual_loss(const Tensor& gen, const Tensor& gt, const FeatureExtractor& extractor,
                       VggWorkspace& ws_gen, VggWorkspace& ws_gt, Tensor* d_gen = nullptr);

// lambda1 * adv + lambda2 * mse + lambda3 * per.
double generator_loss(double adv, double mse, double per, const LossWeights& w);

// lambda4 * ((1/B) sum C(G(I)) - (1/B) sum C(Y)) + gp_weight * gp_term.
double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                   double gp_term, const LossWeights& w);

// Mean over the batch of (|grad_x C(x_hat)| - 1)^2 with x_hat the per-item
// random convex mix of real and fake.
double gradient_penalty(const Critic& critic, std::span<const Tensor> real_batch,
                        std::span<const Tensor> fake_batch, Rng& rng, CriticWorkspace& ws);

}  // namespace ednig
