#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>

#include <nlohmann/json_fwd.hpp>

#include "ednig/adam.hpp"
#include "ednig/critic.hpp"
#include "ednig/dataset.hpp"
#include "ednig/generator.hpp"
#include "ednig/illumination.hpp"
#include "ednig/losses.hpp"
#include "ednig/vgg.hpp"

namespace ednig {

struct TrainingConfig {
    int batch_size = 1;
    double lr_initial = 1e-4;
    int total_epochs = 200;
    int n_critic = 5;
    AdamConfig adam;
    std::uint64_t seed = 0;
    int checkpoint_every = 10;
    int input_size = 512;
    IlluminationParams illum;
    LossWeights loss;
    GeneratorConfig generator;
    CriticConfig critic;
    // "", "random:<seed>", or a converted-archive directory.
    std::string vgg_weights;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

// Linear decay to zero: lr_initial * (1 - epoch / total_epochs).
double lr_schedule(int epoch, const TrainingConfig& cfg);

struct StepReport {
    double adv = 0.0, mse = 0.0, per = 0.0;
    double gen_total = 0.0;
    double cri = 0.0, gp = 0.0;
};

struct TrainStepSample {
    Tensor input4;   // signed range, RGB + illumination channel
    Tensor target3;  // signed range
};

struct EpochRow {
    int epoch = 0;
    double lr = 0.0, adv = 0.0, mse = 0.0, per = 0.0, cri = 0.0;
    std::optional<double> val_psnr, val_ssim;

    std::string csv_row() const;
    static const char* csv_header();
};

struct RunResult {
    std::filesystem::path final_checkpoint;
    std::filesystem::path best_checkpoint;
    std::vector<EpochRow> log;
};

class Trainer {
public:
    explicit Trainer(const TrainingConfig& cfg);

    // Rebuilds a trainer from the newest checkpoint under run_dir.
    static Trainer resume(const std::filesystem::path& run_dir);

    // n_critic critic updates (Wasserstein direction + gradient penalty)
    // followed by one generator update. Deterministic given the batch, lr,
    // and the epsilon stream. Throws NumericError (with the last finite
    // report) if any loss turns non-finite.
    StepReport train_step(std::span<const TrainStepSample> batch, double lr, Rng& eps_rng);

    // Full loop: per-(epoch,index) augmentation seeds, per-epoch CSV log,
    // periodic checkpoints + native-resolution validation.
    RunResult run(const std::vector<PairedPaths>& train_set,
                  const std::vector<PairedPaths>& val_set,
                  const std::filesystem::path& run_dir);

    TrainStepSample make_step_sample(const PairedSample& augmented_pair) const;

    void save_checkpoint(const std::filesystem::path& dir) const;

    Generator& generator() { return gen_; }
    const Generator& generator() const { return gen_; }
    Critic& critic() { return critic_; }
    const Critic& critic() const { return critic_; }
    int completed_epochs() const { return epoch_done_; }
    const std::vector<EpochRow>& log() const { return log_; }
    const TrainingConfig& config() const { return cfg_; }

    static std::filesystem::path newest_checkpoint(const std::filesystem::path& run_dir);

private:
    void load_checkpoint(const std::filesystem::path& dir);

    TrainingConfig cfg_;
    Generator gen_;
    Critic critic_;
    std::unique_ptr<FeatureExtractor> extractor_;
    Adam adam_gen_, adam_critic_;

    GeneratorWorkspace gen_ws_;
    CriticWorkspace critic_ws_;
    VggWorkspace vgg_ws_a_, vgg_ws_b_;
    GradBuffer gen_grads_, critic_grads_;

    int epoch_done_ = 0;
    std::vector<EpochRow> log_;
    StepReport last_finite_;
    double best_val_psnr_ = -1.0;
    int best_epoch_ = -1;
};

}  // namespace ednig
