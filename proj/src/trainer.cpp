#include "ednig/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ednig/checkpoint.hpp"
#include "ednig/metrics.hpp"
#include "ednig/pipeline.hpp"

namespace ednig {

namespace {

constexpr int kCheckpointFormat = 1;

std::unique_ptr<FeatureExtractor> build_extractor(const TrainingConfig& cfg) {
    if (cfg.loss.lambda_per <= 0.0) return nullptr;
    if (cfg.vgg_weights.empty())
        throw ContractError(
            "trainer: lambda_per > 0 needs feature weights; set vgg_weights to a converted "
            "VGG16 archive (tools/import_vgg16.py), to \"random:<seed>\" for the test "
            "extractor, or set lambda_per to 0");
    if (cfg.vgg_weights.rfind("random:", 0) == 0) {
        const std::uint64_t seed = std::stoull(cfg.vgg_weights.substr(7));
        return std::make_unique<FeatureExtractor>(FeatureExtractor::random_for_tests(seed));
    }
    return std::make_unique<FeatureExtractor>(FeatureExtractor::load(cfg.vgg_weights));
}

void axpy(Tensor& y, const Tensor& x, double a) {
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += float(a * double(x.v[i]));
}

std::string epoch_dir_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%04d", epoch);
    return buf;
}

}  // namespace

void TrainingConfig::validate() const {
    if (batch_size < 1) throw ContractError("TrainingConfig: batch_size must be >= 1");
    if (total_epochs < 1) throw ContractError("TrainingConfig: total_epochs must be >= 1");
    if (n_critic < 1) throw ContractError("TrainingConfig: n_critic must be >= 1");
    if (!(lr_initial > 0)) throw ContractError("TrainingConfig: lr_initial must be > 0");
    if (checkpoint_every < 1) throw ContractError("TrainingConfig: checkpoint_every must be >= 1");
    if (input_size < 16 || input_size % 16 != 0)
        throw ContractError("TrainingConfig: input_size must be a positive multiple of 16");
    if ((loss.lambda_adv > 0 || loss.lambda_cri > 0) && input_size % critic.downsample_factor() != 0)
        throw ContractError("TrainingConfig: adversarial training needs input_size divisible by " +
                            std::to_string(critic.downsample_factor()));
    illum.validate();
    loss.validate();
    generator.validate();
    critic.validate();
}

nlohmann::json TrainingConfig::to_json() const {
    return {{"batch_size", batch_size},
            {"lr_initial", lr_initial},
            {"total_epochs", total_epochs},
            {"n_critic", n_critic},
            {"adam", adam.to_json()},
            {"seed", seed},
            {"checkpoint_every", checkpoint_every},
            {"input_size", input_size},
            {"illumination",
             {{"patch_size", illum.patch_size},
              {"gf_radius", illum.gf_radius},
              {"gf_epsilon", illum.gf_epsilon}}},
            {"loss",
             {{"lambda_adv", loss.lambda_adv},
              {"lambda_mse", loss.lambda_mse},
              {"lambda_per", loss.lambda_per},
              {"lambda_cri", loss.lambda_cri},
              {"gp_weight", loss.gp_weight},
              {"use_gradient_penalty", loss.use_gradient_penalty}}},
            {"generator", generator.to_json()},
            {"critic", critic.to_json()},
            {"vgg_weights", vgg_weights}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.total_epochs = j.value("total_epochs", c.total_epochs);
    c.n_critic = j.value("n_critic", c.n_critic);
    if (j.contains("adam")) c.adam = AdamConfig::from_json(j.at("adam"));
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.input_size = j.value("input_size", c.input_size);
    if (j.contains("illumination")) {
        const auto& i = j.at("illumination");
        c.illum.patch_size = i.value("patch_size", c.illum.patch_size);
        c.illum.gf_radius = i.value("gf_radius", c.illum.gf_radius);
        c.illum.gf_epsilon = i.value("gf_epsilon", c.illum.gf_epsilon);
    }
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        c.loss.lambda_adv = l.value("lambda_adv", c.loss.lambda_adv);
        c.loss.lambda_mse = l.value("lambda_mse", c.loss.lambda_mse);
        c.loss.lambda_per = l.value("lambda_per", c.loss.lambda_per);
        c.loss.lambda_cri = l.value("lambda_cri", c.loss.lambda_cri);
        c.loss.gp_weight = l.value("gp_weight", c.loss.gp_weight);
        c.loss.use_gradient_penalty =
            l.value("use_gradient_penalty", c.loss.use_gradient_penalty);
    }
    if (j.contains("generator")) c.generator = GeneratorConfig::from_json(j.at("generator"));
    if (j.contains("critic")) c.critic = CriticConfig::from_json(j.at("critic"));
    c.vgg_weights = j.value("vgg_weights", c.vgg_weights);
    c.validate();
    return c;
}

double lr_schedule(int epoch, const TrainingConfig& cfg) {
    if (epoch < 0 || epoch > cfg.total_epochs)
        throw ContractError("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(cfg.total_epochs) + "]");
    return cfg.lr_initial * (1.0 - double(epoch) / double(cfg.total_epochs));
}

std::string EpochRow::csv_row() const {
    std::ostringstream os;
    os.precision(9);
    os << epoch << ',' << lr << ',' << adv << ',' << mse << ',' << per << ',' << cri << ',';
    if (val_psnr) os << format_metric(*val_psnr);
    os << ',';
    if (val_ssim) os << format_metric(*val_ssim);
    return os.str();
}

const char* EpochRow::csv_header() {
    return "epoch,lr,loss_adv,loss_mse,loss_per,loss_cri,val_psnr,val_ssim";
}

Trainer::Trainer(const TrainingConfig& cfg)
    : cfg_([&] {
          cfg.validate();
          return cfg;
      }()),
      gen_(cfg_.generator, Rng::derive(cfg_.seed, 1, 0)),
      critic_(cfg_.critic, Rng::derive(cfg_.seed, 2, 0)),
      extractor_(build_extractor(cfg_)),
      adam_gen_(gen_.params(), cfg_.adam),
      adam_critic_(critic_.params(), cfg_.adam),
      gen_grads_(GradBuffer::like(gen_.params())),
      critic_grads_(GradBuffer::like(critic_.params())) {}

TrainStepSample Trainer::make_step_sample(const PairedSample& augmented_pair) const {
    TrainStepSample s;
    s.input4 = assemble_input(augmented_pair.low, cfg_.illum);
    s.target3 = image_to_tensor(normalize(augmented_pair.target));
    return s;
}

StepReport Trainer::train_step(std::span<const TrainStepSample> batch, double lr, Rng& eps_rng) {
    if (batch.empty()) throw ContractError("train_step: empty batch");
    const auto& w = cfg_.loss;
    const double b = double(batch.size());
    StepReport report;

    // Fakes for the critic phase; the generator is frozen during it, so one
    // forward per sample is enough for all n_critic iterations.
    std::vector<Tensor> fakes(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) fakes[i] = gen_.forward(batch[i].input4, gen_ws_);

    auto check_finite = [&](double v, const char* what) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "train_step: non-finite " << what << "; last finite losses: adv=" << last_finite_.adv
               << " mse=" << last_finite_.mse << " per=" << last_finite_.per
               << " cri=" << last_finite_.cri;
            throw NumericError(os.str());
        }
    };

    if (w.lambda_cri > 0.0) {
        std::vector<double> real_scores(batch.size()), fake_scores(batch.size());
        for (int iter = 0; iter < cfg_.n_critic; ++iter) {
            critic_grads_.zero();
            double gp_term = 0.0;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                fake_scores[i] = critic_.score(fakes[i], critic_ws_);
                critic_.backward_params(w.lambda_cri / b, critic_ws_, critic_grads_);
                real_scores[i] = critic_.score(batch[i].target3, critic_ws_);
                critic_.backward_params(-w.lambda_cri / b, critic_ws_, critic_grads_);

                if (w.use_gradient_penalty && w.gp_weight > 0.0) {
                    const float eps = float(eps_rng.uniform());
                    Tensor x_hat(fakes[i].h, fakes[i].w, fakes[i].c);
                    for (std::size_t k = 0; k < x_hat.v.size(); ++k)
                        x_hat.v[k] = eps * batch[i].target3.v[k] + (1.f - eps) * fakes[i].v[k];
                    gp_term += critic_.gradient_penalty_at(x_hat, critic_ws_, &critic_grads_,
                                                           w.gp_weight / b) /
                               b;
                }
            }
            report.gp = gp_term;
            report.cri = critic_loss(real_scores, fake_scores, gp_term, w);
            check_finite(report.cri, "critic loss");
            adam_critic_.step(critic_.params(), critic_grads_, lr);
        }
    }

    // Generator update.
    gen_grads_.zero();
    double adv_sum = 0.0, mse_sum = 0.0, per_sum = 0.0;
    Tensor d_fake, grad_buf;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Tensor& fake = gen_.forward(batch[i].input4, gen_ws_);
        d_fake.resize(fake.h, fake.w, fake.c);
        d_fake.zero();

        if (w.lambda_adv > 0.0) {
            const double s = critic_.score(fake, critic_ws_);
            adv_sum += -s;
            Tensor gin = critic_.input_gradient(critic_ws_);
            axpy(d_fake, gin, -w.lambda_adv / b);
        }

        mse_sum += mse_loss(fake, batch[i].target3);
        if (w.lambda_mse > 0.0) {
            mse_loss_grad(fake, batch[i].target3, grad_buf);
            axpy(d_fake, grad_buf, w.lambda_mse / b);
        }

        if (w.lambda_per > 0.0) {
            if (!extractor_) throw ContractError("train_step: perceptual loss enabled without weights");
            Tensor d_per;
            per_sum += perceptual_loss(fake, batch[i].target3, *extractor_, vgg_ws_a_, vgg_ws_b_,
                                       &d_per);
            axpy(d_fake, d_per, w.lambda_per / b);
        }

        gen_.backward(d_fake, gen_ws_, gen_grads_);
    }

    report.adv = adv_sum / b;
    report.mse = mse_sum / b;
    report.per = per_sum / b;
    report.gen_total = generator_loss(report.adv, report.mse, report.per, w);
    check_finite(report.gen_total, "generator loss");
    adam_gen_.step(gen_.params(), gen_grads_, lr);

    last_finite_ = report;
    return report;
}

RunResult Trainer::run(const std::vector<PairedPaths>& train_set,
                       const std::vector<PairedPaths>& val_set,
                       const std::filesystem::path& run_dir) {
    if (train_set.empty()) throw ContractError("train: empty training set");
    std::filesystem::create_directories(run_dir / "checkpoints");

    {
        std::ofstream cf(run_dir / "config.json", std::ios::trunc);
        cf << cfg_.to_json().dump(2) << "\n";
    }

    const auto log_path = run_dir / "training_log.csv";
    std::ofstream log_file;
    if (epoch_done_ == 0 || !std::filesystem::exists(log_path)) {
        log_file.open(log_path, std::ios::trunc);
        log_file << EpochRow::csv_header() << "\n";
        for (const auto& row : log_)  // replay history on resume into a fresh file
            log_file << row.csv_row() << "\n";
    } else {
        log_file.open(log_path, std::ios::app);
    }

    RunResult result;
    AugmentationParams aug;
    aug.out_height = cfg_.input_size;
    aug.out_width = cfg_.input_size;

    for (int epoch = epoch_done_ + 1; epoch <= cfg_.total_epochs; ++epoch) {
        const double lr = lr_schedule(epoch - 1, cfg_);
        Rng eps_rng(Rng::derive(cfg_.seed, 3, std::uint64_t(epoch)));

        double adv = 0, mse = 0, per = 0, cri = 0;
        std::size_t steps = 0;
        std::vector<TrainStepSample> batch;
        for (std::size_t idx = 0; idx < train_set.size(); idx += std::size_t(cfg_.batch_size)) {
            batch.clear();
            for (std::size_t k = idx;
                 k < std::min(train_set.size(), idx + std::size_t(cfg_.batch_size)); ++k) {
                PairedSample pair = load_pair(train_set[k]);
                aug.seed = Rng::derive(Rng::derive(cfg_.seed, 4, std::uint64_t(epoch)), 0, k);
                batch.push_back(make_step_sample(augment(pair, aug)));
            }
            const StepReport r = train_step(batch, lr, eps_rng);
            adv += r.adv;
            mse += r.mse;
            per += r.per;
            cri += r.cri;
            ++steps;
        }

        EpochRow row;
        row.epoch = epoch;
        row.lr = lr;
        row.adv = adv / double(steps);
        row.mse = mse / double(steps);
        row.per = per / double(steps);
        row.cri = cri / double(steps);

        const bool checkpoint_now = epoch % cfg_.checkpoint_every == 0 || epoch == cfg_.total_epochs;
        if (checkpoint_now && !val_set.empty()) {
            double vp = 0, vs = 0;
            for (const auto& paths : val_set) {
                const PairedSample pair = load_pair(paths);
                const Image enhanced = enhance_image(gen_, pair.low, cfg_.illum, gen_ws_);
                vp += psnr(enhanced, pair.target);
                vs += ssim(enhanced, pair.target);
            }
            row.val_psnr = vp / double(val_set.size());
            row.val_ssim = vs / double(val_set.size());
        }

        log_.push_back(row);
        epoch_done_ = epoch;
        log_file << row.csv_row() << "\n";
        log_file.flush();
        std::cerr << "epoch " << epoch << "/" << cfg_.total_epochs << " lr=" << lr
                  << " adv=" << row.adv << " mse=" << row.mse << " cri=" << row.cri;
        if (row.val_psnr) std::cerr << " val_psnr=" << *row.val_psnr;
        std::cerr << "\n";

        if (checkpoint_now) {
            if (row.val_psnr && *row.val_psnr > best_val_psnr_) {
                best_val_psnr_ = *row.val_psnr;
                best_epoch_ = epoch;
            }
            const auto dir = run_dir / "checkpoints" / epoch_dir_name(epoch);
            save_checkpoint(dir);
            result.final_checkpoint = dir;
        }
    }

    if (best_epoch_ > 0)
        result.best_checkpoint = run_dir / "checkpoints" / epoch_dir_name(best_epoch_);
    result.log = log_;
    return result;
}

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
    const auto tmp = dir.string() + ".tmp";
    std::filesystem::remove_all(tmp);
    std::filesystem::create_directories(tmp);

    nlohmann::json gmeta{{"kind", "generator"},
                         {"config", cfg_.generator.to_json()},
                         {"init_seed", gen_.init_seed()},
                         {"epoch", epoch_done_}};
    save_params(std::filesystem::path(tmp) / "generator", gen_.params(), gmeta);

    nlohmann::json cmeta{{"kind", "critic"},
                         {"config", cfg_.critic.to_json()},
                         {"init_seed", critic_.init_seed()},
                         {"epoch", epoch_done_}};
    save_params(std::filesystem::path(tmp) / "critic", critic_.params(), cmeta);

    {
        TensorArchive opt;
        adam_gen_.save_state(opt, "gen");
        adam_critic_.save_state(opt, "critic");
        opt.meta()["kind"] = "optimizer";
        opt.save(std::filesystem::path(tmp) / "optimizer");
    }

    nlohmann::json manifest;
    manifest["format_version"] = kCheckpointFormat;
    manifest["epoch"] = epoch_done_;
    manifest["config"] = cfg_.to_json();
    manifest["best_val_psnr"] = best_val_psnr_;
    manifest["best_epoch"] = best_epoch_;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : log_) rows.push_back(row.csv_row());
    manifest["log_rows"] = rows;
    {
        std::ofstream f(std::filesystem::path(tmp) / "checkpoint.json", std::ios::trunc);
        f << manifest.dump(2) << "\n";
    }

    replace_dir(tmp, dir);
}

void Trainer::load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream f(dir / "checkpoint.json");
    if (!f) throw ArchiveError("checkpoint: cannot open " + (dir / "checkpoint.json").string());
    nlohmann::json manifest;
    f >> manifest;
    const int version = manifest.value("format_version", -1);
    if (version != kCheckpointFormat)
        throw ArchiveError("checkpoint: incompatible format_version " + std::to_string(version));

    load_params(dir / "generator", gen_.params());
    load_params(dir / "critic", critic_.params());
    TensorArchive opt = TensorArchive::load(dir / "optimizer");
    adam_gen_.load_state(opt, "gen");
    adam_critic_.load_state(opt, "critic");

    epoch_done_ = manifest.at("epoch").get<int>();
    best_val_psnr_ = manifest.value("best_val_psnr", -1.0);
    best_epoch_ = manifest.value("best_epoch", -1);

    log_.clear();
    for (const auto& row_str : manifest.value("log_rows", nlohmann::json::array())) {
        // rows are replayed verbatim into the CSV on resume
        EpochRow row;
        std::istringstream is(row_str.get<std::string>());
        std::string field;
        std::getline(is, field, ',');
        row.epoch = std::stoi(field);
        std::getline(is, field, ',');
        row.lr = std::stod(field);
        std::getline(is, field, ',');
        row.adv = std::stod(field);
        std::getline(is, field, ',');
        row.mse = std::stod(field);
        std::getline(is, field, ',');
        row.per = std::stod(field);
        std::getline(is, field, ',');
        row.cri = std::stod(field);
        if (std::getline(is, field, ',') && !field.empty())
            row.val_psnr = field == "inf" ? std::numeric_limits<double>::infinity()
                                          : std::stod(field);
        if (std::getline(is, field, ',') && !field.empty())
            row.val_ssim = std::stod(field);
        log_.push_back(row);
    }
}

std::filesystem::path Trainer::newest_checkpoint(const std::filesystem::path& run_dir) {
    const auto dir = run_dir / "checkpoints";
    if (!std::filesystem::is_directory(dir))
        throw ArchiveError("no checkpoints directory under " + run_dir.string());
    std::filesystem::path newest;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_directory()) continue;
        const auto name = e.path().filename().string();
        if (name.rfind("epoch_", 0) != 0) continue;
        if (newest.empty() || name > newest.filename().string()) newest = e.path();
    }
    if (newest.empty()) throw ArchiveError("no checkpoints found under " + dir.string());
    return newest;
}

Trainer Trainer::resume(const std::filesystem::path& run_dir) {
    const auto ckpt = newest_checkpoint(run_dir);
    std::ifstream f(ckpt / "checkpoint.json");
    if (!f) throw ArchiveError("checkpoint: cannot open " + (ckpt / "checkpoint.json").string());
    nlohmann::json manifest;
    f >> manifest;
    Trainer t(TrainingConfig::from_json(manifest.at("config")));
    t.load_checkpoint(ckpt);
    return t;
}

}  // namespace ednig
