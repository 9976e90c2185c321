// ednig — illumination-guided low-light enhancement toolkit.
//
// Subcommands: illum, train, enhance, eval, bench.
// Exit codes: 0 success, 1 partial failure, 2 usage/config error.

#include <CLI11.hpp>

#include <chrono>
#include <thread>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ednig/checkpoint.hpp"
#include "ednig/metrics.hpp"
#include "ednig/nr_iqa.hpp"
#include "ednig/pipeline.hpp"
#include "ednig/trainer.hpp"

using namespace ednig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

std::filesystem::path default_model_dir() {
    if (const char* env = std::getenv("EDNIG_MODEL_DIR")) return env;
    return "data";
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir))
        throw ContractError("not a directory: " + dir.string());
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".PNG")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string hardware_string() {
    std::string name = "unknown";
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line))
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos) name = line.substr(pos + 2);
            break;
        }
    std::ostringstream os;
    os << name << " (" << std::thread::hardware_concurrency() << " threads)";
    return os.str();
}

// ---------------------------------------------------------------- illum ---

int cmd_illum(const std::string& input, const std::string& output, IlluminationParams params) {
    Image img;
    try {
        img = read_png(input);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (img.channels != 3) {
        std::cerr << "error: illumination extraction expects an RGB image\n";
        return kExitUsage;
    }
    const IlluminationMap m = illumination_map(byte_to_unit(img), params);

    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (float v : m.map.data) {
        lo = std::min(lo, double(v));
        hi = std::max(hi, double(v));
        mean += v;
    }
    mean /= double(m.map.data.size());

    write_png(output, unit_to_byte(m.map));
    std::cout << "illumination map " << output << "  min=" << lo << " max=" << hi
              << " mean=" << mean << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train ---

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "batch_size", "lr_initial",   "total_epochs",     "n_critic",
        "adam",       "seed",         "checkpoint_every", "input_size",
        "illumination", "loss",       "generator",        "critic",
        "vgg_weights", "dataset_root", "run_dir"};
    return keys;
}

int cmd_train(const nlohmann::json& j, const std::string& dataset_flag,
              const std::string& out_flag, bool resume, const std::vector<std::string>& echoes) {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : j.items())
        if (!known_config_keys().count(key)) unknown.push_back(key);
    if (!unknown.empty()) {
        std::cerr << "error: unknown config keys:";
        for (const auto& k : unknown) std::cerr << " " << k;
        std::cerr << "\n";
        return kExitUsage;
    }

    std::string dataset_root = j.value("dataset_root", std::string{});
    std::string run_dir = j.value("run_dir", std::string{"runs/ednig"});
    if (!dataset_flag.empty()) dataset_root = dataset_flag;
    if (!out_flag.empty()) run_dir = out_flag;
    for (const auto& e : echoes) std::cerr << "override: " << e << "\n";

    if (dataset_root.empty()) {
        std::cerr << "error: no dataset_root given (config key or --dataset)\n";
        return kExitUsage;
    }

    std::vector<PairedPaths> train_set, val_set;
    try {
        train_set = scan_lol_dataset(dataset_root, Split::Train);
        val_set = scan_lol_dataset(dataset_root, Split::Val);
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what()
                  << "\nexpected layout: <root>/our485/{low,high} and <root>/eval15/{low,high} "
                     "with matching filenames\n";
        return kExitUsage;
    }

    try {
        if (resume) {
            Trainer trainer = Trainer::resume(run_dir);
            std::cerr << "resuming from epoch " << trainer.completed_epochs() << "\n";
            const RunResult r = trainer.run(train_set, val_set, run_dir);
            std::cout << "final checkpoint: " << r.final_checkpoint.string() << "\n";
            if (!r.best_checkpoint.empty())
                std::cout << "best checkpoint:  " << r.best_checkpoint.string() << "\n";
            return kExitOk;
        }
        Trainer trainer{TrainingConfig::from_json(j)};
        const RunResult r = trainer.run(train_set, val_set, run_dir);
        std::cout << "final checkpoint: " << r.final_checkpoint.string() << "\n";
        if (!r.best_checkpoint.empty())
            std::cout << "best checkpoint:  " << r.best_checkpoint.string() << "\n";
        return kExitOk;
    } catch (const ContractError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
}

// -------------------------------------------------------------- enhance ---

int cmd_enhance(const std::string& weights, const std::string& input_dir,
                const std::string& output_dir, const IlluminationParams& params) {
    Generator gen = load_generator_archive(weights);
    GeneratorWorkspace ws;

    const auto inputs = list_pngs(input_dir);
    if (inputs.empty()) {
        std::cerr << "error: no PNG files under " << input_dir << "\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(output_dir);

    int failures = 0;
    for (const auto& path : inputs) {
        try {
            const Image low = read_png(path);
            const Image enhanced = enhance_image(gen, low, params, ws);
            write_png(std::filesystem::path(output_dir) / path.filename(), enhanced);
            std::cout << path.filename().string() << " -> " << output_dir << "\n";
        } catch (const std::exception& e) {
            std::cerr << path.filename().string() << " failed: " << e.what() << "\n";
            ++failures;
        }
    }
    return failures == 0 ? kExitOk : kExitPartial;
}

// ----------------------------------------------------------------- eval ---

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, bool no_ref,
             const std::string& model_dir, const std::string& csv_path) {
    const auto preds = list_pngs(pred_dir);
    if (preds.empty()) {
        std::cerr << "error: no PNG files under " << pred_dir << "\n";
        return kExitUsage;
    }

    std::ofstream csv;
    std::ostream* out = &std::cout;
    if (!csv_path.empty()) {
        csv.open(csv_path, std::ios::trunc);
        out = &csv;
    }

    MetricReport report;
    int skipped = 0;

    if (no_ref) {
        const BrisqueModel bm = BrisqueModel::load(std::filesystem::path(model_dir) / "brisque");
        const NiqeModel nm = NiqeModel::load(std::filesystem::path(model_dir) / "niqe");
        *out << "# no-reference evaluation; pred_dir=" << pred_dir << " model_dir=" << model_dir
             << "\n";
        *out << "id,niqe,brisque\n";
        for (const auto& p : preds) {
            try {
                MetricRecord r;
                r.id = p.stem().string();
                const Image img = read_png(p);
                r.niqe = niqe(img, nm);
                r.brisque = brisque(img, bm);
                report.per_image.push_back(r);
                *out << r.id << ',' << format_metric(r.niqe) << ',' << format_metric(r.brisque)
                     << "\n";
            } catch (const std::exception& e) {
                std::cerr << p.filename().string() << " skipped: " << e.what() << "\n";
                ++skipped;
            }
        }
        if (report.per_image.empty()) {
            std::cerr << "error: no scorable images\n";
            return kExitUsage;
        }
        report.compute_means();
        *out << "mean," << format_metric(report.mean_niqe) << ','
             << format_metric(report.mean_brisque) << "\n";
        std::cerr << "mean niqe=" << format_metric(report.mean_niqe)
                  << " brisque=" << format_metric(report.mean_brisque) << " over "
                  << report.per_image.size() << " images\n";
        return skipped == 0 ? kExitOk : kExitPartial;
    }

    *out << "# full-reference evaluation; pred_dir=" << pred_dir << " gt_dir=" << gt_dir << "\n";
    *out << "id,psnr_db,ssim\n";
    for (const auto& p : preds) {
        const auto gt_path = std::filesystem::path(gt_dir) / p.filename();
        if (!std::filesystem::exists(gt_path)) {
            std::cerr << "no ground truth for " << p.filename().string() << ", skipped\n";
            ++skipped;
            continue;
        }
        const Image pred = read_png(p);
        const Image gt = read_png(gt_path);
        if (!pred.same_dims(gt)) {
            std::cerr << "dimension mismatch for " << p.filename().string() << ", skipped\n";
            ++skipped;
            continue;
        }
        MetricRecord r;
        r.id = p.stem().string();
        r.psnr_db = psnr(pred, gt);
        r.ssim = ssim(pred, gt);
        report.per_image.push_back(r);
        *out << r.id << ',' << format_metric(r.psnr_db) << ',' << format_metric(r.ssim) << "\n";
    }
    if (report.per_image.empty()) {
        std::cerr << "error: no comparable pairs\n";
        return kExitUsage;
    }
    report.compute_means();
    *out << "mean," << format_metric(report.mean_psnr) << ',' << format_metric(report.mean_ssim)
         << "\n";
    std::cerr << "mean psnr=" << format_metric(report.mean_psnr)
              << " ssim=" << format_metric(report.mean_ssim) << " over "
              << report.per_image.size() << " images\n";
    return skipped == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- bench ---

int cmd_bench(const std::string& weights, const std::string& input, int runs,
              const IlluminationParams& params) {
    Generator gen = load_generator_archive(weights);
    GeneratorWorkspace ws;
    const Image low = read_png(input);

    using clock = std::chrono::steady_clock;

    // illumination + assembly timed separately from the network forward
    auto time_illum = [&] {
        const auto t0 = clock::now();
        Tensor x = assemble_input(low, params);
        return std::pair{std::chrono::duration<double>(clock::now() - t0).count(), std::move(x)};
    };

    auto [illum_seconds, x] = time_illum();
    Image four(x.h, x.w, 4, ValueRange::Signed);
    four.data = std::move(x.v);
    auto [padded, box] = pad_to_multiple(four, gen.config().downsample_factor());
    const Tensor input_tensor = image_to_tensor(padded);

    for (int i = 0; i < 3; ++i) gen.forward(input_tensor, ws);  // warm-up

    std::vector<double> times;
    for (int i = 0; i < runs; ++i) {
        const auto t0 = clock::now();
        gen.forward(input_tensor, ws);
        times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= double(times.size());
    double var = 0.0;
    for (double t : times) var += (t - mean) * (t - mean);
    const double stddev = std::sqrt(var / double(times.size()));

    std::cout << "hardware: " << hardware_string() << "\n";
    std::cout << "input: " << low.width << "x" << low.height << " (padded " << padded.width
              << "x" << padded.height << "), runs: " << runs << "\n";
    std::cout << "forward only:        " << mean << " s +- " << stddev << " s\n";
    std::cout << "illumination map:    " << illum_seconds << " s\n";
    std::cout << "inclusive per image: " << (mean + illum_seconds) << " s (forward + guidance)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EDNIG low-light image enhancement"};
    app.require_subcommand(1);

    IlluminationParams illum_params;
    auto add_illum_options = [&](CLI::App* cmd) {
        cmd->add_option("--patch", illum_params.patch_size,
                        "bright-channel patch size (odd)")->capture_default_str();
        cmd->add_option("--radius", illum_params.gf_radius, "guided-filter radius")
            ->capture_default_str();
        cmd->add_option("--eps", illum_params.gf_epsilon, "guided-filter epsilon")
            ->capture_default_str();
    };

    // illum
    std::string in_path, out_path;
    auto* illum_cmd = app.add_subcommand("illum", "extract the illumination map as a PNG");
    illum_cmd->add_option("-i,--input", in_path, "input RGB PNG")->required();
    illum_cmd->add_option("-o,--output", out_path, "output grayscale PNG")->required();
    add_illum_options(illum_cmd);

    // train
    std::string config_path, dataset_flag, out_flag;
    bool resume = false;
    double lr_flag = 1e-4;
    int epochs_flag = 200;
    std::uint64_t seed_flag = 0;
    auto* train_cmd = app.add_subcommand(
        "train", "train on a LOL-layout dataset (Adam, batch 1, lr 1e-4 decaying linearly to "
                 "zero over 200 epochs, 512x512 crops, loss weights 100/100/100/1)");
    train_cmd->add_option("-c,--config", config_path, "JSON config file");
    train_cmd->add_option("--dataset", dataset_flag, "dataset root (overrides config)");
    train_cmd->add_option("--out", out_flag, "run directory (overrides config)");
    train_cmd->add_flag("--resume", resume, "continue from the newest checkpoint");
    train_cmd->add_option("--lr", lr_flag, "initial learning rate")->capture_default_str();
    train_cmd->add_option("--epochs", epochs_flag, "total epochs")->capture_default_str();
    train_cmd->add_option("--seed", seed_flag, "training seed")->capture_default_str();

    // enhance
    std::string weights, input_dir, output_dir;
    auto* enh_cmd = app.add_subcommand("enhance", "enhance every PNG in a directory");
    enh_cmd->add_option("-w,--weights", weights, "checkpoint or generator archive directory")
        ->required();
    enh_cmd->add_option("-i,--input", input_dir, "input directory")->required();
    enh_cmd->add_option("-o,--output", output_dir, "output directory")->required();
    add_illum_options(enh_cmd);

    // eval
    std::string pred_dir, gt_dir, csv_path;
    std::string model_dir = default_model_dir().string();
    bool no_ref = false;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM against ground truth, or NIQE/BRISQUE");
    eval_cmd->add_option("--pred", pred_dir, "predictions directory")->required();
    eval_cmd->add_option("--gt", gt_dir, "ground-truth directory (full-reference mode)");
    eval_cmd->add_flag("--no-ref", no_ref, "no-reference mode (NIQE/BRISQUE)");
    eval_cmd->add_option("--model-dir", model_dir,
                         "NIQE/BRISQUE model directory (env EDNIG_MODEL_DIR)")
        ->capture_default_str();
    eval_cmd->add_option("-o,--csv", csv_path, "write the report CSV here (default: stdout)");

    // bench
    std::string bench_input;
    int runs = 50;
    auto* bench_cmd = app.add_subcommand("bench", "time enhancement forward passes");
    bench_cmd->add_option("-w,--weights", weights, "checkpoint or generator archive directory")
        ->required();
    bench_cmd->add_option("-i,--input", bench_input, "input PNG")->required();
    bench_cmd->add_option("--runs", runs, "timed runs after 3 warm-ups")->capture_default_str();
    add_illum_options(bench_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("illum")) {
            illum_params.validate();
            return cmd_illum(in_path, out_path, illum_params);
        }
        if (app.got_subcommand("train")) {
            nlohmann::json file = nlohmann::json::object();
            if (!config_path.empty()) {
                std::ifstream f(config_path);
                if (!f) {
                    std::cerr << "error: cannot open config " << config_path << "\n";
                    return kExitUsage;
                }
                try {
                    f >> file;
                } catch (const nlohmann::json::exception& e) {
                    std::cerr << "error: bad JSON in " << config_path << ": " << e.what() << "\n";
                    return kExitUsage;
                }
            }
            // flags override config values; overrides are echoed to the log
            std::vector<std::string> echoes;
            if (train_cmd->count("--lr")) {
                file["lr_initial"] = lr_flag;
                echoes.push_back("lr_initial=" + std::to_string(lr_flag));
            }
            if (train_cmd->count("--epochs")) {
                file["total_epochs"] = epochs_flag;
                echoes.push_back("total_epochs=" + std::to_string(epochs_flag));
            }
            if (train_cmd->count("--seed")) {
                file["seed"] = seed_flag;
                echoes.push_back("seed=" + std::to_string(seed_flag));
            }
            return cmd_train(file, dataset_flag, out_flag, resume, echoes);
        }
        if (app.got_subcommand("enhance")) {
            illum_params.validate();
            return cmd_enhance(weights, input_dir, output_dir, illum_params);
        }
        if (app.got_subcommand("eval")) {
            if (!no_ref && gt_dir.empty()) {
                std::cerr << "error: eval needs --gt (full-reference) or --no-ref\n";
                return kExitUsage;
            }
            return cmd_eval(pred_dir, gt_dir, no_ref, model_dir, csv_path);
        }
        if (app.got_subcommand("bench")) {
            if (runs < 1) {
                std::cerr << "error: --runs must be >= 1\n";
                return kExitUsage;
            }
            illum_params.validate();
            return cmd_bench(weights, bench_input, runs, illum_params);
        }
    } catch (const ArchiveError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitUsage;
}
