#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ednig/checkpoint.hpp"
#include "ednig/generator.hpp"
#include "ednig/illumination.hpp"
#include "test_support.hpp"

using namespace ednig;

namespace {

const std::string kCli = EDNIG_CLI_PATH;

struct RunOut {
    int exit_code = -1;
    std::string output;
};

RunOut run_cli(const std::string& args) {
    const auto out_file = std::filesystem::temp_directory_path() /
                          ("ednig_cli_out_" + std::to_string(::getpid()) + ".txt");
    const std::string cmd = kCli + " " + args + " > " + out_file.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    RunOut r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream f(out_file);
    r.output.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    std::filesystem::remove(out_file);
    return r;
}

std::filesystem::path save_random_generator(const std::filesystem::path& dir,
                                            GeneratorConfig cfg = {}, std::uint64_t seed = 1) {
    Generator gen(cfg, seed);
    nlohmann::json meta{{"kind", "generator"}, {"config", cfg.to_json()}, {"init_seed", seed}};
    save_params(dir, std::as_const(gen).params(), meta);
    return dir;
}

}  // namespace

TEST_CASE("every subcommand help exits 0 and documents the defaults") {
    for (const char* sub : {"illum", "train", "enhance", "eval", "bench"}) {
        CAPTURE(sub);
        const RunOut r = run_cli(std::string(sub) + " --help");
        CHECK(r.exit_code == 0);
        CHECK_FALSE(r.output.empty());
    }
    // the reference loss weights and schedule are stated in the train help
    const RunOut r = run_cli("train --help");
    CHECK(r.output.find("100/100/100/1") != std::string::npos);
    CHECK(r.output.find("1e-4") != std::string::npos);
    CHECK(r.output.find("200 epochs") != std::string::npos);

    const RunOut i = run_cli("illum --help");
    CHECK(i.output.find("15") != std::string::npos);  // default patch size
    CHECK(i.output.find("40") != std::string::npos);  // default radius
}

TEST_CASE("illum: constant input gives a constant map; patch 1 equals channel max") {
    const auto dir = test::temp_dir("cli_illum");
    Image gray(32, 48, 3, ValueRange::Byte);
    std::fill(gray.data.begin(), gray.data.end(), 128.f);
    write_png(dir / "gray.png", gray);

    RunOut r = run_cli("illum -i " + (dir / "gray.png").string() + " -o " +
                       (dir / "map.png").string() + " --radius 4");
    CHECK(r.exit_code == 0);
    const Image map = read_png(dir / "map.png");
    CHECK(map.channels == 1);
    for (float v : map.data) CHECK(v == doctest::Approx(128.f).epsilon(0.01));

    // --patch 1 on gray content: channel max == luma == guide, so the
    // self-guidance limit keeps the refined map at the per-pixel channel max
    Image img = test::synthetic_scene(24, 24, 3);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            const float v = img.at(y, x, 1);
            img.at(y, x, 0) = img.at(y, x, 2) = v;
        }
    write_png(dir / "img.png", img);
    r = run_cli("illum -i " + (dir / "img.png").string() + " -o " + (dir / "map1.png").string() +
                " --patch 1 --radius 2 --eps 1e-8");
    CHECK(r.exit_code == 0);
    const Image map1 = read_png(dir / "map1.png");
    Image expect(24, 24, 1, ValueRange::Byte);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            expect.at(y, x, 0) = std::max({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
    double max_err = 0;
    for (std::size_t i = 0; i < map1.data.size(); ++i)
        max_err = std::max(max_err, std::abs(double(map1.data[i]) - double(expect.data[i])));
    CHECK(max_err <= 2.0);  // quantization through the PNG round-trips

    CHECK(run_cli("illum -i /does/not/exist.png -o /tmp/x.png").exit_code == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("train: toy run writes checkpoints and log; bad config and dataset fail cleanly") {
    const auto root = test::make_synthetic_lol("cli_train", 2, 1, 64, 64, 7);
    const auto run_dir = test::temp_dir("cli_run");
    const auto cfg_path = run_dir / "cfg.json";
    {
        nlohmann::json cfg{{"total_epochs", 2},
                           {"checkpoint_every", 1},
                           {"input_size", 64},
                           {"n_critic", 1},
                           {"seed", 5},
                           {"generator", {{"base_channels", 2}}},
                           {"critic", {{"base_channels", 2}}},
                           {"illumination", {{"gf_radius", 6}}},
                           {"loss", {{"lambda_per", 0.0}}}};
        std::ofstream f(cfg_path);
        f << cfg.dump();
    }

    RunOut r = run_cli("train -c " + cfg_path.string() + " --dataset " + root.string() +
                       " --out " + (run_dir / "run").string());
    CHECK(r.exit_code == 0);
    CHECK(std::filesystem::exists(run_dir / "run" / "checkpoints" / "epoch_0001"));
    CHECK(std::filesystem::exists(run_dir / "run" / "checkpoints" / "epoch_0002"));
    {
        std::ifstream log(run_dir / "run" / "training_log.csv");
        std::string line;
        int rows = 0;
        std::getline(log, line);  // header
        while (std::getline(log, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 2);
    }

    // resume: bump total_epochs in the stored checkpoint config, run again
    {
        std::ifstream in(run_dir / "run" / "checkpoints" / "epoch_0002" / "checkpoint.json");
        nlohmann::json m;
        in >> m;
        in.close();
        m["config"]["total_epochs"] = 3;
        std::ofstream out(run_dir / "run" / "checkpoints" / "epoch_0002" / "checkpoint.json",
                          std::ios::trunc);
        out << m.dump();
    }
    r = run_cli("train --resume --dataset " + root.string() + " --out " +
                (run_dir / "run").string());
    CHECK(r.exit_code == 0);
    CHECK(std::filesystem::exists(run_dir / "run" / "checkpoints" / "epoch_0003"));
    {
        std::ifstream log(run_dir / "run" / "training_log.csv");
        std::string line;
        int rows = 0;
        std::getline(log, line);
        while (std::getline(log, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 3);  // history replayed + the new epoch
    }

    // unknown config key -> exit 2 naming it
    {
        std::ofstream f(run_dir / "bad.json", std::ios::trunc);
        f << R"({"total_epochs": 1, "learning_rate": 0.1})";
    }
    r = run_cli("train -c " + (run_dir / "bad.json").string() + " --dataset " + root.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("learning_rate") != std::string::npos);

    // missing dataset -> exit 2 with a layout hint
    r = run_cli("train -c " + cfg_path.string() + " --dataset /no/such/dir");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("our485") != std::string::npos);

    std::filesystem::remove_all(root);
    std::filesystem::remove_all(run_dir);
}

TEST_CASE("enhance: native-size outputs, byte range, per-file failures continue") {
    const auto dir = test::temp_dir("cli_enh");
    GeneratorConfig small;
    small.base_channels = 2;
    save_random_generator(dir / "weights", small, 11);

    // a 600x400 frame (the LOL native size) plus a smaller one
    std::filesystem::create_directories(dir / "in");
    write_png(dir / "in" / "a.png", test::synthetic_scene(400, 600, 21));
    write_png(dir / "in" / "b.png", test::synthetic_scene(64, 80, 22));

    RunOut r = run_cli("enhance -w " + (dir / "weights").string() + " -i " + (dir / "in").string() +
                       " -o " + (dir / "out").string() + " --radius 8");
    CHECK(r.exit_code == 0);
    const Image a = read_png(dir / "out" / "a.png");
    CHECK(a.height == 400);
    CHECK(a.width == 600);
    const Image b = read_png(dir / "out" / "b.png");
    CHECK(b.height == 64);
    CHECK(b.width == 80);
    for (float v : a.data) {
        CHECK(v >= 0.f);
        CHECK(v <= 255.f);
    }

    // one corrupt file: logged, skipped, exit 1, good file still processed
    std::filesystem::create_directories(dir / "in2");
    write_png(dir / "in2" / "ok.png", test::synthetic_scene(64, 64, 23));
    {
        std::ofstream f(dir / "in2" / "broken.png");
        f << "not a png";
    }
    r = run_cli("enhance -w " + (dir / "weights").string() + " -i " + (dir / "in2").string() +
                " -o " + (dir / "out2").string() + " --radius 8");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("broken.png") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "out2" / "ok.png"));

    std::filesystem::remove_all(dir);
}

TEST_CASE("eval: identical folders give inf psnr and ssim 1; orphans skip with exit 1") {
    const auto dir = test::temp_dir("cli_eval");
    std::filesystem::create_directories(dir / "pred");
    std::filesystem::create_directories(dir / "gt");
    for (int i = 0; i < 3; ++i) {
        const Image img = test::synthetic_scene(48, 64, 30 + std::uint64_t(i));
        write_png(dir / "pred" / (std::to_string(i) + ".png"), img);
        write_png(dir / "gt" / (std::to_string(i) + ".png"), img);
    }

    RunOut r = run_cli("eval --pred " + (dir / "pred").string() + " --gt " + (dir / "gt").string() +
                       " -o " + (dir / "report.csv").string());
    CHECK(r.exit_code == 0);
    std::ifstream csv(dir / "report.csv");
    std::string content((std::istreambuf_iterator<char>(csv)), std::istreambuf_iterator<char>());
    CHECK(content.find("mean,inf,1.000000") != std::string::npos);
    CHECK(content.find("id,psnr_db,ssim") != std::string::npos);

    // orphan prediction -> listed, skipped, partial exit
    write_png(dir / "pred" / "orphan.png", test::synthetic_scene(48, 64, 40));
    r = run_cli("eval --pred " + (dir / "pred").string() + " --gt " + (dir / "gt").string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("orphan.png") != std::string::npos);

    std::filesystem::remove_all(dir);
}

TEST_CASE("eval --no-ref scores a folder against the shipped models") {
    const auto data = std::filesystem::path(EDNIG_SOURCE_DIR) / "data";
    const auto dir = test::temp_dir("cli_noref");
    std::filesystem::create_directories(dir / "imgs");
    std::filesystem::copy_file(data / "corpus" / "astronaut.png", dir / "imgs" / "astronaut.png");

    const RunOut r = run_cli("eval --pred " + (dir / "imgs").string() + " --no-ref --model-dir " +
                             data.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("id,niqe,brisque") != std::string::npos);
    CHECK(r.output.find("# no-reference evaluation") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("bench reports timings and grows with input area") {
    const auto dir = test::temp_dir("cli_bench");
    GeneratorConfig small;
    small.base_channels = 2;
    save_random_generator(dir / "weights", small, 12);
    write_png(dir / "small.png", test::synthetic_scene(64, 64, 50));
    write_png(dir / "large.png", test::synthetic_scene(256, 256, 51));

    const RunOut r1 = run_cli("bench -w " + (dir / "weights").string() + " -i " +
                              (dir / "small.png").string() + " --runs 3 --radius 8");
    CHECK(r1.exit_code == 0);
    CHECK(r1.output.find("forward only") != std::string::npos);
    CHECK(r1.output.find("hardware:") != std::string::npos);
    CHECK(r1.output.find("illumination map") != std::string::npos);

    auto parse_mean = [](const std::string& out) {
        const auto pos = out.find("forward only:");
        REQUIRE(pos != std::string::npos);
        double mean = 0;
        std::sscanf(out.c_str() + pos, "forward only: %lf", &mean);
        return mean;
    };
    const RunOut r2 = run_cli("bench -w " + (dir / "weights").string() + " -i " +
                              (dir / "large.png").string() + " --runs 3 --radius 8");
    CHECK(parse_mean(r2.output) > parse_mean(r1.output));  // 16x the pixels

    CHECK(run_cli("bench -w " + (dir / "weights").string() + " -i " +
                  (dir / "small.png").string() + " --runs 0")
              .exit_code == 2);
    std::filesystem::remove_all(dir);
}
