#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "dentseg/commands.hpp"

using namespace dentseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("dentseg_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

/// Dataset of n paired 8x8 samples; masks carry a centered 4x4 square so both
/// classes are present in every ground truth.
void make_dataset(const fs::path& root, int n) {
    fs::create_directories(root / "train" / "images");
    fs::create_directories(root / "train" / "masks");
    Rng rng(17);
    for (int i = 0; i < n; ++i) {
        std::vector<std::uint8_t> img(64), msk(64, 0);
        for (auto& v : img) v = static_cast<std::uint8_t>(rng.below(256));
        for (int y = 2; y < 6; ++y)
            for (int x = 2; x < 6; ++x) msk[y * 8 + x] = 255;
        const std::string name = "s" + std::to_string(i) + ".png";
        write_png_gray8(root / "train" / "images" / name, 8, 8, img);
        write_png_gray8(root / "train" / "masks" / name, 8, 8, msk);
    }
}

} // namespace

TEST_CASE("prepare writes a deterministic manifest and summary") {
    TempDir data("prep_data");
    make_dataset(data.path, 10);

    TempDir out1("prep_out1");
    TempDir out2("prep_out2");
    cmd_prepare(data.path, out1.path, 42);
    cmd_prepare(data.path, out2.path, 42);

    CHECK(slurp(out1.path / "split.json") == slurp(out2.path / "split.json"));

    const auto split = split_from_json(nlohmann::json::parse(slurp(out1.path / "split.json")));
    CHECK(split.train_ids.size() == 7);
    CHECK(split.val_ids.size() == 1);
    CHECK(split.test_ids.size() == 2);
    CHECK(split.seed == 42);

    const auto summary = nlohmann::json::parse(slurp(out1.path / "summary.json"));
    CHECK(summary.at("total") == 10);
    CHECK(summary.at("train_folder") == 10);
    CHECK(summary.at("test_folder") == 0);
    CHECK(summary.at("split_sizes").at("train") == 7);
}

TEST_CASE("experiment config parsing and validation") {
    TempDir tmp("cfg");
    const fs::path good = tmp.path / "good.cfg";
    {
        std::ofstream f(good);
        f << "# experiment\n"
          << "dataset_root = /data\n"
          << "architecture = baseline\n"
          << "output_dir = /out\n"
          << "epochs = 3\n"
          << "batch_size = 2\n"
          << "learning_rate = 0.0002\n"
          << "seed = 7\n"
          << "threshold = 0.4\n"
          << "aggregation = macro\n";
    }
    ExperimentConfig cfg = load_experiment_config(good);
    CHECK(cfg.dataset_root == "/data");
    CHECK(cfg.architecture == Architecture::baseline);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.batch_size == 2);
    CHECK(cfg.train.adam.learning_rate == Catch::Approx(2e-4f));
    CHECK(cfg.train.seed == 7);
    CHECK(cfg.threshold == 0.4);
    CHECK(cfg.train.threshold == 0.4);
    CHECK(cfg.aggregation == "macro");
    // defaults survive when keys are absent
    CHECK(cfg.ratio_train == 0.7);
    CHECK(cfg.train.dropout_rate == 0.3f);

    const fs::path bad = tmp.path / "bad.cfg";
    {
        std::ofstream f(bad);
        f << "architecture = vgg19_backbone\n" // missing weights_path
          << "epochs = 0\n"
          << "threshold = 1.5\n";              // and missing dataset_root/output_dir
    }
    try {
        load_experiment_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        // all problems reported at once
        CHECK(msg.find("dataset_root") != std::string::npos);
        CHECK(msg.find("output_dir") != std::string::npos);
        CHECK(msg.find("weights_path") != std::string::npos);
        CHECK(msg.find("epochs") != std::string::npos);
        CHECK(msg.find("threshold") != std::string::npos);
    }

    const fs::path extra = tmp.path / "extra.cfg";
    {
        std::ofstream f(extra);
        f << "dataset_root = /data\narchitecture = baseline\noutput_dir = /out\n"
          << "weights_path = /w.bin\n"; // not allowed for baseline
    }
    CHECK_THROWS_AS(load_experiment_config(extra), ConfigError);

    CHECK_THROWS_AS(load_experiment_config(tmp.path / "absent.cfg"), ConfigError);
}

TEST_CASE("end-to-end train / evaluate / predict / plot pipeline") {
    TempDir data("pipe_data");
    make_dataset(data.path, 5); // 3 train / 0 val / 2 test
    TempDir out("pipe_out");

    const fs::path cfg_path = out.path / "run.cfg";
    {
        std::ofstream f(cfg_path);
        f << "dataset_root = " << data.path.string() << "\n"
          << "architecture = baseline\n"
          << "output_dir = " << (out.path / "run").string() << "\n"
          << "epochs = 1\n"
          << "batch_size = 4\n";
    }
    const RunArtifacts art = cmd_train(cfg_path);

    for (const fs::path* p : {&art.log_csv, &art.checkpoint, &art.metrics_json, &art.curve_png,
                              &art.confusion_png}) {
        INFO(p->string());
        CHECK(fs::is_regular_file(*p));
    }
    CHECK(fs::is_regular_file(out.path / "run" / "config.txt"));
    CHECK(fs::is_regular_file(out.path / "run" / "split.json"));

    std::ifstream logf(art.log_csv);
    const TrainingLog log = TrainingLog::from_csv(logf);
    CHECK(log.records.size() == 1);

    const auto mj = nlohmann::json::parse(slurp(art.metrics_json));
    CHECK_NOTHROW(validate_metrics_json(mj));
    CHECK(mj.at("accuracy").get<double>() >= 0.0);
    CHECK(mj.at("accuracy").get<double>() <= 1.0);

    // predictions for both test samples, prob maps 16-bit and masks binary
    const auto split =
        split_from_json(nlohmann::json::parse(slurp(out.path / "run" / "split.json")));
    for (const auto& id : split.test_ids) {
        CHECK(fs::is_regular_file(art.predictions_dir / (id + "_prob.png")));
        const Image8 mask = decode_png(art.predictions_dir / (id + "_mask.png"));
        CHECK(mask.h == 256);
        CHECK(mask.w == 256);
        for (std::uint8_t v : mask.pixels) CHECK((v == 0 || v == 255));
    }

    // evaluate: default manifest location is <root>/split.json and must exist
    CHECK_THROWS_AS(cmd_evaluate(art.checkpoint, data.path, "test"), SchemaError);
    const MetricsReport rep =
        cmd_evaluate(art.checkpoint, data.path, "test", 0.5, out.path / "run" / "split.json",
                     Aggregation::micro, out.path / "eval.json");
    CHECK(fs::is_regular_file(out.path / "eval.json"));
    // same checkpoint, same split, same threshold -> same counts as cmd_train wrote
    CHECK(rep.counts.tp == mj.at("counts").at("tp").get<std::uint64_t>());
    CHECK(rep.counts.tn == mj.at("counts").at("tn").get<std::uint64_t>());
    CHECK_THROWS_AS(cmd_evaluate(art.checkpoint, data.path, "bogus", 0.5,
                                 out.path / "run" / "split.json"),
                    ConfigError);

    // predict: one image -> one thresholded mask
    const fs::path pred_png = out.path / "single.png";
    cmd_predict(art.checkpoint, data.path / "train" / "images" / "s0.png", pred_png);
    const Image8 single = decode_png(pred_png);
    CHECK(single.h == 256);
    for (std::uint8_t v : single.pixels) CHECK((v == 0 || v == 255));

    // plot: regenerate figures from the saved artifacts
    const fs::path plots = out.path / "plots";
    cmd_plot(art.log_csv, plots, art.metrics_json);
    CHECK(fs::is_regular_file(plots / "curves.png"));
    CHECK(fs::is_regular_file(plots / "confusion.png"));
    CHECK_THROWS_AS(cmd_plot(out.path / "absent.csv", plots), SchemaError);
}
