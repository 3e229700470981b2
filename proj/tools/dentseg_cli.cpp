// Command-line surface: prepare, train, evaluate, predict, plot.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dentseg/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Pediatric dental panoramic-radiograph segmentation"};
    app.require_subcommand(1);

    std::string root, out, config_path, checkpoint, split = "test", image, log_csv, metrics_json, manifest;
    std::uint64_t seed = 42;
    double threshold = 0.5;
    std::string aggregation = "micro";

    auto* prepare = app.add_subcommand("prepare", "Index the dataset and write a split manifest");
    prepare->add_option("--root", root, "Dataset root directory")->required();
    prepare->add_option("--out", out, "Output directory")->required();
    prepare->add_option("--seed", seed, "Split shuffle seed");

    auto* train = app.add_subcommand("train", "Run one experiment end to end");
    train->add_option("--config", config_path, "Experiment config file")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on one split");
    evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    evaluate->add_option("--root", root, "Dataset root directory")->required();
    evaluate->add_option("--split", split, "train | val | test");
    evaluate->add_option("--threshold", threshold, "Binarization threshold");
    evaluate->add_option("--manifest", manifest, "Split manifest (default <root>/split.json)");
    evaluate->add_option("--aggregation", aggregation, "micro | macro");
    evaluate->add_option("--out", out, "Write the metrics JSON here");

    auto* predict = app.add_subcommand("predict", "Write a binary mask PNG for one image");
    predict->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    predict->add_option("--image", image, "Input image PNG")->required();
    predict->add_option("--out", out, "Output mask PNG")->required();
    predict->add_option("--threshold", threshold, "Binarization threshold");

    auto* plot = app.add_subcommand("plot", "Render accuracy curves and confusion heatmap");
    plot->add_option("--log", log_csv, "Training log CSV")->required();
    plot->add_option("--metrics", metrics_json, "Metrics JSON for the heatmap");
    plot->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            dentseg::cmd_prepare(root, out, seed);
            std::cout << "wrote " << out << "/split.json and summary.json\n";
        } else if (train->parsed()) {
            const auto art = dentseg::cmd_train(config_path);
            std::cout << "artifacts:\n  " << art.log_csv.string() << "\n  "
                      << art.checkpoint.string() << "\n  " << art.metrics_json.string() << "\n  "
                      << art.curve_png.string() << "\n  " << art.confusion_png.string() << "\n  "
                      << art.predictions_dir.string() << "\n";
        } else if (evaluate->parsed()) {
            const auto agg = aggregation == "macro" ? dentseg::Aggregation::macro
                                                    : dentseg::Aggregation::micro;
            const auto report = dentseg::cmd_evaluate(checkpoint, root, split, threshold,
                                                      manifest.empty() ? std::filesystem::path{}
                                                                       : std::filesystem::path{manifest},
                                                      agg, out.empty() ? std::filesystem::path{}
                                                                       : std::filesystem::path{out});
            std::cout << dentseg::metrics_to_json(report).dump(2) << "\n";
        } else if (predict->parsed()) {
            dentseg::cmd_predict(checkpoint, image, out, threshold);
            std::cout << "wrote " << out << "\n";
        } else if (plot->parsed()) {
            dentseg::cmd_plot(log_csv, out,
                              metrics_json.empty() ? std::filesystem::path{}
                                                   : std::filesystem::path{metrics_json});
            std::cout << "wrote plots to " << out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
