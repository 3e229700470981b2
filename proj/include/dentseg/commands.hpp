#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dentseg/config.hpp"
#include "dentseg/dataset.hpp"
#include "dentseg/eval.hpp"
#include "dentseg/model.hpp"
#include "dentseg/plot.hpp"
#include "dentseg/trainer.hpp"

namespace dentseg {

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

inline std::vector<PreprocessedSample> preprocess_ids(const DatasetIndex& index,
                                                      const std::vector<std::string>& ids) {
    std::vector<PreprocessedSample> out;
    out.reserve(ids.size());
    for (const auto* p : select_pairs(index, ids)) out.push_back(preprocess_pair(*p));
    return out;
}

} // namespace detail

/// prepare: index the dataset, split it, and write the split manifest plus a
/// per-subset count summary.
inline void cmd_prepare(const std::filesystem::path& root, const std::filesystem::path& out_dir,
                        std::uint64_t seed = 42, double r_train = 0.7, double r_val = 0.1,
                        double r_test = 0.2) {
    std::filesystem::create_directories(out_dir);
    const DatasetIndex index = load_dataset(root);
    const SplitAssignment split = split_dataset(index, r_train, r_val, r_test, seed);
    detail::write_text(out_dir / "split.json", split_to_json(split).dump(2) + "\n");

    std::size_t per_subset[3] = {0, 0, 0};
    for (const auto& p : index.pairs) ++per_subset[static_cast<int>(p.source_subset)];
    nlohmann::json summary{{"total", index.total_count()},
                           {"train_folder", per_subset[0]},
                           {"test_folder", per_subset[1]},
                           {"new_dataset", per_subset[2]},
                           {"split_sizes",
                            {{"train", split.train_ids.size()},
                             {"val", split.val_ids.size()},
                             {"test", split.test_ids.size()}}}};
    detail::write_text(out_dir / "summary.json", summary.dump(2) + "\n");
}

struct RunArtifacts {
    std::filesystem::path log_csv;
    std::filesystem::path checkpoint;
    std::filesystem::path metrics_json;
    std::filesystem::path curve_png;
    std::filesystem::path confusion_png;
    std::filesystem::path predictions_dir;
};

inline ModelGraph build_from_config(const ExperimentConfig& cfg) {
    if (cfg.architecture == Architecture::baseline) return build_baseline(cfg.train.seed);
    const WeightArchive weights = WeightArchive::load(cfg.weights_path);
    return build_vgg19(cfg.train.dropout_rate, &weights, cfg.train.seed);
}

/// train: the full experiment — split, train, evaluate the best checkpoint on
/// the test split, and emit every artifact into output_dir.
inline RunArtifacts cmd_train(const std::filesystem::path& config_path) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    std::filesystem::create_directories(cfg.output_dir);
    detail::write_text(cfg.output_dir / "config.txt", cfg.to_text());

    const DatasetIndex index = load_dataset(cfg.dataset_root);
    const SplitAssignment split =
        split_dataset(index, cfg.ratio_train, cfg.ratio_val, cfg.ratio_test, cfg.split_seed);
    detail::write_text(cfg.output_dir / "split.json", split_to_json(split).dump(2) + "\n");

    const auto train_set = detail::preprocess_ids(index, split.train_ids);
    const auto val_set = detail::preprocess_ids(index, split.val_ids);
    const auto test_set = detail::preprocess_ids(index, split.test_ids);

    ModelGraph model = build_from_config(cfg);
    RunArtifacts art;
    art.checkpoint = cfg.output_dir / "best.ckpt";
    const TrainResult result =
        train(model, train_set, val_set, cfg.train, art.checkpoint,
              nlohmann::json{{"config", cfg.to_text()}});

    art.log_csv = cfg.output_dir / "log.csv";
    detail::write_text(art.log_csv, result.log.to_csv());
    art.curve_png = cfg.output_dir / "curves.png";
    plot_accuracy_curves(result.log, art.curve_png);

    ModelGraph best = load_checkpoint(art.checkpoint).model;
    const Aggregation agg = cfg.aggregation == "macro" ? Aggregation::macro : Aggregation::micro;
    const MetricsReport report = evaluate_samples(best, test_set, cfg.threshold, agg);
    art.metrics_json = cfg.output_dir / "metrics.json";
    detail::write_text(art.metrics_json, metrics_to_json(report).dump(2) + "\n");

    art.confusion_png = cfg.output_dir / "confusion.png";
    plot_confusion_heatmap(normalized_confusion_matrix(report.counts), art.confusion_png);

    // per-test-image probability maps (16-bit) and binary masks, so
    // thresholds can be re-analyzed without retraining
    art.predictions_dir = cfg.output_dir / "predictions";
    std::filesystem::create_directories(art.predictions_dir);
    for (const auto& s : test_set) {
        const Tensor4 pred = best.forward(s.image);
        std::vector<std::uint16_t> prob(pred.size());
        std::vector<std::uint8_t> mask(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            prob[i] = static_cast<std::uint16_t>(pred.data[i] * 65535.0f + 0.5f);
            mask[i] = pred.data[i] > cfg.threshold ? 255 : 0;
        }
        write_png_gray16(art.predictions_dir / (s.sample_id + "_prob.png"), pred.h, pred.w, prob);
        write_png_gray8(art.predictions_dir / (s.sample_id + "_mask.png"), pred.h, pred.w, mask);
    }
    return art;
}

/// evaluate: seven-metric report for one split of the dataset under a stored
/// checkpoint. The split manifest defaults to <root>/split.json.
inline MetricsReport cmd_evaluate(const std::filesystem::path& checkpoint_path,
                                  const std::filesystem::path& root, const std::string& split_name,
                                  double threshold = 0.5,
                                  std::filesystem::path manifest_path = {},
                                  Aggregation aggregation = Aggregation::micro,
                                  const std::filesystem::path& out_json = {}) {
    if (manifest_path.empty()) manifest_path = root / "split.json";
    std::ifstream mf(manifest_path);
    if (!mf)
        throw SchemaError("missing split manifest '" + manifest_path.string() +
                          "' (run prepare first or pass --manifest)");
    const SplitAssignment split = split_from_json(nlohmann::json::parse(mf));
    const std::vector<std::string>* ids = nullptr;
    if (split_name == "train") ids = &split.train_ids;
    else if (split_name == "val") ids = &split.val_ids;
    else if (split_name == "test") ids = &split.test_ids;
    else throw ConfigError("split must be one of train, val, test");

    Checkpoint ck = load_checkpoint(checkpoint_path);
    const DatasetIndex index = load_dataset(root);
    const auto samples = detail::preprocess_ids(index, *ids);
    const MetricsReport report = evaluate_samples(ck.model, samples, threshold, aggregation);
    if (!out_json.empty())
        detail::write_text(out_json, metrics_to_json(report).dump(2) + "\n");
    return report;
}

/// predict: one image in, one thresholded 8-bit mask PNG out.
inline void cmd_predict(const std::filesystem::path& checkpoint_path,
                        const std::filesystem::path& image_path,
                        const std::filesystem::path& out_path, double threshold = 0.5) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    const Tensor4 image = preprocess_image(decode_png(image_path));
    const Tensor4 pred = ck.model.forward(image);
    std::vector<std::uint8_t> mask(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) mask[i] = pred.data[i] > threshold ? 255 : 0;
    write_png_gray8(out_path, pred.h, pred.w, mask);
}

/// plot: accuracy curves from a training log, plus a confusion heatmap when a
/// metrics JSON is given.
inline void cmd_plot(const std::filesystem::path& log_csv, const std::filesystem::path& out_dir,
                     const std::filesystem::path& metrics_json = {}) {
    std::filesystem::create_directories(out_dir);
    std::ifstream f(log_csv);
    if (!f) throw SchemaError("cannot open log '" + log_csv.string() + "'");
    const TrainingLog log = TrainingLog::from_csv(f);
    plot_accuracy_curves(log, out_dir / "curves.png");
    if (!metrics_json.empty()) {
        std::ifstream mf(metrics_json);
        if (!mf) throw SchemaError("cannot open metrics '" + metrics_json.string() + "'");
        nlohmann::json j = nlohmann::json::parse(mf, nullptr, false);
        if (j.is_discarded()) throw SchemaError("metrics JSON is not valid JSON");
        validate_metrics_json(j);
        ConfusionCounts c{j["counts"]["tp"].get<std::uint64_t>(),
                          j["counts"]["fp"].get<std::uint64_t>(),
                          j["counts"]["fn"].get<std::uint64_t>(),
                          j["counts"]["tn"].get<std::uint64_t>()};
        plot_confusion_heatmap(normalized_confusion_matrix(c), out_dir / "confusion.png");
    }
}

} // namespace dentseg
