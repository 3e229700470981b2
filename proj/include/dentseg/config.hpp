#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dentseg/errors.hpp"
#include "dentseg/model.hpp"
#include "dentseg/trainer.hpp"

namespace dentseg {

/// Everything that determines one experiment run. Parsed from a flat
/// `key = value` text file; `#` starts a comment.
struct ExperimentConfig {
    std::filesystem::path dataset_root;
    Architecture architecture = Architecture::baseline;
    std::filesystem::path weights_path; // vgg19_backbone only
    double ratio_train = 0.7, ratio_val = 0.1, ratio_test = 0.2;
    std::uint64_t split_seed = 42;
    TrainConfig train;
    std::filesystem::path output_dir;
    double threshold = 0.5;
    std::string aggregation = "micro";

    std::string to_text() const {
        std::ostringstream os;
        os << "dataset_root = " << dataset_root.string() << "\n"
           << "architecture = " << architecture_name(architecture) << "\n"
           << "weights_path = " << weights_path.string() << "\n"
           << "ratio_train = " << ratio_train << "\n"
           << "ratio_val = " << ratio_val << "\n"
           << "ratio_test = " << ratio_test << "\n"
           << "split_seed = " << split_seed << "\n"
           << "epochs = " << train.epochs << "\n"
           << "batch_size = " << train.batch_size << "\n"
           << "learning_rate = " << train.adam.learning_rate << "\n"
           << "adam_beta1 = " << train.adam.beta1 << "\n"
           << "adam_beta2 = " << train.adam.beta2 << "\n"
           << "adam_eps = " << train.adam.eps << "\n"
           << "seed = " << train.seed << "\n"
           << "dropout_rate = " << train.dropout_rate << "\n"
           << "threshold = " << threshold << "\n"
           << "aggregation = " << aggregation << "\n"
           << "output_dir = " << output_dir.string() << "\n";
        return os.str();
    }
};

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

/// Parse and validate. Validation problems are collected and reported
/// together, one per line.
inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
    auto kv = parse_key_values(f);
    ExperimentConfig cfg;
    std::vector<std::string> problems;

    auto take = [&](const char* key) -> std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto as_double = [&](const char* key, double& out) {
        if (auto* s = take(key)) {
            try { out = std::stod(*s); } catch (...) { problems.push_back(std::string(key) + ": not a number"); }
        }
    };
    auto as_int = [&](const char* key, int& out) {
        if (auto* s = take(key)) {
            try { out = std::stoi(*s); } catch (...) { problems.push_back(std::string(key) + ": not an integer"); }
        }
    };
    auto as_u64 = [&](const char* key, std::uint64_t& out) {
        if (auto* s = take(key)) {
            try { out = std::stoull(*s); } catch (...) { problems.push_back(std::string(key) + ": not an integer"); }
        }
    };
    auto as_float = [&](const char* key, float& out) {
        double d = out;
        as_double(key, d);
        out = static_cast<float>(d);
    };

    if (auto* s = take("dataset_root")) cfg.dataset_root = *s;
    else problems.push_back("dataset_root: required");
    if (auto* s = take("architecture")) {
        try { cfg.architecture = architecture_from_name(*s); }
        catch (const ConfigError& e) { problems.push_back(e.what()); }
    } else {
        problems.push_back("architecture: required (baseline | vgg19_backbone)");
    }
    if (auto* s = take("weights_path")) cfg.weights_path = *s;
    if (auto* s = take("output_dir")) cfg.output_dir = *s;
    else problems.push_back("output_dir: required");
    as_double("ratio_train", cfg.ratio_train);
    as_double("ratio_val", cfg.ratio_val);
    as_double("ratio_test", cfg.ratio_test);
    as_u64("split_seed", cfg.split_seed);
    as_int("epochs", cfg.train.epochs);
    as_int("batch_size", cfg.train.batch_size);
    as_float("learning_rate", cfg.train.adam.learning_rate);
    as_float("adam_beta1", cfg.train.adam.beta1);
    as_float("adam_beta2", cfg.train.adam.beta2);
    as_float("adam_eps", cfg.train.adam.eps);
    as_u64("seed", cfg.train.seed);
    as_float("dropout_rate", cfg.train.dropout_rate);
    as_double("threshold", cfg.threshold);
    if (auto* s = take("aggregation")) {
        if (*s != "micro" && *s != "macro") problems.push_back("aggregation: must be micro or macro");
        else cfg.aggregation = *s;
    }
    cfg.train.threshold = cfg.threshold;

    if (cfg.architecture == Architecture::vgg19_backbone && cfg.weights_path.empty())
        problems.push_back("weights_path: required for vgg19_backbone");
    if (cfg.architecture == Architecture::baseline && !cfg.weights_path.empty())
        problems.push_back("weights_path: must not be set for baseline");
    if (cfg.train.epochs < 1) problems.push_back("epochs: must be >= 1");
    if (cfg.train.batch_size < 1) problems.push_back("batch_size: must be >= 1");
    if (cfg.train.adam.learning_rate <= 0) problems.push_back("learning_rate: must be > 0");
    if (cfg.threshold <= 0 || cfg.threshold >= 1) problems.push_back("threshold: must be in (0,1)");
    if (cfg.train.dropout_rate < 0 || cfg.train.dropout_rate >= 1)
        problems.push_back("dropout_rate: must be in [0,1)");

    if (!problems.empty()) {
        std::string msg = "invalid config '" + path.string() + "':";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

} // namespace dentseg
