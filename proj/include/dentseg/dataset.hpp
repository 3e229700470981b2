#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dentseg/errors.hpp"
#include "dentseg/image.hpp"
#include "dentseg/tensor.hpp"

namespace dentseg {

namespace fs = std::filesystem;

enum class SourceSubset { train_folder, test_folder, new_dataset };

inline std::string subset_name(SourceSubset s) {
    switch (s) {
    case SourceSubset::train_folder: return "train";
    case SourceSubset::test_folder: return "test";
    default: return "new_dataset";
    }
}

struct SamplePair {
    fs::path image_path;
    fs::path mask_path;
    SourceSubset source_subset;
    std::string sample_id; // stem of the image filename
};

struct DatasetIndex {
    std::vector<SamplePair> pairs;
    std::size_t total_count() const { return pairs.size(); }
};

struct PreprocessedSample {
    Tensor4 image; // (1,3,S,S) in [0,1]
    Tensor4 mask;  // (1,1,S,S) in {0,1}
    std::string sample_id;
};

struct SplitAssignment {
    std::vector<std::string> train_ids, val_ids, test_ids;
    std::uint64_t seed = 0;
    double ratios[3] = {0.7, 0.1, 0.2};
};

constexpr int kTargetSize = 256;

/// Pair `images/*.png` with `masks/*.png` by filename stem across the three
/// published subsets. Missing subset directories are skipped; the result is
/// sorted by sample_id so the index is independent of filesystem order.
inline DatasetIndex load_dataset(const fs::path& root) {
    static const std::pair<const char*, SourceSubset> kSubsets[] = {
        {"train", SourceSubset::train_folder},
        {"test", SourceSubset::test_folder},
        {"new_dataset", SourceSubset::new_dataset},
    };
    DatasetIndex index;
    std::set<std::string> seen;
    for (const auto& [dir, subset] : kSubsets) {
        const fs::path images = root / dir / "images";
        const fs::path masks = root / dir / "masks";
        if (!fs::is_directory(images)) continue;
        std::map<std::string, fs::path> mask_by_stem;
        if (fs::is_directory(masks)) {
            for (const auto& e : fs::directory_iterator(masks)) {
                if (e.path().extension() == ".png") mask_by_stem[e.path().stem().string()] = e.path();
            }
        }
        std::vector<fs::path> image_files;
        for (const auto& e : fs::directory_iterator(images)) {
            if (e.path().extension() == ".png") image_files.push_back(e.path());
        }
        std::sort(image_files.begin(), image_files.end());
        for (const auto& p : image_files) {
            const std::string stem = p.stem().string();
            if (!seen.insert(stem).second) throw DuplicateId(stem);
            auto mit = mask_by_stem.find(stem);
            if (mit == mask_by_stem.end()) throw MissingMask(stem);
            index.pairs.push_back(SamplePair{p, mit->second, subset, stem});
        }
    }
    if (index.pairs.empty())
        throw EmptyDataset("no image/mask PNG pairs under '" + root.string() + "'");
    std::sort(index.pairs.begin(), index.pairs.end(),
              [](const SamplePair& a, const SamplePair& b) { return a.sample_id < b.sample_id; });
    return index;
}

/// Decoded PNG -> (1,3,S,S) float tensor in [0,1]: grayscale replicated to
/// three channels, bilinear resize, /255 normalization.
inline Tensor4 preprocess_image(const Image8& raw, int target = kTargetSize) {
    Tensor4 out(1, 3, target, target);
    std::vector<float> plane(static_cast<std::size_t>(raw.h) * raw.w);
    for (int c = 0; c < 3; ++c) {
        const int src_c = raw.channels == 1 ? 0 : c;
        for (int y = 0; y < raw.h; ++y)
            for (int x = 0; x < raw.w; ++x)
                plane[static_cast<std::size_t>(y) * raw.w + x] =
                    raw.at(y, x, src_c) * (1.0f / 255.0f);
        resize_bilinear_plane(plane.data(), raw.h, raw.w, out.plane(0, c), target, target);
    }
    return out;
}

/// Decoded PNG -> (1,1,S,S) binary tensor: nearest-neighbor resize, then
/// threshold at 127 (pixel > 127 -> 1). Multi-channel masks use channel 0.
inline Tensor4 preprocess_mask(const Image8& raw, int target = kTargetSize) {
    Tensor4 out(1, 1, target, target);
    for (int y = 0; y < target; ++y) {
        const int sy = nearest_index(y, raw.h, target);
        for (int x = 0; x < target; ++x) {
            const int sx = nearest_index(x, raw.w, target);
            out.at(0, 0, y, x) = raw.at(sy, sx, 0) > 127 ? 1.0f : 0.0f;
        }
    }
    return out;
}

inline PreprocessedSample preprocess_pair(const SamplePair& pair, int target = kTargetSize) {
    PreprocessedSample s;
    s.sample_id = pair.sample_id;
    s.image = preprocess_image(decode_png(pair.image_path), target);
    s.mask = preprocess_mask(decode_png(pair.mask_path), target);
    return s;
}

/// Seeded shuffle of the sorted id list, then floor(r_train*N) /
/// floor(r_val*N) / remainder sizing.
inline SplitAssignment split_dataset(const DatasetIndex& index, double r_train, double r_val,
                                     double r_test, std::uint64_t seed) {
    if (std::abs(r_train + r_val + r_test - 1.0) > 1e-9)
        throw BadRatios("ratios sum to " + std::to_string(r_train + r_val + r_test));
    if (index.pairs.empty()) throw EmptyDataset("cannot split an empty index");
    std::vector<std::string> ids;
    ids.reserve(index.pairs.size());
    for (const auto& p : index.pairs) ids.push_back(p.sample_id);
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const std::size_t n_train = static_cast<std::size_t>(std::floor(r_train * n));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(r_val * n));
    SplitAssignment split;
    split.seed = seed;
    split.ratios[0] = r_train;
    split.ratios[1] = r_val;
    split.ratios[2] = r_test;
    split.train_ids.assign(ids.begin(), ids.begin() + n_train);
    split.val_ids.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    split.test_ids.assign(ids.begin() + n_train + n_val, ids.end());
    return split;
}

inline nlohmann::json split_to_json(const SplitAssignment& s) {
    return nlohmann::json{{"seed", s.seed},
                          {"ratios", {s.ratios[0], s.ratios[1], s.ratios[2]}},
                          {"train", s.train_ids},
                          {"val", s.val_ids},
                          {"test", s.test_ids}};
}

inline SplitAssignment split_from_json(const nlohmann::json& j) {
    SplitAssignment s;
    try {
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto r = j.at("ratios");
        s.ratios[0] = r.at(0).get<double>();
        s.ratios[1] = r.at(1).get<double>();
        s.ratios[2] = r.at(2).get<double>();
        s.train_ids = j.at("train").get<std::vector<std::string>>();
        s.val_ids = j.at("val").get<std::vector<std::string>>();
        s.test_ids = j.at("test").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("split manifest: ") + e.what());
    }
    return s;
}

inline std::vector<const SamplePair*> select_pairs(const DatasetIndex& index,
                                                   const std::vector<std::string>& ids) {
    std::map<std::string, const SamplePair*> by_id;
    for (const auto& p : index.pairs) by_id[p.sample_id] = &p;
    std::vector<const SamplePair*> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw EmptyDataset("split references unknown sample '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

} // namespace dentseg
