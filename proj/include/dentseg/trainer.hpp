#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dentseg/adam.hpp"
#include "dentseg/dataset.hpp"
#include "dentseg/eval.hpp"
#include "dentseg/loss.hpp"
#include "dentseg/model.hpp"
#include "dentseg/weights.hpp"

namespace dentseg {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 4;
    AdamConfig adam; // learning_rate default 1e-4
    std::uint64_t seed = 42;
    double threshold = 0.5;
    float dropout_rate = 0.3f;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (adam.learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
        if (adam.beta1 < 0 || adam.beta1 >= 1 || adam.beta2 < 0 || adam.beta2 >= 1)
            throw ConfigError("adam betas must lie in [0,1)");
    }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0, val_dice = 0;
};

struct TrainingLog {
    std::vector<EpochRecord> records;

    std::string to_csv() const {
        std::ostringstream os;
        os << "epoch,train_loss,train_acc,val_loss,val_acc,val_dice\n";
        os << std::fixed << std::setprecision(6);
        for (const auto& r : records)
            os << r.epoch << "," << r.train_loss << "," << r.train_acc << "," << r.val_loss << ","
               << r.val_acc << "," << r.val_dice << "\n";
        return os.str();
    }

    static TrainingLog from_csv(std::istream& in) {
        TrainingLog log;
        std::string line;
        if (!std::getline(in, line) || line != "epoch,train_loss,train_acc,val_loss,val_acc,val_dice")
            throw SchemaError("training log header mismatch");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            EpochRecord r;
            char comma;
            std::istringstream ls(line);
            if (!(ls >> r.epoch >> comma >> r.train_loss >> comma >> r.train_acc >> comma >>
                  r.val_loss >> comma >> r.val_acc >> comma >> r.val_dice))
                throw SchemaError("malformed training log row: " + line);
            log.records.push_back(r);
        }
        if (log.records.empty()) throw SchemaError("training log has no rows");
        return log;
    }
};

// --- checkpointing ---------------------------------------------------------

namespace detail {

/// A UTF-8 string smuggled through the float32 payload: zero-padded to a
/// multiple of 4 bytes, shape = [nbytes/4].
inline std::vector<float> string_to_floats(const std::string& s) {
    std::string padded = s;
    while (padded.size() % 4 != 0) padded.push_back('\0');
    std::vector<float> out(padded.size() / 4);
    std::memcpy(out.data(), padded.data(), padded.size());
    return out;
}

inline std::string floats_to_string(const std::vector<float>& v) {
    std::string s(reinterpret_cast<const char*>(v.data()), v.size() * 4);
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
}

} // namespace detail

inline void save_checkpoint(ModelGraph& model, const AdamState& state,
                            const std::filesystem::path& path, const nlohmann::json& extra_meta = {}) {
    WeightArchive ar;
    nlohmann::json meta{{"architecture", architecture_name(model.architecture)},
                        {"adam_t", state.t}};
    for (auto& [k, v] : extra_meta.items()) meta[k] = v;
    ar.put("meta", {static_cast<int>(detail::string_to_floats(meta.dump()).size())},
           detail::string_to_floats(meta.dump()));
    for (auto& p : model.parameters()) ar.put("param." + p.name, p.shape, *p.value);
    for (const auto& [name, m] : state.m)
        ar.put("adam.m." + name, {static_cast<int>(m.size())}, m);
    for (const auto& [name, v] : state.v)
        ar.put("adam.v." + name, {static_cast<int>(v.size())}, v);
    ar.save(path);
}

struct Checkpoint {
    ModelGraph model;
    AdamState state;
    nlohmann::json meta;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    WeightArchive ar = WeightArchive::load(path);
    if (!ar.has("meta")) throw CorruptArchive("checkpoint has no meta entry");
    Checkpoint ck;
    ck.meta = nlohmann::json::parse(detail::floats_to_string(ar.get("meta").values));
    const Architecture arch = architecture_from_name(ck.meta.at("architecture").get<std::string>());
    const float dropout = ck.meta.value("dropout_rate", 0.3f);
    ck.model = arch == Architecture::baseline ? build_baseline() : build_vgg19(dropout, nullptr);
    for (auto& p : ck.model.parameters()) {
        const auto& e = ar.get("param." + p.name);
        if (e.shape != p.shape)
            throw WeightShapeMismatch("checkpoint entry param." + p.name);
        *p.value = e.values;
        if (ar.has("adam.m." + p.name)) {
            ck.state.m[p.name] = ar.get("adam.m." + p.name).values;
            ck.state.v[p.name] = ar.get("adam.v." + p.name).values;
        }
    }
    ck.state.t = ck.meta.at("adam_t").get<std::uint64_t>();
    return ck;
}

// --- training loop ----------------------------------------------------------

inline Tensor4 stack_images(const std::vector<PreprocessedSample>& samples,
                            const std::vector<std::size_t>& idx, bool masks) {
    const Tensor4& first = masks ? samples[idx[0]].mask : samples[idx[0]].image;
    Tensor4 out(static_cast<int>(idx.size()), first.c, first.h, first.w);
    const std::size_t per = first.size();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const Tensor4& t = masks ? samples[idx[i]].mask : samples[idx[i]].image;
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + i * per);
    }
    return out;
}

struct TrainResult {
    TrainingLog log;
    double best_val_dice = -1.0;
    int best_epoch = -1;
};

/// The full recipe: per epoch, shuffle the train set with an epoch-seeded
/// generator, iterate batches (last partial batch kept), forward -> BCE ->
/// backward -> Adam; then evaluate the validation split in infer mode and
/// checkpoint on val-Dice improvement.
inline TrainResult train(ModelGraph& model, const std::vector<PreprocessedSample>& train_set,
                         const std::vector<PreprocessedSample>& val_set, const TrainConfig& cfg,
                         const std::filesystem::path& checkpoint_path,
                         const nlohmann::json& checkpoint_meta = {}) {
    cfg.validate();
    if (train_set.empty()) throw EmptyDataset("train split is empty");
    AdamState state;
    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng order_rng(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(epoch + 1));
        Rng drop_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        order_rng.shuffle(order);

        model.train_mode = true;
        double loss_sum = 0, acc_sum = 0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), b + cfg.batch_size);
            std::vector<std::size_t> idx(order.begin() + b, order.begin() + end);
            const Tensor4 x = stack_images(train_set, idx, false);
            const Tensor4 y = stack_images(train_set, idx, true);
            const Tensor4 pred = model.forward(x, &drop_rng);
            Tensor4 d_pred;
            const double loss = bce_loss(pred, y, &d_pred);
            if (!std::isfinite(loss))
                throw NonFiniteLoss("epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(b / cfg.batch_size + 1));
            model.zero_grads();
            model.backward(d_pred);
            adam_step(model, state, cfg.adam);
            loss_sum += loss * static_cast<double>(idx.size());
            acc_sum += pixel_accuracy(pred, y, cfg.threshold) * static_cast<double>(idx.size());
            seen += idx.size();
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = loss_sum / static_cast<double>(seen);
        rec.train_acc = acc_sum / static_cast<double>(seen);

        if (!val_set.empty()) {
            model.train_mode = false;
            double vloss = 0, vacc = 0;
            ConfusionCounts vc;
            for (const auto& s : val_set) {
                const Tensor4 pred = model.forward(s.image);
                vloss += bce_loss(pred, s.mask);
                vacc += pixel_accuracy(pred, s.mask, cfg.threshold);
                vc += confusion_counts(pred, s.mask, cfg.threshold);
            }
            rec.val_loss = vloss / static_cast<double>(val_set.size());
            rec.val_acc = vacc / static_cast<double>(val_set.size());
            rec.val_dice = metrics_from_counts(vc).dice;
        }
        result.log.records.push_back(rec);

        if (val_set.empty() || rec.val_dice > result.best_val_dice) {
            result.best_val_dice = rec.val_dice;
            result.best_epoch = rec.epoch;
            if (!checkpoint_path.empty()) {
                nlohmann::json meta = checkpoint_meta;
                meta["best_val_dice"] = rec.val_dice;
                meta["best_epoch"] = rec.epoch;
                meta["dropout_rate"] = cfg.dropout_rate;
                save_checkpoint(model, state, checkpoint_path, meta);
            }
        }
    }
    return result;
}

} // namespace dentseg
