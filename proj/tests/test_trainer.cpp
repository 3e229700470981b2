#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "dentseg/trainer.hpp"
#include "oracles.hpp"

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

/// Small synthetic sample: smooth image, centered square mask.
PreprocessedSample make_sample(int size, std::uint64_t seed, const std::string& id) {
    PreprocessedSample s;
    s.sample_id = id;
    s.image = Tensor4(1, 3, size, size);
    Rng rng(seed);
    for (auto& v : s.image.data) v = rng.uniform();
    s.mask = Tensor4(1, 1, size, size);
    const int lo = size / 4, hi = 3 * size / 4;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            s.mask.at(0, 0, y, x) = (y >= lo && y < hi && x >= lo && x < hi) ? 1.0f : 0.0f;
    return s;
}

} // namespace

TEST_CASE("bce_loss reference values") {
    Tensor4 target(1, 1, 2, 2);
    target.data = {1, 0, 1, 0};

    Tensor4 perfect = target; // clamp keeps log() finite at the endpoints
    CHECK(bce_loss(perfect, target) <= 1e-6);

    Tensor4 half(1, 1, 2, 2);
    half.fill(0.5f);
    CHECK(bce_loss(half, target) == Catch::Approx(std::log(2.0)).epsilon(1e-9));

    // worst case is bounded by the clamp, not infinite
    Tensor4 wrong(1, 1, 2, 2);
    wrong.data = {0, 1, 0, 1};
    CHECK(std::isfinite(bce_loss(wrong, target)));
    // ~ -log(1e-7) up to fp32 rounding of the upper clamp bound
    CHECK(bce_loss(wrong, target) == Catch::Approx(-std::log(1e-7)).margin(0.1));
}

TEST_CASE("bce_loss gradient matches finite differences") {
    Rng rng(11);
    Tensor4 pred(2, 1, 3, 3), target(2, 1, 3, 3);
    for (auto& v : pred.data) v = 0.05f + 0.9f * rng.uniform();
    for (auto& v : target.data) v = rng.uniform() < 0.5f ? 0.0f : 1.0f;
    Tensor4 d_pred;
    bce_loss(pred, target, &d_pred);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const float keep = pred.data[i];
        const float h = 1e-4f;
        pred.data[i] = keep + h;
        const double up = bce_loss(pred, target);
        pred.data[i] = keep - h;
        const double dn = bce_loss(pred, target);
        pred.data[i] = keep;
        CHECK(d_pred.data[i] == Catch::Approx((up - dn) / (2.0 * h)).epsilon(1e-3));
    }
}

TEST_CASE("bce_loss gradient is zero where the clamp is active") {
    Tensor4 pred(1, 1, 1, 2), target(1, 1, 1, 2);
    pred.data = {0.0f, 1.0f};
    target.data = {1.0f, 0.0f};
    Tensor4 d_pred;
    bce_loss(pred, target, &d_pred);
    CHECK(d_pred.data[0] == 0.0f);
    CHECK(d_pred.data[1] == 0.0f);
}

TEST_CASE("pixel_accuracy counts thresholded agreement") {
    Tensor4 pred(1, 1, 2, 2), target(1, 1, 2, 2);
    pred.data = {0.9f, 0.4f, 0.6f, 0.1f};
    target.data = {1, 1, 0, 0};
    CHECK(pixel_accuracy(pred, target, 0.5) == Catch::Approx(0.5));
    CHECK(pixel_accuracy(target, target, 0.5) == 1.0);
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
    std::vector<float> p = {1.0f, -2.0f, 3.5f};
    std::vector<float> g(3, 0.0f), m, v;
    const std::vector<float> before = p;
    AdamConfig cfg;
    for (std::uint64_t t = 1; t <= 5; ++t) adam_step_array(p, g, m, v, t, cfg);
    CHECK(p == before);
}

TEST_CASE("adam: first-step magnitude is lr to within eps") {
    // with m,v fresh the bias correction cancels exactly, so the first update
    // is -lr * g / (|g| + eps)
    AdamConfig cfg;
    for (float g0 : {1.0f, -1.0f, 0.5f, -123.0f}) {
        std::vector<float> p = {0.0f}, g = {g0}, m, v;
        adam_step_array(p, g, m, v, 1, cfg);
        const float expect = -cfg.learning_rate * g0 / (std::abs(g0) + cfg.eps);
        CHECK(p[0] == Catch::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("adam: multi-step trajectory matches a transcribed reference") {
    AdamConfig cfg;
    cfg.learning_rate = 0.1f;
    std::vector<float> p = {1.0f}, m, v;
    // same recurrence written out scalar-by-scalar in float arithmetic
    float rp = 1.0f, rm = 0.0f, rv = 0.0f;
    Rng rng(3);
    for (std::uint64_t t = 1; t <= 20; ++t) {
        const float g0 = rng.normal();
        std::vector<float> g = {g0};
        adam_step_array(p, g, m, v, t, cfg);
        rm = cfg.beta1 * rm + (1.0f - cfg.beta1) * g0;
        rv = cfg.beta2 * rv + (1.0f - cfg.beta2) * g0 * g0;
        const float mhat = rm / (1.0f - std::pow(cfg.beta1, static_cast<float>(t)));
        const float vhat = rv / (1.0f - std::pow(cfg.beta2, static_cast<float>(t)));
        rp -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
        REQUIRE(p[0] == rp);
        REQUIRE(m[0] == rm);
        REQUIRE(v[0] == rv);
    }
}

TEST_CASE("adam drives a quadratic toward its minimum") {
    // f(p) = (p - 3)^2, grad = 2(p - 3)
    AdamConfig cfg;
    cfg.learning_rate = 0.05f;
    std::vector<float> p = {-4.0f}, m, v;
    for (std::uint64_t t = 1; t <= 2000; ++t) {
        std::vector<float> g = {2.0f * (p[0] - 3.0f)};
        adam_step_array(p, g, m, v, t, cfg);
    }
    CHECK(p[0] == Catch::Approx(3.0f).margin(0.05));
}

TEST_CASE("training log CSV round-trip and schema checks") {
    TrainingLog log;
    log.records.push_back(EpochRecord{1, 0.693147, 0.5, 0.7, 0.51, 0.25});
    log.records.push_back(EpochRecord{2, 0.5, 0.75, 0.6, 0.6, 0.4});
    const std::string csv = log.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) == "epoch,train_loss,train_acc,val_loss,val_acc,val_dice");
    std::istringstream in(csv);
    TrainingLog rt = TrainingLog::from_csv(in);
    REQUIRE(rt.records.size() == 2);
    CHECK(rt.records[0].epoch == 1);
    CHECK(rt.records[0].train_loss == Catch::Approx(0.693147));
    CHECK(rt.records[1].val_dice == Catch::Approx(0.4));

    std::istringstream bad_header("nope\n1,2,3,4,5,6\n");
    CHECK_THROWS_AS(TrainingLog::from_csv(bad_header), SchemaError);
    std::istringstream empty("epoch,train_loss,train_acc,val_loss,val_acc,val_dice\n");
    CHECK_THROWS_AS(TrainingLog::from_csv(empty), SchemaError);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.adam.learning_rate = 0.0f;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.adam.beta1 = 1.0f;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("checkpoint round-trip restores weights and optimizer state exactly") {
    TempDir tmp("ckpt");
    ModelGraph model = build_baseline(5);

    // take a couple of real optimizer steps so the Adam buffers are nonzero
    std::vector<PreprocessedSample> train_set = {make_sample(16, 1, "a"), make_sample(16, 2, "b")};
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    TrainResult r = train(model, train_set, {}, cfg, "");
    REQUIRE(r.log.records.size() == 1);

    AdamState state;
    state.t = 1;
    for (auto& p : model.parameters())
        if (p.trainable) {
            state.m[p.name].assign(p.value->size(), 0.25f);
            state.v[p.name].assign(p.value->size(), 0.5f);
        }
    const fs::path path = tmp.path / "ck.bin";
    save_checkpoint(model, state, path, {{"note", "x"}});

    Checkpoint ck = load_checkpoint(path);
    CHECK(ck.meta.at("note") == "x");
    CHECK(ck.state.t == 1);
    auto orig = model.parameters();
    auto back = ck.model.parameters();
    REQUIRE(orig.size() == back.size());
    for (std::size_t i = 0; i < orig.size(); ++i) {
        REQUIRE(orig[i].name == back[i].name);
        REQUIRE(*orig[i].value == *back[i].value); // bit-identical
    }
    for (auto& p : model.parameters())
        if (p.trainable) {
            REQUIRE(ck.state.m.at(p.name) == state.m.at(p.name));
            REQUIRE(ck.state.v.at(p.name) == state.v.at(p.name));
        }

    // restored model produces bit-identical inference output
    Tensor4 x(1, 3, 16, 16);
    Rng rng(9);
    for (auto& v : x.data) v = rng.uniform();
    model.train_mode = false;
    ck.model.train_mode = false;
    CHECK(model.forward(x).data == ck.model.forward(x).data);

    CHECK_THROWS_AS(load_checkpoint(tmp.path / "absent.bin"), CorruptArchive);
}

TEST_CASE("optimizer step count follows the batch arithmetic") {
    std::vector<PreprocessedSample> train_set;
    for (int i = 0; i < 10; ++i) train_set.push_back(make_sample(16, 100 + i, "s" + std::to_string(i)));
    ModelGraph model = build_baseline(7);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4; // 10 samples -> batches of 4,4,2 -> 3 steps per epoch
    TempDir tmp("steps");
    const fs::path path = tmp.path / "ck.bin";
    train(model, train_set, {}, cfg, path);
    Checkpoint ck = load_checkpoint(path);
    CHECK(ck.state.t == 6);
}

TEST_CASE("training run is deterministic and logs every epoch") {
    std::vector<PreprocessedSample> train_set = {make_sample(16, 1, "a"), make_sample(16, 2, "b"),
                                                 make_sample(16, 3, "c")};
    std::vector<PreprocessedSample> val_set = {make_sample(16, 4, "d")};
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.seed = 42;

    ModelGraph m1 = build_baseline(42);
    ModelGraph m2 = build_baseline(42);
    TrainResult r1 = train(m1, train_set, val_set, cfg, "");
    TrainResult r2 = train(m2, train_set, val_set, cfg, "");
    CHECK(r1.log.to_csv() == r2.log.to_csv());
    REQUIRE(r1.log.records.size() == 3);
    for (int e = 0; e < 3; ++e) CHECK(r1.log.records[e].epoch == e + 1);
    CHECK(r1.best_epoch >= 1);
    CHECK(r1.best_val_dice == Catch::Approx(r1.log.records[r1.best_epoch - 1].val_dice));
    for (const auto& rec : r1.log.records) {
        CHECK(std::isfinite(rec.train_loss));
        CHECK(rec.train_acc >= 0.0);
        CHECK(rec.train_acc <= 1.0);
    }

    auto p1 = m1.parameters();
    auto p2 = m2.parameters();
    for (std::size_t i = 0; i < p1.size(); ++i) REQUIRE(*p1[i].value == *p2[i].value);
}

TEST_CASE("loss decreases when overfitting a single small sample") {
    std::vector<PreprocessedSample> train_set = {make_sample(16, 21, "a")};
    ModelGraph model = build_baseline(1);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.batch_size = 1;
    cfg.adam.learning_rate = 1e-3f;
    TrainResult r = train(model, train_set, {}, cfg, "");
    CHECK(r.log.records.back().train_loss < r.log.records.front().train_loss);
}
