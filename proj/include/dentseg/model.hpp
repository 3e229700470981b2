#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dentseg/batchnorm.hpp"
#include "dentseg/conv.hpp"
#include "dentseg/layers.hpp"
#include "dentseg/tensor.hpp"
#include "dentseg/weights.hpp"

namespace dentseg {

enum class Architecture { baseline, vgg19_backbone };

inline std::string architecture_name(Architecture a) {
    return a == Architecture::baseline ? "baseline" : "vgg19_backbone";
}

inline Architecture architecture_from_name(const std::string& s) {
    if (s == "baseline") return Architecture::baseline;
    if (s == "vgg19_backbone") return Architecture::vgg19_backbone;
    throw ConfigError("unknown architecture '" + s + "'");
}

enum class LayerKind {
    input, conv, conv_transpose2x, maxpool2x2, upsample_nearest2x,
    batchnorm, relu, sigmoid, concat, dropout
};

struct ConvParam {
    Tensor4 weight;              // conv: (out,in,k,k); transpose: (in,out,2,2)
    std::vector<float> bias;
    Tensor4 dweight;
    std::vector<float> dbias;
};

struct BnParam {
    BatchNormParams p;
    std::vector<float> dgamma, dbeta;
};

/// View onto one named float array of the model (value plus gradient slot).
struct ParamRef {
    std::string name;
    std::vector<int> shape;
    std::vector<float>* value;
    std::vector<float>* grad;   // null for running statistics
    bool trainable;
};

/// Ordered layer list with explicit wiring. Node 0 is the input; every other
/// node names its producer(s) by index, which keeps skip connections and
/// merges explicit without a general autograd graph.
class ModelGraph {
public:
    struct Node {
        LayerKind kind = LayerKind::input;
        int in0 = -1, in1 = -1;
        std::string param;       // conv / batchnorm parameter set
        float dropout_rate = 0.0f;
        bool keep = false;       // retain activation in infer mode (taps, output)
    };

    Architecture architecture = Architecture::baseline;
    bool train_mode = false;

    // --- construction -----------------------------------------------------

    int add_input() {
        nodes_.push_back(Node{LayerKind::input});
        return last();
    }
    int add_conv(const std::string& name, int in, int in_ch, int out_ch, int k, Rng& rng) {
        ConvParam cp;
        cp.weight = Tensor4(out_ch, in_ch, k, k);
        he_normal_init(cp.weight, in_ch * k * k, rng);
        cp.bias.assign(out_ch, 0.0f);
        conv_params_[name] = std::move(cp);
        nodes_.push_back(Node{LayerKind::conv, in, -1, name});
        return last();
    }
    int add_conv_transpose2x(const std::string& name, int in, int in_ch, int out_ch, Rng& rng) {
        ConvParam cp;
        cp.weight = Tensor4(in_ch, out_ch, 2, 2);
        he_normal_init(cp.weight, in_ch * 4, rng);
        cp.bias.assign(out_ch, 0.0f);
        conv_params_[name] = std::move(cp);
        nodes_.push_back(Node{LayerKind::conv_transpose2x, in, -1, name});
        return last();
    }
    int add_batchnorm(const std::string& name, int in, int channels) {
        bn_params_[name] = BnParam{BatchNormParams(channels), {}, {}};
        nodes_.push_back(Node{LayerKind::batchnorm, in, -1, name});
        return last();
    }
    int add_relu(int in) { nodes_.push_back(Node{LayerKind::relu, in}); return last(); }
    int add_sigmoid(int in) { nodes_.push_back(Node{LayerKind::sigmoid, in}); return last(); }
    int add_maxpool(int in) { nodes_.push_back(Node{LayerKind::maxpool2x2, in}); return last(); }
    int add_upsample(int in) { nodes_.push_back(Node{LayerKind::upsample_nearest2x, in}); return last(); }
    int add_concat(int a, int b) { nodes_.push_back(Node{LayerKind::concat, a, b}); return last(); }
    int add_dropout(int in, float rate) {
        Node nd{LayerKind::dropout, in};
        nd.dropout_rate = rate;
        nodes_.push_back(nd);
        return last();
    }
    void set_output(int node) { output_ = node; nodes_[node].keep = true; }
    void set_tap(const std::string& name, int node) {
        taps_[name] = node;
        nodes_[node].keep = true;
    }

    // --- execution --------------------------------------------------------

    /// Run the graph. Train mode retains every activation for backward and
    /// needs an RNG when the graph contains dropout; infer mode frees
    /// intermediates as soon as their consumers have run.
    Tensor4 forward(const Tensor4& x, Rng* rng = nullptr) {
        acts_.assign(nodes_.size(), Tensor4());
        argmax_.assign(nodes_.size(), {});
        bn_cache_.assign(nodes_.size(), BatchNormCache{});
        drop_mask_.assign(nodes_.size(), Tensor4());
        std::vector<int> pending = consumer_counts();
        acts_[0] = x;
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            Node& nd = nodes_[i];
            const Tensor4& a = acts_[nd.in0];
            switch (nd.kind) {
            case LayerKind::conv: {
                ConvParam& cp = conv_params_.at(nd.param);
                acts_[i] = conv2d_forward(a, cp.weight, cp.bias);
                break;
            }
            case LayerKind::conv_transpose2x: {
                ConvParam& cp = conv_params_.at(nd.param);
                acts_[i] = conv_transpose2x_forward(a, cp.weight, cp.bias);
                break;
            }
            case LayerKind::maxpool2x2:
                acts_[i] = maxpool2x2_forward(a, argmax_[i]);
                break;
            case LayerKind::upsample_nearest2x:
                acts_[i] = upsample_nearest2x_forward(a);
                break;
            case LayerKind::batchnorm:
                acts_[i] = batchnorm_forward(a, bn_params_.at(nd.param).p, train_mode,
                                             train_mode ? &bn_cache_[i] : nullptr);
                break;
            case LayerKind::relu:
                acts_[i] = relu_forward(a);
                break;
            case LayerKind::sigmoid:
                acts_[i] = sigmoid_forward(a);
                break;
            case LayerKind::concat:
                acts_[i] = concat_channels(a, acts_[nd.in1]);
                break;
            case LayerKind::dropout: {
                if (train_mode && nd.dropout_rate > 0.0f && rng == nullptr)
                    throw ConfigError("train-mode forward through dropout needs an RNG");
                Rng fallback(0);
                acts_[i] = dropout_forward(a, nd.dropout_rate, train_mode,
                                           rng ? *rng : fallback, drop_mask_[i]);
                break;
            }
            case LayerKind::input:
                break;
            }
            if (!train_mode) {
                release(pending, nd.in0);
                if (nd.in1 >= 0) release(pending, nd.in1);
            }
        }
        return acts_[output_];
    }

    /// Accumulate parameter gradients from d(loss)/d(output). Requires a
    /// preceding train-mode forward.
    void backward(const Tensor4& d_output) {
        std::vector<Tensor4> grads(nodes_.size());
        grads[output_] = d_output;
        for (std::size_t i = nodes_.size(); i-- > 1;) {
            const Node& nd = nodes_[i];
            Tensor4& g = grads[i];
            if (g.empty()) continue;
            switch (nd.kind) {
            case LayerKind::conv: {
                ConvParam& cp = conv_params_.at(nd.param);
                Tensor4 dw, dx;
                std::vector<float> db;
                conv2d_backward(acts_[nd.in0], cp.weight, g, dw, db, dx);
                axpy(cp.dweight.data, dw.data);
                axpy(cp.dbias, db);
                add_grad(grads, nd.in0, std::move(dx));
                break;
            }
            case LayerKind::conv_transpose2x: {
                ConvParam& cp = conv_params_.at(nd.param);
                Tensor4 dw, dx;
                std::vector<float> db;
                conv_transpose2x_backward(acts_[nd.in0], cp.weight, g, dw, db, dx);
                axpy(cp.dweight.data, dw.data);
                axpy(cp.dbias, db);
                add_grad(grads, nd.in0, std::move(dx));
                break;
            }
            case LayerKind::maxpool2x2:
                add_grad(grads, nd.in0, maxpool2x2_backward(acts_[nd.in0], g, argmax_[i]));
                break;
            case LayerKind::upsample_nearest2x:
                add_grad(grads, nd.in0, upsample_nearest2x_backward(g));
                break;
            case LayerKind::batchnorm: {
                BnParam& bp = bn_params_.at(nd.param);
                std::vector<float> dgamma, dbeta;
                Tensor4 dx = batchnorm_backward(acts_[nd.in0], bp.p, bn_cache_[i], g, dgamma, dbeta);
                axpy(bp.dgamma, dgamma);
                axpy(bp.dbeta, dbeta);
                add_grad(grads, nd.in0, std::move(dx));
                break;
            }
            case LayerKind::relu:
                add_grad(grads, nd.in0, relu_backward(acts_[nd.in0], g));
                break;
            case LayerKind::sigmoid:
                add_grad(grads, nd.in0, sigmoid_backward(acts_[i], g));
                break;
            case LayerKind::concat: {
                Tensor4 da, db;
                concat_channels_backward(g, acts_[nd.in0].c, da, db);
                add_grad(grads, nd.in0, std::move(da));
                add_grad(grads, nd.in1, std::move(db));
                break;
            }
            case LayerKind::dropout:
                add_grad(grads, nd.in0, dropout_backward(g, drop_mask_[i]));
                break;
            case LayerKind::input:
                break;
            }
            g = Tensor4(); // free as we go
        }
    }

    void zero_grads() {
        for (auto& [name, cp] : conv_params_) {
            cp.dweight = Tensor4(cp.weight.n, cp.weight.c, cp.weight.h, cp.weight.w);
            cp.dbias.assign(cp.bias.size(), 0.0f);
        }
        for (auto& [name, bp] : bn_params_) {
            bp.dgamma.assign(bp.p.gamma.size(), 0.0f);
            bp.dbeta.assign(bp.p.beta.size(), 0.0f);
        }
    }

    /// Activation of a named tap from the most recent forward.
    const Tensor4& tap(const std::string& name) const { return acts_.at(taps_.at(name)); }
    const std::map<std::string, int>& taps() const { return taps_; }

    /// All named parameter arrays in deterministic (name-sorted) order.
    /// Running statistics appear with trainable=false and no gradient.
    std::vector<ParamRef> parameters() {
        std::vector<ParamRef> out;
        for (auto& [name, cp] : conv_params_) {
            std::vector<int> wshape = {cp.weight.n, cp.weight.c, cp.weight.h, cp.weight.w};
            out.push_back({name + ".weight", wshape, &cp.weight.data, &cp.dweight.data, true});
            out.push_back({name + ".bias", {static_cast<int>(cp.bias.size())}, &cp.bias, &cp.dbias, true});
        }
        for (auto& [name, bp] : bn_params_) {
            const int c = bp.p.channels();
            out.push_back({name + ".gamma", {c}, &bp.p.gamma, &bp.dgamma, true});
            out.push_back({name + ".beta", {c}, &bp.p.beta, &bp.dbeta, true});
            out.push_back({name + ".running_mean", {c}, &bp.p.running_mean, nullptr, false});
            out.push_back({name + ".running_var", {c}, &bp.p.running_var, nullptr, false});
        }
        return out;
    }

    std::size_t trainable_parameter_count() {
        std::size_t total = 0;
        for (const auto& p : parameters())
            if (p.trainable) total += p.value->size();
        return total;
    }

    ConvParam& conv_param(const std::string& name) { return conv_params_.at(name); }
    BnParam& bn_param(const std::string& name) { return bn_params_.at(name); }

private:
    int last() const { return static_cast<int>(nodes_.size()) - 1; }

    static void he_normal_init(Tensor4& w, int fan_in, Rng& rng) {
        const float s = std::sqrt(2.0f / static_cast<float>(fan_in));
        for (float& v : w.data) v = s * rng.normal();
    }
    static void axpy(std::vector<float>& acc, const std::vector<float>& d) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
    }
    static void add_grad(std::vector<Tensor4>& grads, int node, Tensor4&& g) {
        if (grads[node].empty()) {
            grads[node] = std::move(g);
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) grads[node].data[i] += g.data[i];
        }
    }
    std::vector<int> consumer_counts() const {
        std::vector<int> pending(nodes_.size(), 0);
        for (const auto& nd : nodes_) {
            if (nd.in0 >= 0) ++pending[nd.in0];
            if (nd.in1 >= 0) ++pending[nd.in1];
        }
        return pending;
    }
    void release(std::vector<int>& pending, int node) {
        if (--pending[node] == 0 && !nodes_[node].keep && node != 0) acts_[node] = Tensor4();
    }

    std::vector<Node> nodes_;
    int output_ = -1;
    std::map<std::string, int> taps_;
    std::map<std::string, ConvParam> conv_params_;
    std::map<std::string, BnParam> bn_params_;

    // per-forward caches
    std::vector<Tensor4> acts_;
    std::vector<std::vector<std::size_t>> argmax_;
    std::vector<BatchNormCache> bn_cache_;
    std::vector<Tensor4> drop_mask_;
};

// --- the two concrete architectures ---------------------------------------

/// Two-scale encoder-decoder with nearest-neighbor upsampling and a
/// 256-channel bottleneck; sigmoid head for binary masks.
inline ModelGraph build_baseline(std::uint64_t init_seed = 0) {
    Rng rng(init_seed);
    ModelGraph g;
    g.architecture = Architecture::baseline;
    int x = g.add_input();

    auto conv_bn_relu = [&](const std::string& name, int in, int ic, int oc) {
        int c = g.add_conv(name + "_conv", in, ic, oc, 3, rng);
        int b = g.add_batchnorm(name + "_bn", c, oc);
        return g.add_relu(b);
    };

    int e1 = conv_bn_relu("enc1a", x, 3, 64);
    int s1 = conv_bn_relu("enc1b", e1, 64, 64);
    g.set_tap("s1", s1);
    int p1 = g.add_maxpool(s1);

    int e2 = conv_bn_relu("enc2a", p1, 64, 128);
    int s2 = conv_bn_relu("enc2b", e2, 128, 128);
    g.set_tap("s2", s2);
    int p2 = g.add_maxpool(s2);

    int b1 = conv_bn_relu("bot_a", p2, 128, 256);
    int b2 = conv_bn_relu("bot_b", b1, 256, 256);
    g.set_tap("bottleneck", b2);

    int u1 = g.add_upsample(b2);
    int c1 = g.add_concat(u1, s2);                       // 256 + 128 = 384
    int d1 = conv_bn_relu("dec1", c1, 384, 128);

    int u2 = g.add_upsample(d1);
    int c2 = g.add_concat(u2, s1);                       // 128 + 64 = 192
    int d2 = conv_bn_relu("dec2", c2, 192, 64);

    int head = g.add_conv("head", d2, 64, 1, 1, rng);
    g.set_output(g.add_sigmoid(head));
    return g;
}

inline const std::vector<std::pair<std::string, std::pair<int, int>>>& vgg19_conv_layout() {
    // name -> (in_channels, out_channels), in forward order
    static const std::vector<std::pair<std::string, std::pair<int, int>>> layout = {
        {"block1_conv1", {3, 64}},    {"block1_conv2", {64, 64}},
        {"block2_conv1", {64, 128}},  {"block2_conv2", {128, 128}},
        {"block3_conv1", {128, 256}}, {"block3_conv2", {256, 256}},
        {"block3_conv3", {256, 256}}, {"block3_conv4", {256, 256}},
        {"block4_conv1", {256, 512}}, {"block4_conv2", {512, 512}},
        {"block4_conv3", {512, 512}}, {"block4_conv4", {512, 512}},
        {"block5_conv1", {512, 512}}, {"block5_conv2", {512, 512}},
        {"block5_conv3", {512, 512}}, {"block5_conv4", {512, 512}},
    };
    return layout;
}

/// VGG19 conv blocks as the encoder (taps after the last activation of
/// blocks 1-4, bottleneck after block 5) and a four-stage transposed-conv
/// decoder with dropout. Encoder weights come from `weights` when given;
/// all parameters stay trainable.
inline ModelGraph build_vgg19(float dropout_rate, const WeightArchive* weights,
                              std::uint64_t init_seed = 0) {
    Rng rng(init_seed);
    ModelGraph g;
    g.architecture = Architecture::vgg19_backbone;
    int x = g.add_input();

    const auto& layout = vgg19_conv_layout();
    const int block_sizes[5] = {2, 2, 4, 4, 4};
    int cur = x;
    std::size_t li = 0;
    std::vector<int> taps;
    for (int blk = 0; blk < 5; ++blk) {
        for (int j = 0; j < block_sizes[blk]; ++j, ++li) {
            const auto& [name, ch] = layout[li];
            cur = g.add_conv(name, cur, ch.first, ch.second, 3, rng);
            cur = g.add_relu(cur);
        }
        taps.push_back(cur);
        if (blk < 4) cur = g.add_maxpool(cur);
    }
    g.set_tap("s1", taps[0]);
    g.set_tap("s2", taps[1]);
    g.set_tap("s3", taps[2]);
    g.set_tap("s4", taps[3]);
    g.set_tap("bottleneck", taps[4]);

    if (weights) {
        for (const auto& [name, ch] : layout) {
            const auto& we = weights->get(name + ".weight");
            const auto& be = weights->get(name + ".bias");
            ConvParam& cp = g.conv_param(name);
            const std::vector<int> expect = {ch.second, ch.first, 3, 3};
            if (we.shape != expect)
                throw WeightShapeMismatch(name + ".weight: expected (" + std::to_string(ch.second) +
                                          "," + std::to_string(ch.first) + ",3,3)");
            if (be.shape != std::vector<int>{ch.second})
                throw WeightShapeMismatch(name + ".bias: expected (" + std::to_string(ch.second) + ")");
            cp.weight.data = we.values;
            cp.bias = be.values;
        }
    }

    const int dec_out[4] = {512, 256, 128, 64};
    const char* skips[4] = {"s4", "s3", "s2", "s1"};
    const int skip_ch[4] = {512, 256, 128, 64};
    int in_ch = 512;
    for (int i = 0; i < 4; ++i) {
        const std::string name = "dec" + std::to_string(i + 1);
        int up = g.add_conv_transpose2x(name + "_convt", cur, in_ch, dec_out[i], rng);
        int cc = g.add_concat(up, g.taps().at(skips[i]));
        int cv = g.add_conv(name + "_conv", cc, dec_out[i] + skip_ch[i], dec_out[i], 3, rng);
        int bn = g.add_batchnorm(name + "_bn", cv, dec_out[i]);
        int rl = g.add_relu(bn);
        cur = g.add_dropout(rl, dropout_rate);
        in_ch = dec_out[i];
    }

    int head = g.add_conv("head", cur, 64, 1, 1, rng);
    g.set_output(g.add_sigmoid(head));
    return g;
}

} // namespace dentseg
