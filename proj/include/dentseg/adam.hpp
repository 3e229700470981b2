#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dentseg/errors.hpp"
#include "dentseg/model.hpp"

namespace dentseg {

struct AdamConfig {
    float learning_rate = 1e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

/// First/second moment buffers per parameter plus the shared step counter.
struct AdamState {
    std::map<std::string, std::vector<float>> m, v;
    std::uint64_t t = 0;
};

/// One Adam update over a single named array.
inline void adam_step_array(std::vector<float>& param, const std::vector<float>& grad,
                            std::vector<float>& m, std::vector<float>& v, std::uint64_t t,
                            const AdamConfig& cfg) {
    if (param.size() != grad.size())
        throw ShapeMismatch("adam: param size " + std::to_string(param.size()) + " vs grad " +
                            std::to_string(grad.size()));
    if (m.size() != param.size()) m.assign(param.size(), 0.0f);
    if (v.size() != param.size()) v.assign(param.size(), 0.0f);
    const float b1 = cfg.beta1, b2 = cfg.beta2;
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const float g = grad[i];
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g * g;
        const float mhat = m[i] / bc1;
        const float vhat = v[i] / bc2;
        param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

/// Apply one Adam step to every trainable parameter of the model, using the
/// gradients accumulated by backward(). Increments the step counter once.
inline void adam_step(ModelGraph& model, AdamState& state, const AdamConfig& cfg) {
    ++state.t;
    for (auto& p : model.parameters()) {
        if (!p.trainable) continue;
        adam_step_array(*p.value, *p.grad, state.m[p.name], state.v[p.name], state.t, cfg);
    }
}

} // namespace dentseg
