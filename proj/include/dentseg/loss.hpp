#pragma once

#include <cmath>

#include "dentseg/tensor.hpp"

namespace dentseg {

constexpr float kProbClamp = 1e-7f;

/// Mean binary cross-entropy over all pixels with predictions clamped to
/// [1e-7, 1-1e-7]. The gradient is that of the clamped expression, so it is
/// zero wherever the clamp is active.
inline double bce_loss(const Tensor4& pred, const Tensor4& target, Tensor4* d_pred = nullptr) {
    require_same_shape(pred, target, "bce_loss");
    const float lo = kProbClamp, hi = 1.0f - kProbClamp;
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    if (d_pred) *d_pred = Tensor4(pred.n, pred.c, pred.h, pred.w);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const float p_raw = pred.data[i];
        const float p = p_raw < lo ? lo : (p_raw > hi ? hi : p_raw);
        const float y = target.data[i];
        loss -= y * std::log(static_cast<double>(p)) + (1.0f - y) * std::log(1.0 - static_cast<double>(p));
        if (d_pred) {
            const bool clamped = p_raw < lo || p_raw > hi;
            d_pred->data[i] =
                clamped ? 0.0f
                        : static_cast<float>(inv_n * (-(y / p) + (1.0f - y) / (1.0f - p)));
        }
    }
    return loss * inv_n;
}

/// Pixel accuracy of thresholded probabilities, the quantity logged per epoch.
inline double pixel_accuracy(const Tensor4& pred, const Tensor4& target, double threshold = 0.5) {
    require_same_shape(pred, target, "pixel_accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if ((pred.data[i] > threshold) == (target.data[i] > 0.5f)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

} // namespace dentseg
