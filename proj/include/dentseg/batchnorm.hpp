#pragma once

#include <cmath>
#include <vector>

#include "dentseg/tensor.hpp"

namespace dentseg {

/// Per-channel batch normalization parameters and running statistics.
struct BatchNormParams {
    std::vector<float> gamma, beta;        // trainable
    std::vector<float> running_mean, running_var;
    float eps = 1e-5f;
    float momentum = 0.99f;

    explicit BatchNormParams(int channels = 0)
        : gamma(channels, 1.0f), beta(channels, 0.0f),
          running_mean(channels, 0.0f), running_var(channels, 1.0f) {}

    int channels() const { return static_cast<int>(gamma.size()); }
};

/// Cache of per-channel batch statistics from a train-mode forward pass.
struct BatchNormCache {
    std::vector<float> mean, inv_std;
};

/// Train mode normalizes by batch statistics over batch x H x W (biased
/// variance) and updates running stats: running = m*running + (1-m)*batch.
/// Infer mode normalizes by running stats.
inline Tensor4 batchnorm_forward(const Tensor4& x, BatchNormParams& p, bool train,
                                 BatchNormCache* cache = nullptr) {
    if (x.c != p.channels())
        throw ShapeMismatch("batchnorm: " + std::to_string(x.c) + " channels vs " +
                            std::to_string(p.channels()) + " params");
    Tensor4 out(x.n, x.c, x.h, x.w);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    const double m = static_cast<double>(x.n) * hw;
    if (cache) {
        cache->mean.assign(x.c, 0.0f);
        cache->inv_std.assign(x.c, 0.0f);
    }
    for (int ic = 0; ic < x.c; ++ic) {
        float mean, inv_std;
        if (train) {
            double sum = 0.0, sq = 0.0;
            for (int in = 0; in < x.n; ++in) {
                const float* xp = x.plane(in, ic);
                for (std::size_t i = 0; i < hw; ++i) {
                    sum += xp[i];
                    sq += static_cast<double>(xp[i]) * xp[i];
                }
            }
            const double mu = sum / m;
            const double var = sq / m - mu * mu;
            mean = static_cast<float>(mu);
            inv_std = static_cast<float>(1.0 / std::sqrt(var + p.eps));
            p.running_mean[ic] = p.momentum * p.running_mean[ic] + (1.0f - p.momentum) * mean;
            p.running_var[ic] =
                p.momentum * p.running_var[ic] + (1.0f - p.momentum) * static_cast<float>(var);
        } else {
            mean = p.running_mean[ic];
            inv_std = 1.0f / std::sqrt(p.running_var[ic] + p.eps);
        }
        if (cache) {
            cache->mean[ic] = mean;
            cache->inv_std[ic] = inv_std;
        }
        const float g = p.gamma[ic], b = p.beta[ic];
        for (int in = 0; in < x.n; ++in) {
            const float* xp = x.plane(in, ic);
            float* op = out.plane(in, ic);
            for (std::size_t i = 0; i < hw; ++i) op[i] = g * (xp[i] - mean) * inv_std + b;
        }
    }
    return out;
}

/// Train-mode backward through the batch statistics.
inline Tensor4 batchnorm_backward(const Tensor4& x, const BatchNormParams& p,
                                  const BatchNormCache& cache, const Tensor4& upstream,
                                  std::vector<float>& dgamma, std::vector<float>& dbeta) {
    require_same_shape(x, upstream, "batchnorm_backward");
    dgamma.assign(x.c, 0.0f);
    dbeta.assign(x.c, 0.0f);
    Tensor4 dx(x.n, x.c, x.h, x.w);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    const double m = static_cast<double>(x.n) * hw;
    for (int ic = 0; ic < x.c; ++ic) {
        const float mean = cache.mean[ic], inv_std = cache.inv_std[ic];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int in = 0; in < x.n; ++in) {
            const float* xp = x.plane(in, ic);
            const float* up = upstream.plane(in, ic);
            for (std::size_t i = 0; i < hw; ++i) {
                const float xhat = (xp[i] - mean) * inv_std;
                sum_dy += up[i];
                sum_dy_xhat += static_cast<double>(up[i]) * xhat;
            }
        }
        dbeta[ic] = static_cast<float>(sum_dy);
        dgamma[ic] = static_cast<float>(sum_dy_xhat);
        const float g = p.gamma[ic];
        const float k = g * inv_std / static_cast<float>(m);
        for (int in = 0; in < x.n; ++in) {
            const float* xp = x.plane(in, ic);
            const float* up = upstream.plane(in, ic);
            float* dp = dx.plane(in, ic);
            for (std::size_t i = 0; i < hw; ++i) {
                const float xhat = (xp[i] - mean) * inv_std;
                dp[i] = k * (static_cast<float>(m) * up[i] - static_cast<float>(sum_dy) -
                             xhat * static_cast<float>(sum_dy_xhat));
            }
        }
    }
    return dx;
}

} // namespace dentseg
