#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dentseg/tensor.hpp"

namespace dentseg {

/// 2x2 stride-2 max pooling. Records the flat offset of each winning input
/// element so backward can route gradients.
inline Tensor4 maxpool2x2_forward(const Tensor4& x, std::vector<std::size_t>& argmax) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw OddSpatialDim("maxpool2x2 requires even H and W, got " + x.shape_str());
    Tensor4 out(x.n, x.c, x.h / 2, x.w / 2);
    argmax.resize(out.size());
    std::size_t oi = 0;
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            const float* xp = x.plane(in, ic);
            const std::size_t base = x.index(in, ic, 0, 0);
            for (int y = 0; y < out.h; ++y) {
                for (int xx = 0; xx < out.w; ++xx, ++oi) {
                    std::size_t best = static_cast<std::size_t>(2 * y) * x.w + 2 * xx;
                    float bv = xp[best];
                    const std::size_t cand[3] = {best + 1, best + x.w, best + x.w + 1};
                    for (std::size_t c : cand) {
                        if (xp[c] > bv) { bv = xp[c]; best = c; }
                    }
                    out.data[oi] = bv;
                    argmax[oi] = base + best;
                }
            }
        }
    }
    return out;
}

inline Tensor4 maxpool2x2_backward(const Tensor4& x, const Tensor4& upstream,
                                   const std::vector<std::size_t>& argmax) {
    Tensor4 dx(x.n, x.c, x.h, x.w);
    for (std::size_t i = 0; i < upstream.size(); ++i) dx.data[argmax[i]] += upstream.data[i];
    return dx;
}

/// Nearest-neighbor 2x upsampling: each pixel becomes a constant 2x2 block.
inline Tensor4 upsample_nearest2x_forward(const Tensor4& x) {
    Tensor4 out(x.n, x.c, 2 * x.h, 2 * x.w);
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            const float* xp = x.plane(in, ic);
            float* op = out.plane(in, ic);
            for (int y = 0; y < x.h; ++y) {
                for (int xx = 0; xx < x.w; ++xx) {
                    const float v = xp[y * x.w + xx];
                    float* o = op + (2 * y) * out.w + 2 * xx;
                    o[0] = v;
                    o[1] = v;
                    o[out.w] = v;
                    o[out.w + 1] = v;
                }
            }
        }
    }
    return out;
}

inline Tensor4 upsample_nearest2x_backward(const Tensor4& upstream) {
    Tensor4 dx(upstream.n, upstream.c, upstream.h / 2, upstream.w / 2);
    for (int in = 0; in < upstream.n; ++in) {
        for (int ic = 0; ic < upstream.c; ++ic) {
            const float* up = upstream.plane(in, ic);
            float* dxp = dx.plane(in, ic);
            for (int y = 0; y < dx.h; ++y) {
                for (int xx = 0; xx < dx.w; ++xx) {
                    const float* u = up + (2 * y) * upstream.w + 2 * xx;
                    dxp[y * dx.w + xx] = u[0] + u[1] + u[upstream.w] + u[upstream.w + 1];
                }
            }
        }
    }
    return dx;
}

inline Tensor4 relu_forward(const Tensor4& x) {
    Tensor4 out = x;
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    return out;
}

inline Tensor4 relu_backward(const Tensor4& x, const Tensor4& upstream) {
    Tensor4 dx = upstream;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x.data[i] <= 0.0f) dx.data[i] = 0.0f;
    return dx;
}

/// Numerically stable logistic. The exact value lies strictly inside (0,1);
/// saturated inputs can round to an endpoint in float32, which the loss-side
/// probability clamp absorbs.
inline float sigmoid_scalar(float v) {
    if (v >= 0.0f) {
        const float e = std::exp(-v);
        return 1.0f / (1.0f + e);
    }
    const float e = std::exp(v);
    return e / (1.0f + e);
}

inline Tensor4 sigmoid_forward(const Tensor4& x) {
    Tensor4 out = x;
    for (float& v : out.data) v = sigmoid_scalar(v);
    return out;
}

inline Tensor4 sigmoid_backward(const Tensor4& y, const Tensor4& upstream) {
    Tensor4 dx = upstream;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (1.0f - y.data[i]);
    return dx;
}

/// Channel concatenation, a's channels first.
inline Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw ShapeMismatch("concat: " + a.shape_str() + " vs " + b.shape_str());
    Tensor4 out(a.n, a.c + b.c, a.h, a.w);
    const std::size_t hw = static_cast<std::size_t>(a.h) * a.w;
    for (int in = 0; in < a.n; ++in) {
        std::copy(a.plane(in, 0), a.plane(in, 0) + static_cast<std::size_t>(a.c) * hw,
                  out.plane(in, 0));
        std::copy(b.plane(in, 0), b.plane(in, 0) + static_cast<std::size_t>(b.c) * hw,
                  out.plane(in, a.c));
    }
    return out;
}

inline void concat_channels_backward(const Tensor4& upstream, int a_channels,
                                     Tensor4& da, Tensor4& db) {
    da = Tensor4(upstream.n, a_channels, upstream.h, upstream.w);
    db = Tensor4(upstream.n, upstream.c - a_channels, upstream.h, upstream.w);
    const std::size_t hw = static_cast<std::size_t>(upstream.h) * upstream.w;
    for (int in = 0; in < upstream.n; ++in) {
        std::copy(upstream.plane(in, 0), upstream.plane(in, 0) + static_cast<std::size_t>(da.c) * hw,
                  da.plane(in, 0));
        std::copy(upstream.plane(in, da.c),
                  upstream.plane(in, da.c) + static_cast<std::size_t>(db.c) * hw, db.plane(in, 0));
    }
}

/// Inverted dropout. Train mode zeros each element with probability `rate`
/// and scales survivors by 1/(1-rate); infer mode is the identity. The
/// returned mask holds 0 or the survivor scale and drives backward.
inline Tensor4 dropout_forward(const Tensor4& x, float rate, bool train, Rng& rng, Tensor4& mask) {
    if (rate < 0.0f || rate >= 1.0f)
        throw BadRate("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (!train || rate == 0.0f) {
        mask = Tensor4();
        return x;
    }
    const float scale = 1.0f / (1.0f - rate);
    mask = Tensor4(x.n, x.c, x.h, x.w);
    Tensor4 out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float m = rng.uniform() < rate ? 0.0f : scale;
        mask.data[i] = m;
        out.data[i] *= m;
    }
    return out;
}

inline Tensor4 dropout_backward(const Tensor4& upstream, const Tensor4& mask) {
    if (mask.empty()) return upstream;
    Tensor4 dx = upstream;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask.data[i];
    return dx;
}

} // namespace dentseg
