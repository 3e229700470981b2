#pragma once

#include <cblas.h>

#include <vector>

#include "dentseg/tensor.hpp"

namespace dentseg {

namespace detail {

/// Unpack one sample into a (C*k*k) x (H*W) patch matrix for stride-1
/// same-padded cross-correlation. Out-of-bounds taps contribute zeros.
inline void im2col_same(const float* x, int c, int h, int w, int k, float* col) {
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int ic = 0; ic < c; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* row = col + ((static_cast<std::size_t>(ic) * k + ky) * k + kx) * hw;
                const int sy0 = ky - pad, sx0 = kx - pad;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + sy0;
                    float* dst = row + static_cast<std::size_t>(y) * w;
                    if (sy < 0 || sy >= h) {
                        std::fill(dst, dst + w, 0.0f);
                        continue;
                    }
                    const float* src = x + (static_cast<std::size_t>(ic) * h + sy) * w;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + sx0;
                        dst[xx] = (sx >= 0 && sx < w) ? src[sx] : 0.0f;
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col_same: scatter-add patch-matrix rows back into an image.
inline void col2im_same(const float* col, int c, int h, int w, int k, float* x) {
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::fill(x, x + static_cast<std::size_t>(c) * hw, 0.0f);
    for (int ic = 0; ic < c; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* row = col + ((static_cast<std::size_t>(ic) * k + ky) * k + kx) * hw;
                const int sy0 = ky - pad, sx0 = kx - pad;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + sy0;
                    if (sy < 0 || sy >= h) continue;
                    const float* src = row + static_cast<std::size_t>(y) * w;
                    float* dst = x + (static_cast<std::size_t>(ic) * h + sy) * w;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + sx0;
                        if (sx >= 0 && sx < w) dst[sx] += src[xx];
                    }
                }
            }
        }
    }
}

} // namespace detail

/// Stride-1, same-padded cross-correlation. weight (out_ch, in_ch, k, k)
/// with k in {1,3}, bias (out_ch).
inline Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const std::vector<float>& bias) {
    const int out_ch = weight.n, in_ch = weight.c, k = weight.h;
    if (x.c != in_ch)
        throw ShapeMismatch("conv2d: input channels " + std::to_string(x.c) +
                            " != kernel in_channels " + std::to_string(in_ch));
    const int hw = x.h * x.w;
    const int patch = in_ch * k * k;
    Tensor4 out(x.n, out_ch, x.h, x.w);
    std::vector<float> col(static_cast<std::size_t>(patch) * hw);
    for (int in = 0; in < x.n; ++in) {
        detail::im2col_same(x.plane(in, 0), in_ch, x.h, x.w, k, col.data());
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, out_ch, hw, patch,
                    1.0f, weight.data.data(), patch, col.data(), hw,
                    0.0f, out.plane(in, 0), hw);
        for (int oc = 0; oc < out_ch; ++oc) {
            float* p = out.plane(in, oc);
            const float b = bias[oc];
            for (int i = 0; i < hw; ++i) p[i] += b;
        }
    }
    return out;
}

/// Gradients of conv2d_forward. Bias gradient is the upstream summed over
/// batch and spatial dims.
inline void conv2d_backward(const Tensor4& x, const Tensor4& weight, const Tensor4& upstream,
                            Tensor4& dweight, std::vector<float>& dbias, Tensor4& dx) {
    const int out_ch = weight.n, in_ch = weight.c, k = weight.h;
    if (upstream.n != x.n || upstream.c != out_ch || upstream.h != x.h || upstream.w != x.w)
        throw ShapeMismatch("conv2d_backward: upstream " + upstream.shape_str());
    const int hw = x.h * x.w;
    const int patch = in_ch * k * k;
    dweight = Tensor4(out_ch, in_ch, k, k);
    dbias.assign(out_ch, 0.0f);
    dx = Tensor4(x.n, x.c, x.h, x.w);
    std::vector<float> col(static_cast<std::size_t>(patch) * hw);
    std::vector<float> dcol(static_cast<std::size_t>(patch) * hw);
    for (int in = 0; in < x.n; ++in) {
        detail::im2col_same(x.plane(in, 0), in_ch, x.h, x.w, k, col.data());
        // dW += dy * col^T
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, out_ch, patch, hw,
                    1.0f, upstream.plane(in, 0), hw, col.data(), hw,
                    1.0f, dweight.data.data(), patch);
        // dcol = W^T * dy
        cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, patch, hw, out_ch,
                    1.0f, weight.data.data(), patch, upstream.plane(in, 0), hw,
                    0.0f, dcol.data(), hw);
        detail::col2im_same(dcol.data(), in_ch, x.h, x.w, k, dx.plane(in, 0));
        for (int oc = 0; oc < out_ch; ++oc) {
            const float* p = upstream.plane(in, oc);
            float s = 0.0f;
            for (int i = 0; i < hw; ++i) s += p[i];
            dbias[oc] += s;
        }
    }
}

/// 2x2 stride-2 transposed convolution. weight (in_ch, out_ch, 2, 2),
/// output (n, out_ch, 2H, 2W). Stride equals kernel size, so output
/// positions never overlap.
inline Tensor4 conv_transpose2x_forward(const Tensor4& x, const Tensor4& weight,
                                        const std::vector<float>& bias) {
    const int in_ch = weight.n, out_ch = weight.c;
    if (x.c != in_ch)
        throw ShapeMismatch("conv_transpose2x: input channels " + std::to_string(x.c) +
                            " != kernel in_channels " + std::to_string(in_ch));
    Tensor4 out(x.n, out_ch, 2 * x.h, 2 * x.w);
    for (int in = 0; in < x.n; ++in) {
        for (int oc = 0; oc < out_ch; ++oc) {
            float* op = out.plane(in, oc);
            const float b = bias[oc];
            for (std::size_t i = 0; i < static_cast<std::size_t>(out.h) * out.w; ++i) op[i] = b;
            for (int ic = 0; ic < in_ch; ++ic) {
                const float* xp = x.plane(in, ic);
                const float* kp = weight.data.data() + weight.index(ic, oc, 0, 0);
                for (int y = 0; y < x.h; ++y) {
                    for (int xx = 0; xx < x.w; ++xx) {
                        const float v = xp[y * x.w + xx];
                        float* o = op + (2 * y) * out.w + 2 * xx;
                        o[0] += v * kp[0];
                        o[1] += v * kp[1];
                        o[out.w] += v * kp[2];
                        o[out.w + 1] += v * kp[3];
                    }
                }
            }
        }
    }
    return out;
}

inline void conv_transpose2x_backward(const Tensor4& x, const Tensor4& weight, const Tensor4& upstream,
                                      Tensor4& dweight, std::vector<float>& dbias, Tensor4& dx) {
    const int in_ch = weight.n, out_ch = weight.c;
    if (upstream.n != x.n || upstream.c != out_ch || upstream.h != 2 * x.h || upstream.w != 2 * x.w)
        throw ShapeMismatch("conv_transpose2x_backward: upstream " + upstream.shape_str());
    dweight = Tensor4(in_ch, out_ch, 2, 2);
    dbias.assign(out_ch, 0.0f);
    dx = Tensor4(x.n, x.c, x.h, x.w);
    const int ow = upstream.w;
    for (int in = 0; in < x.n; ++in) {
        for (int oc = 0; oc < out_ch; ++oc) {
            const float* up = upstream.plane(in, oc);
            float s = 0.0f;
            for (std::size_t i = 0; i < static_cast<std::size_t>(upstream.h) * ow; ++i) s += up[i];
            dbias[oc] += s;
            for (int ic = 0; ic < in_ch; ++ic) {
                const float* xp = x.plane(in, ic);
                float* dxp = dx.plane(in, ic);
                const float* kp = weight.data.data() + weight.index(ic, oc, 0, 0);
                float* dkp = &dweight.at(ic, oc, 0, 0);
                for (int y = 0; y < x.h; ++y) {
                    for (int xx = 0; xx < x.w; ++xx) {
                        const float* u = up + (2 * y) * ow + 2 * xx;
                        const float v = xp[y * x.w + xx];
                        dkp[0] += v * u[0];
                        dkp[1] += v * u[1];
                        dkp[2] += v * u[ow];
                        dkp[3] += v * u[ow + 1];
                        dxp[y * x.w + xx] +=
                            u[0] * kp[0] + u[1] * kp[1] + u[ow] * kp[2] + u[ow + 1] * kp[3];
                    }
                }
            }
        }
    }
}

} // namespace dentseg
