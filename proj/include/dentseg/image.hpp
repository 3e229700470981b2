#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dentseg/errors.hpp"
#include "dentseg/tensor.hpp"

namespace dentseg {

/// 8-bit image, interleaved channels (1 = grayscale, 3 = RGB).
struct Image8 {
    int h = 0, w = 0, channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * w + x) * channels + c];
    }
};

inline Image8 decode_png(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw DecodeError("cannot decode '" + path.string() + "'");
    if (m.depth() != CV_8U)
        throw UnsupportedDepth("'" + path.string() + "' is not 8-bit");
    Image8 img;
    img.h = m.rows;
    img.w = m.cols;
    if (m.channels() == 1) {
        img.channels = 1;
    } else if (m.channels() == 3 || m.channels() == 4) {
        cv::Mat rgb;
        cv::cvtColor(m, rgb, m.channels() == 4 ? cv::COLOR_BGRA2RGB : cv::COLOR_BGR2RGB);
        m = rgb;
        img.channels = 3;
    } else {
        throw DecodeError("'" + path.string() + "' has unsupported channel count " +
                          std::to_string(m.channels()));
    }
    img.pixels.assign(m.data, m.data + static_cast<std::size_t>(img.h) * img.w * img.channels);
    return img;
}

inline void write_png_gray8(const std::filesystem::path& path, int h, int w,
                            const std::vector<std::uint8_t>& pixels) {
    cv::Mat m(h, w, CV_8UC1, const_cast<std::uint8_t*>(pixels.data()));
    if (!cv::imwrite(path.string(), m))
        throw DecodeError("cannot write '" + path.string() + "'");
}

inline void write_png_gray16(const std::filesystem::path& path, int h, int w,
                             const std::vector<std::uint16_t>& pixels) {
    cv::Mat m(h, w, CV_16UC1, const_cast<std::uint16_t*>(pixels.data()));
    if (!cv::imwrite(path.string(), m))
        throw DecodeError("cannot write '" + path.string() + "'");
}

/// Bilinear resample of one channel plane with half-pixel center alignment:
/// src = (dst + 0.5) * (src_size / dst_size) - 0.5, clamped at the borders.
inline void resize_bilinear_plane(const float* src, int sh, int sw, float* dst, int dh, int dw) {
    const double sy_scale = static_cast<double>(sh) / dh;
    const double sx_scale = static_cast<double>(sw) / dw;
    for (int y = 0; y < dh; ++y) {
        double fy = (y + 0.5) * sy_scale - 0.5;
        if (fy < 0) fy = 0;
        if (fy > sh - 1) fy = sh - 1;
        const int y0 = static_cast<int>(fy);
        const int y1 = y0 + 1 < sh ? y0 + 1 : y0;
        const float wy = static_cast<float>(fy - y0);
        for (int x = 0; x < dw; ++x) {
            double fx = (x + 0.5) * sx_scale - 0.5;
            if (fx < 0) fx = 0;
            if (fx > sw - 1) fx = sw - 1;
            const int x0 = static_cast<int>(fx);
            const int x1 = x0 + 1 < sw ? x0 + 1 : x0;
            const float wx = static_cast<float>(fx - x0);
            const float top = src[y0 * sw + x0] * (1 - wx) + src[y0 * sw + x1] * wx;
            const float bot = src[y1 * sw + x0] * (1 - wx) + src[y1 * sw + x1] * wx;
            dst[y * dw + x] = top * (1 - wy) + bot * wy;
        }
    }
}

/// Nearest-neighbor index map under the same half-pixel convention:
/// src = floor((dst + 0.5) * scale), clamped.
inline int nearest_index(int dst, int src_size, int dst_size) {
    int s = static_cast<int>((dst + 0.5) * (static_cast<double>(src_size) / dst_size));
    if (s >= src_size) s = src_size - 1;
    return s;
}

} // namespace dentseg
