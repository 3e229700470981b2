#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "dentseg/errors.hpp"

namespace dentseg {

/// Dense rank-4 float tensor with (batch, channels, height, width) layout,
/// row-major with width fastest.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, float fill = 0.0f)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    float& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    float at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    float* plane(int in, int ic) { return data.data() + index(in, ic, 0, 0); }
    const float* plane(int in, int ic) const { return data.data() + index(in, ic, 0, 0); }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
    void fill(float v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_same_shape(const Tensor4& a, const Tensor4& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(where) + ": " + a.shape_str() + " vs " + b.shape_str());
}

/// Deterministic RNG. Distributions are hand-rolled on top of mt19937 output
/// so that streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed)) {}

    std::uint32_t next_u32() { return gen_(); }

    /// Uniform in [0,1) with 24 bits of mantissa.
    float uniform() { return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f); }

    /// Standard normal via Box-Muller.
    float normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        float u1 = 0.0f;
        while (u1 <= 1e-12f) u1 = uniform();
        float u2 = uniform();
        float r = std::sqrt(-2.0f * std::log(u1));
        float theta = 6.2831853071795864769f * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Unbiased integer in [0, bound).
    std::uint32_t below(std::uint32_t bound) {
        std::uint32_t threshold = (~bound + 1u) % bound; // 2^32 mod bound
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937 gen_;
    bool has_spare_ = false;
    float spare_ = 0.0f;
};

} // namespace dentseg
