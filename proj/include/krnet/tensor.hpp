#pragma once

#include <cstddef>
#include <vector>

namespace krnet {

// Validates a 4-D shape and returns its element count. Throws ConfigError on
// non-positive dimensions and SizeError when the volume exceeds the supported
// range.
std::size_t checked_volume(int n, int c, int h, int w);

// Dense 4-D array in (batch, channel, height, width) row-major order: the
// universal value type for activations, gradients and images in network form.
// All dimensions are at least 1 and v.size() == n*c*h*w always.
struct Tensor4 {
    int n = 1, c = 1, h = 1, w = 1;
    std::vector<double> v;

    Tensor4() : v(1, 0.0) {}
    Tensor4(int n_, int c_, int h_, int w_);

    static Tensor4 zeros_like(const Tensor4& t) { return Tensor4(t.n, t.c, t.h, t.w); }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::size_t index(int b, int ch, int y, int x) const {
        return ((static_cast<std::size_t>(b) * static_cast<std::size_t>(c) +
                 static_cast<std::size_t>(ch)) *
                    static_cast<std::size_t>(h) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(w) +
               static_cast<std::size_t>(x);
    }

    double at(int b, int ch, int y, int x) const { return v[index(b, ch, y, x)]; }
    double& at(int b, int ch, int y, int x) { return v[index(b, ch, y, x)]; }

    void fill(double value);
    bool all_finite() const;
};

// Throws ShapeError unless both tensors have identical shape.
void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what);

}  // namespace krnet
