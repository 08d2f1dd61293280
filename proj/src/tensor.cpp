#include "krnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krnet/error.hpp"

namespace krnet {

std::size_t checked_volume(int n, int c, int h, int w) {
    if (n <= 0 || c <= 0 || h <= 0 || w <= 0)
        throw ConfigError("tensor dimensions must all be positive, got (" + std::to_string(n) +
                          ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
                          std::to_string(w) + ")");
    const std::size_t limit = static_cast<std::size_t>(1) << 31;
    std::size_t volume = 1;
    for (int d : {n, c, h, w}) {
        const std::size_t ud = static_cast<std::size_t>(d);
        if (volume > limit / ud)
            throw SizeError("tensor volume exceeds the supported range");
        volume *= ud;
    }
    return volume;
}

Tensor4::Tensor4(int n_, int c_, int h_, int w_)
    : n(n_), c(c_), h(h_), w(w_), v(checked_volume(n_, c_, h_, w_), 0.0) {}

void Tensor4::fill(double value) { std::fill(v.begin(), v.end(), value); }

bool Tensor4::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

namespace {
std::string shape_str(const Tensor4& t) {
    return "(" + std::to_string(t.n) + ", " + std::to_string(t.c) + ", " + std::to_string(t.h) +
           ", " + std::to_string(t.w) + ")";
}
}  // namespace

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch, " + shape_str(a) + " vs " +
                         shape_str(b));
}

}  // namespace krnet
