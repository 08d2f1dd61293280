#pragma once

#include <string>
#include <vector>

#include "krnet/tensor.hpp"

namespace krnet {

// A gray (1-channel) or RGB (3-channel) image with float samples, stored as
// channel planes in row-major order. Clean images loaded from disk are in
// [0, 1] (byte value / 255); images produced by noise synthesis may exceed
// that range and are only clamped when written back to disk.
struct Image {
    int h = 0, w = 0, channels = 1;
    std::vector<double> v;

    Image() = default;
    Image(int h_, int w_, int channels_);

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(h) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(w) +
               static_cast<std::size_t>(x);
    }
    double at(int c, int y, int x) const { return v[index(c, y, x)]; }
    double& at(int c, int y, int x) { return v[index(c, y, x)]; }
    std::size_t size() const { return v.size(); }
};

// Binary Netpbm I/O: P5 (gray) and P6 (RGB), maxval 255 only. Reading scales
// bytes to [0, 1]; writing quantizes as round(clamp(v, 0, 1) * 255), so
// write(read(f)) is byte-identical to a canonically formatted f.
Image read_pnm(const std::string& path);
void write_pnm(const Image& image, const std::string& path);

// Serialized canonical PNM bytes (what write_pnm puts on disk).
std::vector<unsigned char> pnm_bytes(const Image& image);
Image parse_pnm(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>");

Tensor4 image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor4& t, int batch_index = 0);

Image clip01(const Image& image);

}  // namespace krnet
