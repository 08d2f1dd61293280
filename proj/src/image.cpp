#include "krnet/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "krnet/error.hpp"

namespace krnet {

Image::Image(int h_, int w_, int channels_) : h(h_), w(w_), channels(channels_) {
    if (h_ < 1 || w_ < 1) throw ConfigError("image dimensions must be positive");
    if (channels_ != 1 && channels_ != 3)
        throw ConfigError("image channel count must be 1 or 3, got " + std::to_string(channels_));
    v.assign(static_cast<std::size_t>(channels_) * static_cast<std::size_t>(h_) *
                 static_cast<std::size_t>(w_),
             0.0);
}

namespace {

bool pnm_space(unsigned char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
}

int read_header_int(const std::vector<unsigned char>& bytes, std::size_t& pos,
                    const std::string& origin) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (pnm_space(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size()) throw DataError(origin + ": truncated header");
    if (bytes[pos] < '0' || bytes[pos] > '9')
        throw DataError(origin + ": malformed header (expected a number)");
    long value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
        value = value * 10 + (bytes[pos] - '0');
        if (value > 1000000000L) throw DataError(origin + ": header value out of range");
        ++pos;
    }
    return static_cast<int>(value);
}

}  // namespace

Image parse_pnm(const std::vector<unsigned char>& bytes, const std::string& origin) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw DataError(origin + ": bad magic, expected binary P5 or P6");
    const int channels = bytes[1] == '5' ? 1 : 3;
    std::size_t pos = 2;
    const int w = read_header_int(bytes, pos, origin);
    const int h = read_header_int(bytes, pos, origin);
    const int maxval = read_header_int(bytes, pos, origin);
    if (w < 1 || h < 1) throw DataError(origin + ": image dimensions must be positive");
    if (maxval != 255)
        throw DataError(origin + ": unsupported maxval " + std::to_string(maxval) +
                        ", only 255 is supported");
    if (pos >= bytes.size() || !pnm_space(bytes[pos]))
        throw DataError(origin + ": malformed header (missing separator after maxval)");
    ++pos;  // exactly one whitespace byte before the payload
    const std::size_t expected = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                                 static_cast<std::size_t>(channels);
    if (bytes.size() - pos < expected) throw DataError(origin + ": truncated pixel payload");
    if (bytes.size() - pos > expected)
        throw DataError(origin + ": trailing bytes after pixel payload");

    Image img(h, w, channels);
    std::size_t p = pos;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) = static_cast<double>(bytes[p++]) / 255.0;
    return img;
}

std::vector<unsigned char> pnm_bytes(const Image& image) {
    const char* magic = image.channels == 1 ? "P5" : "P6";
    char header[64];
    const int header_len =
        std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n", magic, image.w, image.h);
    std::vector<unsigned char> bytes(header, header + header_len);
    bytes.reserve(bytes.size() + image.size());
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x)
            for (int c = 0; c < image.channels; ++c) {
                double value = image.at(c, y, x);
                if (value < 0.0) value = 0.0;
                if (value > 1.0) value = 1.0;
                bytes.push_back(static_cast<unsigned char>(std::lround(value * 255.0)));
            }
    return bytes;
}

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open for reading");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) throw DataError(path + ": read failed");
    return parse_pnm(bytes, path);
}

void write_pnm(const Image& image, const std::string& path) {
    const std::vector<unsigned char> bytes = pnm_bytes(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(path + ": write failed");
}

Tensor4 image_to_tensor(const Image& image) {
    Tensor4 t(1, image.channels, image.h, image.w);
    t.v = image.v;  // both store channel planes in row-major order
    return t;
}

Image tensor_to_image(const Tensor4& t, int batch_index) {
    if (batch_index < 0 || batch_index >= t.n)
        throw ConfigError("tensor_to_image: batch index out of range");
    Image img(t.h, t.w, t.c);
    const std::size_t volume = img.size();
    const std::size_t base = static_cast<std::size_t>(batch_index) * volume;
    for (std::size_t i = 0; i < volume; ++i) img.v[i] = t.v[base + i];
    return img;
}

Image clip01(const Image& image) {
    Image out = image;
    for (double& x : out.v) {
        if (x < 0.0) x = 0.0;
        if (x > 1.0) x = 1.0;
    }
    return out;
}

}  // namespace krnet
