#include "krnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "krnet/error.hpp"

namespace krnet {

Image synth_image(int h, int w, int channels, Rng& rng) {
    Image img(h, w, channels);

    // Smooth base: a tilted gradient plus a low-frequency sinusoid, with a
    // per-channel phase so color images are not trivially grayscale.
    const double gx = rng.uniform(-1.0, 1.0);
    const double gy = rng.uniform(-1.0, 1.0);
    const double freq = rng.uniform(1.0, 3.0);
    const double base = rng.uniform(0.3, 0.7);
    for (int c = 0; c < channels; ++c) {
        const double phase = rng.uniform(0.0, 6.283185307179586);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double u = static_cast<double>(x) / std::max(1, w - 1);
                const double v = static_cast<double>(y) / std::max(1, h - 1);
                const double value = base + 0.25 * (gx * u + gy * v) +
                                     0.15 * std::sin(freq * 6.283185307179586 * (u + v) + phase);
                img.at(c, y, x) = value;
            }
        }
    }

    // A few solid shapes give the image edges to preserve.
    const int shapes = 3 + static_cast<int>(rng.uniform_int(4));
    for (int s = 0; s < shapes; ++s) {
        std::vector<double> intensity(channels);
        for (int c = 0; c < channels; ++c) intensity[c] = rng.uniform(0.0, 1.0);
        if (rng.uniform_int(2) == 0) {
            const int rh = 2 + static_cast<int>(rng.uniform_int(std::max(1, h / 2)));
            const int rw = 2 + static_cast<int>(rng.uniform_int(std::max(1, w / 2)));
            const int top = static_cast<int>(rng.uniform_int(std::max(1, h - rh + 1)));
            const int left = static_cast<int>(rng.uniform_int(std::max(1, w - rw + 1)));
            for (int c = 0; c < channels; ++c)
                for (int y = top; y < std::min(h, top + rh); ++y)
                    for (int x = left; x < std::min(w, left + rw); ++x)
                        img.at(c, y, x) = intensity[c];
        } else {
            const double cy = rng.uniform(0.0, h - 1.0);
            const double cx = rng.uniform(0.0, w - 1.0);
            const double r = rng.uniform(2.0, std::max(3.0, std::min(h, w) / 4.0));
            for (int c = 0; c < channels; ++c)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r)
                            img.at(c, y, x) = intensity[c];
        }
    }

    for (auto& v : img.v) v = std::clamp(v, 0.0, 1.0);
    return img;
}

std::string synth_dataset(const std::string& out_dir, int count, int h, int w, int channels,
                          std::uint64_t seed) {
    if (count < 1) throw ConfigError("synth: count must be at least 1");
    if (h < 1 || w < 1) throw ConfigError("synth: image size must be positive");
    if (channels != 1 && channels != 3)
        throw ConfigError("synth: channels must be 1 or 3");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError(out_dir + ": cannot create directory: " + ec.message());

    Rng rng(seed);
    const char* ext = channels == 1 ? "pgm" : "ppm";
    std::vector<std::string> names;
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%04d.%s", i, ext);
        const Image img = synth_image(h, w, channels, rng);
        write_pnm(img, (std::filesystem::path(out_dir) / name).string());
        names.emplace_back(name);
    }

    const std::string manifest = (std::filesystem::path(out_dir) / "manifest.txt").string();
    std::ofstream out(manifest, std::ios::binary);
    if (!out) throw DataError(manifest + ": cannot open for writing");
    for (const auto& name : names) out << name << '\n';
    out.flush();
    if (!out) throw DataError(manifest + ": write failed");
    return manifest;
}

}  // namespace krnet
