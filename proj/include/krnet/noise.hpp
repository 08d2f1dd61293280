#pragma once

#include <string>
#include <variant>
#include <vector>

#include "krnet/image.hpp"
#include "krnet/rng.hpp"

namespace krnet {

// All sigmas are expressed on the 0-255 byte scale and divided by 255
// internally, matching images stored in [0, 1].

struct AwgnSpec {
    double sigma = 25.0;  // one sigma for every channel
};

struct MultiChannelSpec {
    double sigma_r = 40.0;
    double sigma_g = 20.0;
    double sigma_b = 30.0;  // requires 3-channel images
};

struct BlindSpec {
    double lo = 0.0;
    double hi = 55.0;  // per-channel sigma drawn uniformly from [lo, hi]
};

using NoiseSpec = std::variant<AwgnSpec, MultiChannelSpec, BlindSpec>;

// Throws ConfigError when the noise description is invalid or incompatible
// with the channel count (MultiChannel on a gray image).
void validate_noise(const NoiseSpec& spec, int channels);

// Short human-readable description used as the noise column of reports.
std::string describe(const NoiseSpec& spec);

// y = x + eta with eta ~ N(0, (sigma/255)^2) i.i.d. per element, per-channel
// sigma for MultiChannel, and freshly drawn per-channel sigmas for Blind
// (reported through drawn_sigmas when non-null). Never clips.
Image add_noise(const Image& clean, const NoiseSpec& spec, Rng& rng,
                std::vector<double>* drawn_sigmas = nullptr);

// Same corruption with one explicit sigma per channel (0-255 scale), used when
// blind sigmas are drawn once per source image and reused across its patches.
Image add_noise_with_sigmas(const Image& clean, const std::vector<double>& sigmas, Rng& rng);

}  // namespace krnet
