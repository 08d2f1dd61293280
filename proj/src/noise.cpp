#include "krnet/noise.hpp"

#include <cstdio>
#include <string>

#include "krnet/error.hpp"

namespace krnet {

namespace {

std::string format_sigma(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

}  // namespace

void validate_noise(const NoiseSpec& spec, int channels) {
    if (const auto* awgn = std::get_if<AwgnSpec>(&spec)) {
        if (awgn->sigma < 0.0) throw ConfigError("noise.sigma: must be non-negative");
    } else if (const auto* mc = std::get_if<MultiChannelSpec>(&spec)) {
        if (mc->sigma_r < 0.0 || mc->sigma_g < 0.0 || mc->sigma_b < 0.0)
            throw ConfigError("noise sigmas must be non-negative");
        if (channels != 3)
            throw ConfigError("multi-channel noise requires 3-channel images, got " +
                              std::to_string(channels) + " channel(s)");
    } else if (const auto* blind = std::get_if<BlindSpec>(&spec)) {
        if (blind->lo < 0.0 || blind->lo > blind->hi)
            throw ConfigError("noise.lo/hi: need 0 <= lo <= hi");
    }
}

std::string describe(const NoiseSpec& spec) {
    if (const auto* awgn = std::get_if<AwgnSpec>(&spec))
        return "awgn(sigma=" + format_sigma(awgn->sigma) + ")";
    if (const auto* mc = std::get_if<MultiChannelSpec>(&spec))
        return "mc(" + format_sigma(mc->sigma_r) + "," + format_sigma(mc->sigma_g) + "," +
               format_sigma(mc->sigma_b) + ")";
    const auto& blind = std::get<BlindSpec>(spec);
    return "blind(" + format_sigma(blind.lo) + "," + format_sigma(blind.hi) + ")";
}

Image add_noise_with_sigmas(const Image& clean, const std::vector<double>& sigmas, Rng& rng) {
    if (static_cast<int>(sigmas.size()) != clean.channels)
        throw ConfigError("add_noise_with_sigmas: expected one sigma per channel");
    Image noisy = clean;
    for (int c = 0; c < clean.channels; ++c) {
        const double scale = sigmas[static_cast<std::size_t>(c)] / 255.0;
        for (int y = 0; y < clean.h; ++y)
            for (int x = 0; x < clean.w; ++x)
                noisy.at(c, y, x) += scale * rng.gaussian();
    }
    return noisy;
}

Image add_noise(const Image& clean, const NoiseSpec& spec, Rng& rng,
                std::vector<double>* drawn_sigmas) {
    validate_noise(spec, clean.channels);
    std::vector<double> sigmas(static_cast<std::size_t>(clean.channels), 0.0);
    if (const auto* awgn = std::get_if<AwgnSpec>(&spec)) {
        sigmas.assign(static_cast<std::size_t>(clean.channels), awgn->sigma);
    } else if (const auto* mc = std::get_if<MultiChannelSpec>(&spec)) {
        sigmas = {mc->sigma_r, mc->sigma_g, mc->sigma_b};
    } else {
        const auto& blind = std::get<BlindSpec>(spec);
        for (double& s : sigmas) s = rng.uniform(blind.lo, blind.hi);
    }
    if (drawn_sigmas != nullptr) *drawn_sigmas = sigmas;
    return add_noise_with_sigmas(clean, sigmas, rng);
}

}  // namespace krnet
