#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krnet/image.hpp"
#include "krnet/rng.hpp"

namespace krnet {

// Procedural test images: smooth gradients plus a few random rectangles and
// disks, values already in [0,1]. Enough structure for a denoiser to learn
// from without shipping photographs.
Image synth_image(int h, int w, int channels, Rng& rng);

// Writes <count> PNM images (img_0000.pgm / .ppm, ...) plus manifest.txt into
// out_dir, creating it if needed. Returns the manifest path.
std::string synth_dataset(const std::string& out_dir, int count, int h, int w, int channels,
                          std::uint64_t seed);

}  // namespace krnet
