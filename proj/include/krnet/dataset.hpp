#pragma once

#include <optional>
#include <string>
#include <vector>

#include "krnet/image.hpp"
#include "krnet/noise.hpp"
#include "krnet/rng.hpp"
#include "krnet/tensor.hpp"

namespace krnet {

// One image path per line; blank lines and '#' comments are skipped. Relative
// entries are resolved against the manifest file's directory.
std::vector<std::string> read_manifest(const std::string& path);

std::vector<Image> load_images(const std::vector<std::string>& paths);

struct Patch {
    Image image;
    int source_id = 0;  // index into the source image list
    int top = 0, left = 0;
};

// Clean training patches; every patch lies fully inside its source image.
struct PatchSet {
    std::vector<Patch> patches;
    int patch_size = 0;
    int skipped_images = 0;  // sources smaller than the patch size
};

// count_per_image uniformly random axis-aligned positions per image.
// Undersized images are skipped (counted in skipped_images); an empty result
// is a DataError.
PatchSet crop_patches(const std::vector<Image>& images, int patch_size, int count_per_image,
                      Rng& rng);

struct Batch {
    Tensor4 noisy;
    Tensor4 clean;
};

// One epoch of (noisy, clean) batches: the patch order is reshuffled and the
// noise freshly resampled each epoch, while the clean patches themselves are
// reused. Blind noise draws one sigma set per source image per epoch unless
// per_patch_blind is set. A trailing batch smaller than batch_size is emitted
// rather than dropped.
class BatchStream {
  public:
    BatchStream(const PatchSet& patches, const NoiseSpec& spec, int batch_size, Rng& rng,
                bool per_patch_blind = false);

    std::optional<Batch> next();
    int batch_count() const;

  private:
    const PatchSet& patches_;
    NoiseSpec spec_;
    int batch_size_;
    Rng& rng_;
    bool per_patch_blind_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<double>> image_sigmas_;  // per source image (blind mode)
    std::size_t cursor_ = 0;
};

}  // namespace krnet
