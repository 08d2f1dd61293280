#include "krnet/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

#include "krnet/error.hpp"

namespace krnet {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
    while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
    return s.substr(begin, end - begin);
}

}  // namespace

std::vector<std::string> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open manifest");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        const std::string entry = trim(line);
        if (entry.empty() || entry[0] == '#') continue;
        std::filesystem::path p(entry);
        if (p.is_relative()) p = base / p;
        entries.push_back(p.string());
    }
    if (in.bad()) throw DataError(path + ": read failed");
    return entries;
}

std::vector<Image> load_images(const std::vector<std::string>& paths) {
    std::vector<Image> images;
    images.reserve(paths.size());
    for (const auto& p : paths) images.push_back(read_pnm(p));
    return images;
}

PatchSet crop_patches(const std::vector<Image>& images, int patch_size, int count_per_image,
                      Rng& rng) {
    if (patch_size < 1) throw ConfigError("patch_size must be positive");
    if (count_per_image < 1) throw ConfigError("count_per_image must be positive");
    PatchSet set;
    set.patch_size = patch_size;
    for (std::size_t idx = 0; idx < images.size(); ++idx) {
        const Image& img = images[idx];
        if (img.h < patch_size || img.w < patch_size) {
            ++set.skipped_images;
            continue;
        }
        for (int k = 0; k < count_per_image; ++k) {
            Patch patch;
            patch.source_id = static_cast<int>(idx);
            patch.top = static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(img.h - patch_size + 1)));
            patch.left = static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(img.w - patch_size + 1)));
            patch.image = Image(patch_size, patch_size, img.channels);
            for (int c = 0; c < img.channels; ++c)
                for (int y = 0; y < patch_size; ++y)
                    for (int x = 0; x < patch_size; ++x)
                        patch.image.at(c, y, x) = img.at(c, patch.top + y, patch.left + x);
            set.patches.push_back(std::move(patch));
        }
    }
    if (set.patches.empty())
        throw DataError("no training patches: every source image is smaller than the patch size");
    return set;
}

BatchStream::BatchStream(const PatchSet& patches, const NoiseSpec& spec, int batch_size, Rng& rng,
                         bool per_patch_blind)
    : patches_(patches),
      spec_(spec),
      batch_size_(batch_size),
      rng_(rng),
      per_patch_blind_(per_patch_blind) {
    if (patches_.patches.empty()) throw DataError("batch stream needs a non-empty patch set");
    if (batch_size_ < 1) throw ConfigError("batch_size must be positive");
    const int channels = patches_.patches.front().image.channels;
    int max_source = 0;
    for (const auto& p : patches_.patches) {
        if (p.image.channels != channels)
            throw DataError("batch stream: patches mix channel counts");
        max_source = std::max(max_source, p.source_id);
    }
    validate_noise(spec_, channels);

    order_.resize(patches_.patches.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(order_);

    // Blind mode draws one sigma set per source image per epoch (unless the
    // per-patch flag asks for an independent draw on every patch).
    if (const auto* blind = std::get_if<BlindSpec>(&spec_); blind != nullptr && !per_patch_blind_) {
        image_sigmas_.resize(static_cast<std::size_t>(max_source) + 1);
        for (auto& sigmas : image_sigmas_) {
            sigmas.resize(static_cast<std::size_t>(channels));
            for (double& s : sigmas) s = rng_.uniform(blind->lo, blind->hi);
        }
    }
}

int BatchStream::batch_count() const {
    const std::size_t count = patches_.patches.size();
    return static_cast<int>((count + static_cast<std::size_t>(batch_size_) - 1) /
                            static_cast<std::size_t>(batch_size_));
}

std::optional<Batch> BatchStream::next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::size_t take =
        std::min(static_cast<std::size_t>(batch_size_), order_.size() - cursor_);
    const int ps = patches_.patch_size;
    const int channels = patches_.patches.front().image.channels;

    Batch batch;
    batch.noisy = Tensor4(static_cast<int>(take), channels, ps, ps);
    batch.clean = Tensor4(static_cast<int>(take), channels, ps, ps);
    for (std::size_t b = 0; b < take; ++b) {
        const Patch& patch = patches_.patches[order_[cursor_ + b]];
        Image noisy = image_sigmas_.empty()
                          ? add_noise(patch.image, spec_, rng_)
                          : add_noise_with_sigmas(
                                patch.image,
                                image_sigmas_[static_cast<std::size_t>(patch.source_id)], rng_);
        const std::size_t volume = patch.image.size();
        const std::size_t base = b * volume;
        for (std::size_t i = 0; i < volume; ++i) {
            batch.noisy.v[base + i] = noisy.v[i];
            batch.clean.v[base + i] = patch.image.v[i];
        }
    }
    cursor_ += take;
    return batch;
}

}  // namespace krnet
