#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "krnet/config.hpp"
#include "krnet/image.hpp"
#include "krnet/network.hpp"
#include "krnet/noise.hpp"

namespace krnet {

// Peak signal-to-noise ratio: 10*log10(peak^2 / mse), MSE over all channels
// jointly. Returns +infinity for identical inputs. No clipping here — callers
// decide what range their data is in.
double psnr(const Image& reference, const Image& test, double peak = 1.0);

// Inference-mode forward on one image (clipped to [0,1]).
Image denoise_image(Network& net, const Image& noisy);

// One evaluated model under one noise setting.
struct EvalRow {
    std::string label;
    std::string noise;
    std::vector<std::string> image_names;
    std::vector<double> psnr_in;   // noisy-input baseline, per image
    std::vector<double> psnr_out;  // denoised, per image
    double mean_in = 0.0;          // arithmetic mean of per-image values
    double mean_out = 0.0;
    int skipped = 0;               // channel-mismatched images
    double wall_seconds = -1.0;    // < 0 when timing was not requested
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

struct EvalOptions {
    std::uint64_t seed = 1;
    bool timing = false;
    std::string label = "model";
};

// Corrupts each clean image (one RNG, image order), denoises, and scores.
// Network output and the noisy baseline are clipped to [0,1] before PSNR.
// Channel-mismatched images are skipped and counted; an empty image list is a
// DataError.
EvalRow evaluate(Network& net, const std::vector<Image>& images,
                 const std::vector<std::string>& names, const NoiseSpec& noise,
                 const EvalOptions& opts);

enum class ReportFormat { Text, Csv };

// Text: aligned summary columns, PSNR to 2 decimals, +infinity as "inf", wall
// time in its own clearly-labeled column only when measured. CSV: long format
// (label,noise,image,psnr_in,psnr_out) with per-image rows followed by a mean
// row per report row, 6 decimals.
std::string report_render(const EvalReport& report, ReportFormat format);

// Minimal RFC-style CSV: fields quoted iff they contain a comma, quote or
// newline; render(parse(x)) == x for files this module writes.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string render_csv(const std::vector<std::vector<std::string>>& rows);

// One trained cell of an ablation grid.
struct AblationCell {
    std::string label;  // e.g. "kr7_3_blocks2"
    KrBlockVariant variant = KrBlockVariant::KR7_3;
    int num_blocks = 0;
    std::size_t param_count = 0;
    std::vector<double> val_loss;  // one entry per epoch, fixed validation pairs
};

struct AblationOutcome {
    EvalReport report;  // one row per cell, evaluated on the validation set
    std::vector<AblationCell> cells;
};

// Trains one network per (variant, block count) cell from the base config —
// same seed, same patch data — and evaluates each on the validation manifest.
// Per-epoch validation losses are recorded on fixed noisy/clean pairs so the
// series are comparable across cells.
AblationOutcome ablation_run(const RunConfig& base, const std::vector<KrBlockVariant>& variants,
                             const std::vector<int>& block_counts,
                             const std::function<void(const std::string&, int)>& on_progress = nullptr);

// Aligned text table over all cells: label, blocks, parameter count, final
// validation loss and mean output PSNR.
std::string ablation_table(const AblationOutcome& outcome);

}  // namespace krnet
