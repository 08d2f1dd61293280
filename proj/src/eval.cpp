#include "krnet/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>

#include "krnet/dataset.hpp"
#include "krnet/error.hpp"
#include "krnet/optim.hpp"
#include "krnet/trainer.hpp"

namespace krnet {

double psnr(const Image& reference, const Image& test, double peak) {
    if (reference.h != test.h || reference.w != test.w || reference.channels != test.channels)
        throw ShapeError("psnr: image shapes differ");
    if (peak <= 0.0) throw ConfigError("psnr: peak must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.v[i] - test.v[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

Image denoise_image(Network& net, const Image& noisy) {
    net.set_mode(BnMode::Infer);
    const Tensor4 input = image_to_tensor(noisy);
    Tensor4 output = network_forward(net, input, /*record_trace=*/false);
    return clip01(tensor_to_image(output));
}

EvalRow evaluate(Network& net, const std::vector<Image>& images,
                 const std::vector<std::string>& names, const NoiseSpec& noise,
                 const EvalOptions& opts) {
    if (images.empty()) throw DataError("evaluate: no images to evaluate");
    if (images.size() != names.size())
        throw ConfigError("evaluate: image and name counts differ");
    validate_noise(noise, net.config.in_channels);

    const auto start = std::chrono::steady_clock::now();
    Rng rng(opts.seed);
    EvalRow row;
    row.label = opts.label;
    row.noise = describe(noise);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Image& clean = images[i];
        if (clean.channels != net.config.in_channels) {
            ++row.skipped;
            continue;
        }
        const Image noisy = add_noise(clean, noise, rng);
        const Image denoised = denoise_image(net, noisy);
        row.image_names.push_back(names[i]);
        row.psnr_in.push_back(psnr(clean, clip01(noisy)));
        row.psnr_out.push_back(psnr(clean, denoised));
    }
    if (row.psnr_out.empty())
        throw DataError("evaluate: no image matched the network's channel count");
    double sum_in = 0.0, sum_out = 0.0;
    for (std::size_t i = 0; i < row.psnr_out.size(); ++i) {
        sum_in += row.psnr_in[i];
        sum_out += row.psnr_out[i];
    }
    row.mean_in = sum_in / static_cast<double>(row.psnr_in.size());
    row.mean_out = sum_out / static_cast<double>(row.psnr_out.size());
    if (opts.timing) {
        const auto end = std::chrono::steady_clock::now();
        row.wall_seconds = std::chrono::duration<double>(end - start).count();
    }
    return row;
}

namespace {

std::string format_psnr(double value, int decimals) {
    if (std::isinf(value)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string render_text(const EvalReport& report) {
    bool any_wall = false;
    for (const auto& row : report.rows)
        if (row.wall_seconds >= 0.0) any_wall = true;

    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = {"label", "noise", "images", "psnr_in", "psnr_out"};
    if (any_wall) header.push_back("wall_s");
    cells.push_back(header);
    for (const auto& row : report.rows) {
        std::vector<std::string> line = {row.label, row.noise,
                                         std::to_string(row.psnr_out.size()),
                                         format_psnr(row.mean_in, 2), format_psnr(row.mean_out, 2)};
        if (any_wall)
            line.push_back(row.wall_seconds >= 0.0 ? format_psnr(row.wall_seconds, 3) : "-");
        cells.push_back(line);
    }

    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i)
            widths[i] = std::max(widths[i], line[i].size());

    std::string out;
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i > 0) out += "  ";
            out += line[i];
            if (i + 1 < line.size())
                out.append(widths[i] - line[i].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

std::string render_csv_report(const EvalReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"label", "noise", "image", "psnr_in", "psnr_out"});
    for (const auto& row : report.rows) {
        for (std::size_t i = 0; i < row.psnr_out.size(); ++i)
            rows.push_back({row.label, row.noise, row.image_names[i],
                            format_psnr(row.psnr_in[i], 6), format_psnr(row.psnr_out[i], 6)});
        rows.push_back({row.label, row.noise, "mean", format_psnr(row.mean_in, 6),
                        format_psnr(row.mean_out, 6)});
    }
    return render_csv(rows);
}

}  // namespace

std::string report_render(const EvalReport& report, ReportFormat format) {
    return format == ReportFormat::Text ? render_text(report) : render_csv_report(report);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field += ch;
                ++i;
            }
        } else if (ch == '"' && field.empty() && !field_started) {
            in_quotes = true;
            field_started = true;
            ++i;
        } else if (ch == ',') {
            row.push_back(field);
            field.clear();
            field_started = false;
            ++i;
        } else if (ch == '\n') {
            row.push_back(field);
            field.clear();
            field_started = false;
            rows.push_back(row);
            row.clear();
            ++i;
        } else {
            field += ch;
            field_started = true;
            ++i;
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

std::string render_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            const std::string& field = row[i];
            const bool needs_quotes = field.find_first_of(",\"\n") != std::string::npos;
            if (needs_quotes) {
                out += '"';
                for (char ch : field) {
                    if (ch == '"') out += '"';
                    out += ch;
                }
                out += '"';
            } else {
                out += field;
            }
        }
        out += '\n';
    }
    return out;
}

AblationOutcome ablation_run(const RunConfig& base, const std::vector<KrBlockVariant>& variants,
                             const std::vector<int>& block_counts,
                             const std::function<void(const std::string&, int)>& on_progress) {
    if (variants.empty()) throw ConfigError("ablation: variant list must not be empty");
    if (block_counts.empty()) throw ConfigError("ablation: block count list must not be empty");
    base.validate();
    if (base.data.train_manifest.empty())
        throw ConfigError("data.train_manifest: required for ablation");
    if (base.data.val_manifest.empty())
        throw ConfigError("data.val_manifest: required for ablation");

    // Shared training data: identical patches and identical stream seeds for
    // every cell, so the grid differs only in architecture.
    const auto train_paths = read_manifest(base.data.train_manifest);
    auto train_images = load_images(train_paths);
    Rng data_rng(derive_seed(base.train.seed, 1));
    const PatchSet patches = crop_patches(train_images, base.train.patch_size,
                                          base.data.count_per_image, data_rng);

    const auto val_paths = read_manifest(base.data.val_manifest);
    const auto val_images = load_images(val_paths);
    if (val_images.empty()) throw DataError(base.data.val_manifest + ": manifest lists no images");
    std::vector<std::string> val_names;
    for (const auto& p : val_paths)
        val_names.push_back(std::filesystem::path(p).filename().string());

    // Fixed validation pairs, shared by every cell and every epoch.
    std::vector<std::pair<Tensor4, Tensor4>> val_pairs;  // (noisy, clean)
    {
        Rng val_rng(derive_seed(base.train.seed, 3));
        for (const auto& clean : val_images) {
            if (clean.channels != base.network.in_channels)
                throw DataError("ablation: validation image channel count does not match the network");
            const Image noisy = add_noise(clean, base.noise, val_rng);
            val_pairs.emplace_back(image_to_tensor(noisy), image_to_tensor(clean));
        }
    }

    AblationOutcome outcome;
    for (const KrBlockVariant variant : variants) {
        for (const int blocks : block_counts) {
            RunConfig cfg = base;
            cfg.network.variant = variant;
            cfg.network.num_blocks = blocks;
            cfg.network.validate();
            const int rf = receptive_field(cfg.network);
            if (cfg.train.patch_size <= rf)
                throw ConfigError("train.patch_size: " + std::to_string(cfg.train.patch_size) +
                                  " must exceed the receptive field of " + std::to_string(rf) +
                                  " for variant " + to_string(variant) + " with " +
                                  std::to_string(blocks) + " block(s)");

            AblationCell cell;
            cell.variant = variant;
            cell.num_blocks = blocks;
            cell.label = std::string(to_string(variant)) + "_blocks" + std::to_string(blocks);

            Network net = build_network(cfg.network, derive_seed(cfg.train.seed, 0));
            cell.param_count = net.param_count();
            Rng train_rng(derive_seed(cfg.train.seed, 2));
            LrSchedule schedule;
            schedule.lr_start = cfg.train.lr_start;
            schedule.lr_end = cfg.train.lr_end;
            schedule.total_epochs = cfg.train.epochs;
            for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
                net.set_mode(BnMode::Train);
                BatchStream batches(patches, cfg.noise, cfg.train.batch_size, train_rng,
                                    cfg.data.blind_per_patch);
                train_epoch(net, batches, cfg.train, lr_at(schedule, epoch));
                net.set_mode(BnMode::Infer);
                double loss_sum = 0.0;
                for (const auto& [noisy, clean] : val_pairs) {
                    const Tensor4 pred = network_forward(net, noisy, /*record_trace=*/false);
                    loss_sum += mse_loss(pred, clean).loss;
                }
                cell.val_loss.push_back(loss_sum / static_cast<double>(val_pairs.size()));
                if (on_progress) on_progress(cell.label, epoch + 1);
            }

            EvalOptions eval_opts;
            eval_opts.seed = derive_seed(cfg.train.seed, 4);
            eval_opts.label = cell.label;
            outcome.report.rows.push_back(
                evaluate(net, val_images, val_names, cfg.noise, eval_opts));
            outcome.cells.push_back(std::move(cell));
        }
    }
    return outcome;
}

std::string ablation_table(const AblationOutcome& outcome) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"label", "blocks", "params", "final_val_loss", "psnr_in", "psnr_out"});
    for (std::size_t i = 0; i < outcome.cells.size(); ++i) {
        const AblationCell& cell = outcome.cells[i];
        const EvalRow& row = outcome.report.rows[i];
        char loss[64];
        std::snprintf(loss, sizeof(loss), "%.6g",
                      cell.val_loss.empty() ? 0.0 : cell.val_loss.back());
        cells.push_back({cell.label, std::to_string(cell.num_blocks),
                         std::to_string(cell.param_count), loss, format_psnr(row.mean_in, 2),
                         format_psnr(row.mean_out, 2)});
    }
    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i)
            widths[i] = std::max(widths[i], line[i].size());
    std::string out;
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i > 0) out += "  ";
            out += line[i];
            if (i + 1 < line.size())
                out.append(widths[i] - line[i].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

}  // namespace krnet
