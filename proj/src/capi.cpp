#define KRN_API __attribute__((visibility("default")))

#include "krnet.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "krnet/checkpoint.hpp"
#include "krnet/config.hpp"
#include "krnet/dataset.hpp"
#include "krnet/error.hpp"
#include "krnet/eval.hpp"
#include "krnet/gradcheck.hpp"
#include "krnet/parallel.hpp"
#include "krnet/synth.hpp"
#include "krnet/trainer.hpp"
#include "krnet/version.hpp"

struct krn_model {
    krnet::Network net;
};

namespace {

thread_local std::string g_last_error;

// Thrown when a user callback asks to stop; not an error.
struct abort_requested {};

void set_error(const std::string& message) { g_last_error = message; }

template <typename Fn>
krn_status guarded(Fn&& fn) {
    try {
        fn();
        return KRN_OK;
    } catch (const abort_requested&) {
        return KRN_OK;
    } catch (const krnet::ConfigError& e) {
        set_error(e.what());
        return KRN_ERR_CONFIG;
    } catch (const krnet::ShapeError& e) {
        set_error(e.what());
        return KRN_ERR_CONFIG;
    } catch (const krnet::SizeError& e) {
        set_error(e.what());
        return KRN_ERR_CONFIG;
    } catch (const krnet::DataError& e) {
        set_error(e.what());
        return KRN_ERR_DATA;
    } catch (const krnet::CheckpointError& e) {
        set_error(e.what());
        return KRN_ERR_CHECKPOINT;
    } catch (const std::exception& e) {
        set_error(e.what());
        return KRN_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown failure");
        return KRN_ERR_INTERNAL;
    }
}

krn_status require(bool ok, const char* message) {
    if (ok) return KRN_OK;
    set_error(message);
    return KRN_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string stem_of(const std::string& path) {
    const std::string stem = std::filesystem::path(path).stem().string();
    return stem.empty() ? std::string("model") : stem;
}

std::vector<std::string> split_csv_list(const std::string& text, const char* what) {
    std::vector<std::string> items;
    std::string item;
    for (const char ch : text + ",") {
        if (ch == ',') {
            std::size_t a = 0, b = item.size();
            while (a < b && (item[a] == ' ' || item[a] == '\t')) ++a;
            while (b > a && (item[b - 1] == ' ' || item[b - 1] == '\t')) --b;
            if (a < b) items.push_back(item.substr(a, b - a));
            item.clear();
        } else {
            item += ch;
        }
    }
    if (items.empty())
        throw krnet::ConfigError(std::string(what) + ": expected a comma-separated list");
    return items;
}

std::string format_gradcheck_report(const krnet::GradCheckResult& result, double tolerance) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"class", "param", "max_rel_err", "checked", "status"});
    for (const auto& entry : result.entries) {
        char err[64];
        std::snprintf(err, sizeof(err), "%.3e", entry.max_rel_err);
        cells.push_back({entry.cls, entry.param, err, std::to_string(entry.checked),
                         entry.pass ? "ok" : "FAIL"});
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
    char summary[160];
    std::snprintf(summary, sizeof(summary), "worst relative error %.3e against tolerance %g: %s\n",
                  result.worst_rel_err, tolerance,
                  result.all_pass ? "all gradients verified" : "TOLERANCE EXCEEDED");
    out += summary;
    return out;
}

}  // namespace

extern "C" {

const char* krn_version(void) { return krnet::kVersion; }

const char* krn_last_error(void) { return g_last_error.c_str(); }

krn_status krn_set_num_threads(int n) {
    return guarded([&] { krnet::set_num_threads(n); });
}

void krn_string_free(char* s) { std::free(s); }

krn_status krn_model_load(const char* path, krn_model** out_model) {
    if (krn_status s = require(path != nullptr && out_model != nullptr,
                               "krn_model_load: path and out_model must not be NULL"))
        return s;
    *out_model = nullptr;
    return guarded([&] {
        krnet::LoadedCheckpoint loaded = krnet::load_checkpoint(path);
        *out_model = new krn_model{std::move(loaded.net)};
    });
}

void krn_model_free(krn_model* model) { delete model; }

krn_status krn_model_channels(const krn_model* model, int* out_channels) {
    if (krn_status s = require(model != nullptr && out_channels != nullptr,
                               "krn_model_channels: model and out_channels must not be NULL"))
        return s;
    *out_channels = model->net.config.in_channels;
    return KRN_OK;
}

krn_status krn_denoise_file(krn_model* model, const char* in_path, const char* out_path) {
    if (krn_status s =
            require(model != nullptr && in_path != nullptr && out_path != nullptr,
                    "krn_denoise_file: model, in_path and out_path must not be NULL"))
        return s;
    return guarded([&] {
        const krnet::Image noisy = krnet::read_pnm(in_path);
        const krnet::Image denoised = krnet::denoise_image(model->net, noisy);
        krnet::write_pnm(denoised, out_path);
    });
}

krn_status krn_train_run(const char* config_json, const krn_train_options* options,
                         krn_epoch_fn on_epoch, void* user) {
    if (krn_status s =
            require(config_json != nullptr, "krn_train_run: config_json must not be NULL"))
        return s;
    return guarded([&] {
        const krnet::RunConfig cfg = krnet::parse_run_config(config_json);
        krnet::TrainOptions topts;
        if (options != nullptr) {
            if (options->resume_checkpoint != nullptr)
                topts.resume_checkpoint = options->resume_checkpoint;
            if (options->has_seed) topts.seed_override = options->seed;
            if (options->has_epochs) topts.epochs_override = options->epochs;
        }
        krnet::Trainer trainer(cfg, topts);
        trainer.run([&](int epoch, double lr, double mean_loss) {
            if (on_epoch != nullptr && on_epoch(epoch, lr, mean_loss, user) != 0)
                throw abort_requested{};
        });
    });
}

krn_status krn_eval_run(const char* model_path, const char* manifest_path,
                        const char* noise_json, const krn_eval_options* options,
                        char** out_report) {
    if (krn_status s = require(
            model_path != nullptr && manifest_path != nullptr && out_report != nullptr,
            "krn_eval_run: model_path, manifest_path and out_report must not be NULL"))
        return s;
    *out_report = nullptr;
    return guarded([&] {
        krnet::LoadedCheckpoint loaded = krnet::load_checkpoint(model_path);
        const auto paths = krnet::read_manifest(manifest_path);
        const auto images = krnet::load_images(paths);
        std::vector<std::string> names;
        for (const auto& p : paths)
            names.push_back(std::filesystem::path(p).filename().string());
        const krnet::NoiseSpec noise = noise_json != nullptr
                                           ? krnet::parse_noise_json(noise_json)
                                           : krnet::NoiseSpec(krnet::AwgnSpec{});
        krnet::EvalOptions eopts;
        eopts.label = stem_of(model_path);
        bool csv = false;
        if (options != nullptr) {
            eopts.seed = options->seed;
            eopts.timing = options->timing != 0;
            csv = options->csv != 0;
        }
        krnet::EvalReport report;
        report.rows.push_back(krnet::evaluate(loaded.net, images, names, noise, eopts));
        *out_report = dup_string(krnet::report_render(
            report, csv ? krnet::ReportFormat::Csv : krnet::ReportFormat::Text));
    });
}

krn_status krn_gradcheck_run(const krn_gradcheck_options* options, char** out_report,
                             int* out_pass) {
    if (krn_status s = require(out_pass != nullptr, "krn_gradcheck_run: out_pass must not be NULL"))
        return s;
    *out_pass = 0;
    if (out_report != nullptr) *out_report = nullptr;
    return guarded([&] {
        krnet::NetworkConfig net_cfg = krnet::mini_config();
        krnet::GradCheckOptions gopts;
        if (options != nullptr) {
            if (options->config_json != nullptr)
                net_cfg = krnet::parse_run_config(options->config_json).network;
            gopts.seed = options->seed;
            gopts.tolerance = options->tolerance;
            gopts.rounds = options->rounds;
            if (options->inject_error != nullptr) gopts.inject_error = options->inject_error;
        }
        const krnet::GradCheckResult result = krnet::run_gradcheck(net_cfg, gopts);
        *out_pass = result.all_pass ? 1 : 0;
        if (out_report != nullptr)
            *out_report = dup_string(format_gradcheck_report(result, gopts.tolerance));
    });
}

krn_status krn_synth_data(const char* out_dir, int count, int height, int width, int channels,
                          uint64_t seed) {
    if (krn_status s = require(out_dir != nullptr, "krn_synth_data: out_dir must not be NULL"))
        return s;
    return guarded([&] { krnet::synth_dataset(out_dir, count, height, width, channels, seed); });
}

krn_status krn_ablation_run(const char* config_json, const char* variants,
                            const char* block_counts, char** out_report) {
    if (krn_status s = require(config_json != nullptr && out_report != nullptr,
                               "krn_ablation_run: config_json and out_report must not be NULL"))
        return s;
    *out_report = nullptr;
    return guarded([&] {
        const krnet::RunConfig cfg = krnet::parse_run_config(config_json);

        std::vector<krnet::KrBlockVariant> variant_list;
        if (variants != nullptr) {
            for (const auto& name : split_csv_list(variants, "variants"))
                variant_list.push_back(krnet::variant_from_string(name));
        } else {
            variant_list = {krnet::KrBlockVariant::KR7_3, krnet::KrBlockVariant::KR3_3,
                            krnet::KrBlockVariant::KR7_7};
        }

        std::vector<int> blocks;
        if (block_counts != nullptr) {
            for (const auto& item : split_csv_list(block_counts, "block_counts")) {
                std::size_t used = 0;
                int value = 0;
                try {
                    value = std::stoi(item, &used);
                } catch (const std::exception&) {
                    throw krnet::ConfigError("block_counts: \"" + item + "\" is not an integer");
                }
                if (used != item.size() || value < 1)
                    throw krnet::ConfigError("block_counts: \"" + item +
                                             "\" is not a positive integer");
                blocks.push_back(value);
            }
        } else {
            blocks = {cfg.network.num_blocks};
        }

        const krnet::AblationOutcome outcome = krnet::ablation_run(cfg, variant_list, blocks);

        std::error_code ec;
        std::filesystem::create_directories(cfg.out_dir, ec);
        if (ec)
            throw krnet::DataError(cfg.out_dir + ": cannot create directory: " + ec.message());
        for (const auto& cell : outcome.cells) {
            std::vector<std::vector<std::string>> rows;
            rows.push_back({"epoch", "loss"});
            for (std::size_t e = 0; e < cell.val_loss.size(); ++e) {
                char loss[64];
                std::snprintf(loss, sizeof(loss), "%.9g", cell.val_loss[e]);
                rows.push_back({std::to_string(e + 1), loss});
            }
            const auto path = std::filesystem::path(cfg.out_dir) /
                              ("ablation_" + cell.label + "_val_loss.csv");
            std::FILE* f = std::fopen(path.string().c_str(), "wb");
            if (f == nullptr)
                throw krnet::DataError(path.string() + ": cannot open for writing");
            const std::string text = krnet::render_csv(rows);
            const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
            if (std::fclose(f) != 0 || !ok)
                throw krnet::DataError(path.string() + ": write failed");
        }

        *out_report = dup_string(krnet::ablation_table(outcome));
    });
}

}  // extern "C"
