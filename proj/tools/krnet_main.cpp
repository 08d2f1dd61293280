// Command-line front end. Everything goes through the public C API in
// krnet.h; this file owns flag parsing, file slurping and exit codes only.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "krnet.h"

namespace {

int fail_status(krn_status status) {
    std::fprintf(stderr, "error: %s\n", krn_last_error());
    return static_cast<int>(status);
}

int fail_config(const std::string& message) {
    std::fprintf(stderr, "error: %s\n", message.c_str());
    return static_cast<int>(KRN_ERR_CONFIG);
}

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return !in.bad();
}

int print_epoch_line(int epoch, double lr, double mean_loss, void*) {
    nlohmann::json line;
    line["epoch"] = epoch;
    line["lr"] = lr;
    line["mean_loss"] = mean_loss;
    std::fputs((line.dump() + "\n").c_str(), stdout);
    std::fflush(stdout);
    return 0;
}

struct TrainArgs {
    std::string config_path;
    std::string resume;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int epochs = 0;
    bool has_epochs = false;
};

int run_train(const TrainArgs& args) {
    std::string config_text;
    if (!read_file(args.config_path, config_text))
        return fail_config(args.config_path + ": cannot open config file");
    krn_train_options opts{};
    opts.resume_checkpoint = args.resume.empty() ? nullptr : args.resume.c_str();
    opts.has_seed = args.has_seed ? 1 : 0;
    opts.seed = args.seed;
    opts.has_epochs = args.has_epochs ? 1 : 0;
    opts.epochs = args.epochs;
    const krn_status status = krn_train_run(config_text.c_str(), &opts, print_epoch_line, nullptr);
    if (status != KRN_OK) return fail_status(status);
    return 0;
}

int run_denoise(const std::string& model_path, const std::string& in_path,
                const std::string& out_path) {
    krn_model* model = nullptr;
    krn_status status = krn_model_load(model_path.c_str(), &model);
    if (status != KRN_OK) return fail_status(status);
    status = krn_denoise_file(model, in_path.c_str(), out_path.c_str());
    krn_model_free(model);
    if (status != KRN_OK) return fail_status(status);
    return 0;
}

struct EvalArgs {
    std::string model_path;
    std::string manifest_path;
    std::string noise_json;
    std::uint64_t seed = 1;
    std::string format = "text";
    bool timing = false;
};

int run_eval(const EvalArgs& args) {
    krn_eval_options opts{};
    opts.seed = args.seed;
    opts.timing = args.timing ? 1 : 0;
    opts.csv = args.format == "csv" ? 1 : 0;
    char* report = nullptr;
    const krn_status status = krn_eval_run(args.model_path.c_str(), args.manifest_path.c_str(),
                                           args.noise_json.c_str(), &opts, &report);
    if (status != KRN_OK) return fail_status(status);
    std::fputs(report, stdout);
    krn_string_free(report);
    return 0;
}

struct GradcheckArgs {
    std::string config_path;
    std::uint64_t seed = 1;
    double tolerance = 1e-4;
    int rounds = 1;
    std::string inject_error;
};

int run_gradcheck(const GradcheckArgs& args) {
    std::string config_text;
    if (!args.config_path.empty() && !read_file(args.config_path, config_text))
        return fail_config(args.config_path + ": cannot open config file");
    krn_gradcheck_options opts{};
    opts.config_json = args.config_path.empty() ? nullptr : config_text.c_str();
    opts.seed = args.seed;
    opts.tolerance = args.tolerance;
    opts.rounds = args.rounds;
    opts.inject_error = args.inject_error.empty() ? nullptr : args.inject_error.c_str();
    char* report = nullptr;
    int pass = 0;
    const krn_status status = krn_gradcheck_run(&opts, &report, &pass);
    if (status != KRN_OK) return fail_status(status);
    std::fputs(report, stdout);
    krn_string_free(report);
    return pass ? 0 : 1;  // an exceedance is a check result, not a runtime error
}

struct SynthArgs {
    std::string out_dir;
    int count = 16;
    std::string size = "32x32";
    int channels = 1;
    std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& args) {
    int h = 0, w = 0;
    char extra = 0;
    if (std::sscanf(args.size.c_str(), "%dx%d%c", &h, &w, &extra) != 2 || h < 1 || w < 1)
        return fail_config("--size: expected HxW with positive integers, got \"" + args.size +
                           "\"");
    const krn_status status =
        krn_synth_data(args.out_dir.c_str(), args.count, h, w, args.channels, args.seed);
    if (status != KRN_OK) return fail_status(status);
    return 0;
}

struct AblateArgs {
    std::string config_path;
    std::string variants;
    std::string blocks;
};

int run_ablate(const AblateArgs& args) {
    std::string config_text;
    if (!read_file(args.config_path, config_text))
        return fail_config(args.config_path + ": cannot open config file");
    char* report = nullptr;
    const krn_status status =
        krn_ablation_run(config_text.c_str(), args.variants.empty() ? nullptr : args.variants.c_str(),
                         args.blocks.empty() ? nullptr : args.blocks.c_str(), &report);
    if (status != KRN_OK) return fail_status(status);
    std::fputs(report, stdout);
    krn_string_free(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("krnet ") + krn_version() +
                 " — kernel-regulation residual image denoiser"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads,
                   "Worker threads for all commands; < 1 means the hardware default")
        ->default_val(0);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a model from a JSON run config");
    train->add_option("config", train_args.config_path, "Path to the JSON run config")
        ->required();
    train->add_option("--resume", train_args.resume,
                      "Checkpoint to resume from (its embedded config takes over)");
    auto* seed_opt = train->add_option("--seed", train_args.seed,
                                       "Override the config's seed; fresh runs only (default: "
                                       "config value)");
    auto* epochs_opt =
        train->add_option("--epochs", train_args.epochs,
                          "Override the config's total epoch count (default: config value)");

    auto* denoise = app.add_subcommand("denoise", "Denoise one PNM image with a trained model");
    std::string model_path, in_path, out_path;
    denoise->add_option("--model", model_path, "Model or checkpoint file (.krn)")->required();
    denoise->add_option("--in", in_path, "Input PNM image (binary P5/P6)")->required();
    denoise->add_option("--out", out_path, "Output PNM path")->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Corrupt a clean image set, denoise it and report PSNR");
    eval->add_option("--model", eval_args.model_path, "Model or checkpoint file (.krn)")
        ->required();
    eval->add_option("--manifest", eval_args.manifest_path, "Manifest of clean images")
        ->required();
    eval->add_option("--noise", eval_args.noise_json, "Noise spec as JSON")
        ->default_val(R"({"kind":"awgn","sigma":25})");
    eval->add_option("--seed", eval_args.seed, "Noise RNG seed")->default_val(1);
    eval->add_option("--format", eval_args.format, "Report format")
        ->default_val("text")
        ->check(CLI::IsMember({"text", "csv"}));
    eval->add_flag("--timing", eval_args.timing,
                   "Measure wall time and add it to the report (breaks byte-determinism)");

    GradcheckArgs gc_args;
    auto* gradcheck = app.add_subcommand(
        "gradcheck", "Finite-difference check of every backward pass; exit 1 on exceedance");
    gradcheck->add_option("--config", gc_args.config_path,
                          "Run config whose network section to check (default: built-in mini)");
    gradcheck->add_option("--seed", gc_args.seed, "Base RNG seed")->default_val(1);
    gradcheck->add_option("--tolerance", gc_args.tolerance, "Maximum allowed relative error")
        ->default_val(1e-4);
    gradcheck->add_option("--rounds", gc_args.rounds, "Independent seeded rounds")
        ->default_val(1);
    gradcheck
        ->add_option("--inject-error", gc_args.inject_error,
                     "Test hook: corrupt one analytic gradient of the named class")
        ->group("");  // hidden from --help

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth-data", "Generate a deterministic synthetic image set");
    synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--count", synth_args.count, "Number of images")->default_val(16);
    synth->add_option("--size", synth_args.size, "Image size as HxW")->default_val("32x32");
    synth->add_option("--channels", synth_args.channels, "1 (PGM) or 3 (PPM)")->default_val(1);
    synth->add_option("--seed", synth_args.seed, "RNG seed")->default_val(1);

    AblateArgs ablate_args;
    auto* ablate = app.add_subcommand(
        "ablate", "Train every (variant, block count) cell and print a comparison table");
    ablate->add_option("config", ablate_args.config_path, "Path to the JSON run config")
        ->required();
    ablate->add_option("--variants", ablate_args.variants,
                       "Comma-separated variants (default: kr7_3,kr3_3,kr7_7)");
    ablate->add_option("--blocks", ablate_args.blocks,
                       "Comma-separated block counts (default: the config's num_blocks)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(KRN_ERR_CONFIG);
    }

    if (threads != 0) {
        if (krn_set_num_threads(threads) != KRN_OK) return fail_status(KRN_ERR_INTERNAL);
    }

    if (train->parsed()) {
        train_args.has_seed = seed_opt->count() > 0;
        train_args.has_epochs = epochs_opt->count() > 0;
        return run_train(train_args);
    }
    if (denoise->parsed()) return run_denoise(model_path, in_path, out_path);
    if (eval->parsed()) return run_eval(eval_args);
    if (gradcheck->parsed()) return run_gradcheck(gc_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (ablate->parsed()) return run_ablate(ablate_args);
    return fail_config("no subcommand given");
}
