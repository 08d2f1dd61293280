#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "krnet/config.hpp"
#include "krnet/dataset.hpp"
#include "krnet/error.hpp"
#include "krnet/eval.hpp"
#include "krnet/image.hpp"
#include "krnet/network.hpp"
#include "krnet/noise.hpp"
#include "krnet/rng.hpp"
#include "krnet/synth.hpp"

using namespace krnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("krnet_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

Image random_image(int h, int w, int channels, Rng& rng) {
    Image img(h, w, channels);
    for (double& x : img.v) x = rng.uniform01();
    return img;
}

double psnr_oracle(const Image& a, const Image& b, double peak) {
    double se = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = 0; y < a.h; ++y)
            for (int x = 0; x < a.w; ++x) {
                const double d = a.at(c, y, x) - b.at(c, y, x);
                se += d * d;
                ++count;
            }
    const double mse = se / static_cast<double>(count);
    return 10.0 * std::log10(peak * peak / mse);
}

Network identity_network(int channels = 1) {
    Network net = build_network(mini_config(channels), 1);
    for (Param* p : net.param_list()) std::fill(p->value.begin(), p->value.end(), 0.0);
    return net;
}

}  // namespace

TEST_CASE("psnr agrees with a direct double-loop oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int channels = (trial % 2 == 0) ? 1 : 3;
        const int h = 2 + static_cast<int>(rng.uniform_int(6));
        const int w = 2 + static_cast<int>(rng.uniform_int(6));
        Image a = random_image(h, w, channels, rng);
        Image b = random_image(h, w, channels, rng);
        CHECK(std::abs(psnr(a, b) - psnr_oracle(a, b, 1.0)) <= 1e-10);
    }
}

TEST_CASE("one quantization step of error scores 48.1308 dB") {
    Image ref(4, 4, 1);
    Image test(4, 4, 1);
    for (double& x : test.v) x = 1.0 / 255.0;

    const double db = psnr(ref, test);
    CHECK(db == doctest::Approx(48.1308).epsilon(1e-5));
    CHECK(std::abs(db - 10.0 * std::log10(255.0 * 255.0)) < 1e-10);
}

TEST_CASE("psnr boundary values") {
    Image a(3, 3, 1);
    Image b = a;
    CHECK(std::isinf(psnr(a, b)));
    CHECK(psnr(a, b) > 0);

    Image unit(3, 3, 1);
    for (double& x : unit.v) x = 1.0;
    CHECK(psnr(a, unit) == 0.0);  // mse equals peak^2
}

TEST_CASE("psnr is scale-consistent in the peak parameter") {
    Rng rng(5);
    Image a = random_image(5, 5, 3, rng);
    Image b = random_image(5, 5, 3, rng);

    Image a255 = a, b255 = b;
    for (double& x : a255.v) x *= 255.0;
    for (double& x : b255.v) x *= 255.0;
    CHECK(psnr(a, b, 1.0) == doctest::Approx(psnr(a255, b255, 255.0)).epsilon(1e-12));
}

TEST_CASE("psnr input validation") {
    Image a(3, 3, 1), odd(3, 4, 1), rgb(3, 3, 3);
    CHECK_THROWS_AS(psnr(a, odd), ShapeError);
    CHECK_THROWS_AS(psnr(a, rgb), ShapeError);
    CHECK_THROWS_AS(psnr(a, a, 0.0), ConfigError);
    CHECK_THROWS_AS(psnr(a, a, -1.0), ConfigError);
}

TEST_CASE("psnr never rises with extra noise energy") {
    Rng rng(7);
    Image ref = random_image(16, 16, 1, rng);
    Image eta(16, 16, 1);
    for (double& x : eta.v) x = rng.gaussian();

    double prev = psnr(ref, ref);
    for (double alpha : {0.01, 0.05, 0.1, 0.5, 1.0}) {
        Image noisy = ref;
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy.v[i] += alpha * eta.v[i];
        const double cur = psnr(ref, noisy);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("clipping toward the unit range never lowers psnr") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Image ref = random_image(12, 12, 1, rng);
        Image noisy = ref;
        Rng noise_rng(100 + static_cast<std::uint64_t>(trial));
        for (double& x : noisy.v) x += 0.3 * noise_rng.gaussian();
        CHECK(psnr(ref, clip01(noisy)) >= psnr(ref, noisy));
    }
}

TEST_CASE("denoise_image on the identity network is clipped pass-through") {
    Network net = identity_network();
    Rng rng(11);
    Image noisy = random_image(20, 20, 1, rng);
    for (double& x : noisy.v) x = x * 1.6 - 0.3;  // push outside [0,1]

    Image out = denoise_image(net, noisy);
    CHECK(out.v == clip01(noisy).v);

    Image again = denoise_image(net, noisy);
    CHECK(again.v == out.v);

    Image rgb(8, 8, 3);
    CHECK_THROWS_AS(denoise_image(net, rgb), ConfigError);
}

TEST_CASE("evaluate scores the identity network at the noisy baseline") {
    Network net = identity_network();
    Rng rng(13);
    std::vector<Image> images{random_image(24, 24, 1, rng), random_image(20, 28, 1, rng)};
    std::vector<std::string> names{"a.pgm", "b.pgm"};

    EvalOptions opts;
    opts.label = "identity";
    EvalRow row = evaluate(net, images, names, AwgnSpec{25.0}, opts);

    CHECK(row.label == "identity");
    CHECK(row.noise == "awgn(sigma=25)");
    REQUIRE(row.psnr_in.size() == 2);
    REQUIRE(row.psnr_out.size() == 2);
    CHECK(row.image_names == names);
    CHECK(row.skipped == 0);
    CHECK(row.wall_seconds < 0.0);  // timing was not requested
    for (std::size_t i = 0; i < 2; ++i) CHECK(row.psnr_out[i] == row.psnr_in[i]);

    // baseline psnr at sigma 25 on unit-range content sits in a sane band
    for (double db : row.psnr_in) {
        CHECK(db > 15.0);
        CHECK(db < 26.0);
    }
}

TEST_CASE("evaluate means are the arithmetic means of per-image values") {
    Network net = identity_network();
    Rng rng(17);
    std::vector<Image> images;
    std::vector<std::string> names;
    for (int i = 0; i < 5; ++i) {
        images.push_back(random_image(16, 16, 1, rng));
        names.push_back("img" + std::to_string(i));
    }
    EvalRow row = evaluate(net, images, names, AwgnSpec{20.0}, EvalOptions{});

    double want_in = 0.0, want_out = 0.0;
    for (std::size_t i = 0; i < row.psnr_in.size(); ++i) {
        want_in += row.psnr_in[i];
        want_out += row.psnr_out[i];
    }
    want_in /= static_cast<double>(row.psnr_in.size());
    want_out /= static_cast<double>(row.psnr_out.size());
    CHECK(std::abs(row.mean_in - want_in) <= 1e-12);
    CHECK(std::abs(row.mean_out - want_out) <= 1e-12);
}

TEST_CASE("evaluate is deterministic per seed") {
    Network net = build_network(mini_config(), 19);
    Rng rng(20);
    std::vector<Image> images{random_image(20, 20, 1, rng)};
    std::vector<std::string> names{"x"};

    EvalOptions opts;
    opts.seed = 5;
    EvalRow a = evaluate(net, images, names, AwgnSpec{25.0}, opts);
    EvalRow b = evaluate(net, images, names, AwgnSpec{25.0}, opts);
    CHECK(a.psnr_in == b.psnr_in);
    CHECK(a.psnr_out == b.psnr_out);

    opts.seed = 6;
    EvalRow c = evaluate(net, images, names, AwgnSpec{25.0}, opts);
    CHECK(a.psnr_in != c.psnr_in);
}

TEST_CASE("evaluate skips channel mismatches and refuses empty work") {
    Network net = identity_network();
    Rng rng(23);
    std::vector<Image> images{random_image(16, 16, 1, rng), random_image(16, 16, 3, rng)};
    std::vector<std::string> names{"gray", "rgb"};

    EvalRow row = evaluate(net, images, names, AwgnSpec{25.0}, EvalOptions{});
    CHECK(row.skipped == 1);
    REQUIRE(row.psnr_in.size() == 1);
    CHECK(row.image_names == std::vector<std::string>{"gray"});

    std::vector<Image> all_rgb{random_image(16, 16, 3, rng)};
    std::vector<std::string> one{"rgb"};
    CHECK_THROWS_AS(evaluate(net, all_rgb, one, AwgnSpec{25.0}, EvalOptions{}), DataError);

    std::vector<Image> none;
    std::vector<std::string> nada;
    CHECK_THROWS_AS(evaluate(net, none, nada, AwgnSpec{25.0}, EvalOptions{}), DataError);

    CHECK_THROWS_AS(evaluate(net, images, one, AwgnSpec{25.0}, EvalOptions{}), ConfigError);
}

TEST_CASE("evaluate times itself only when asked") {
    Network net = identity_network();
    Rng rng(29);
    std::vector<Image> images{random_image(16, 16, 1, rng)};
    std::vector<std::string> names{"x"};

    EvalOptions opts;
    opts.timing = true;
    EvalRow row = evaluate(net, images, names, AwgnSpec{25.0}, opts);
    CHECK(row.wall_seconds >= 0.0);
}

TEST_CASE("sigma zero scores infinite psnr end to end") {
    Network net = identity_network();
    Rng rng(31);
    std::vector<Image> images{random_image(16, 16, 1, rng)};
    std::vector<std::string> names{"x"};
    EvalRow row = evaluate(net, images, names, AwgnSpec{0.0}, EvalOptions{});
    CHECK(std::isinf(row.psnr_in[0]));
    CHECK(std::isinf(row.psnr_out[0]));

    EvalReport report;
    report.rows.push_back(row);
    const std::string text = report_render(report, ReportFormat::Text);
    CHECK(text.find("inf") != std::string::npos);
    const std::string csv = report_render(report, ReportFormat::Csv);
    CHECK(csv.find("inf") != std::string::npos);
}

TEST_CASE("text report formats psnr to two decimals") {
    EvalRow row;
    row.label = "model";
    row.noise = "awgn(sigma=25)";
    row.image_names = {"a"};
    row.psnr_in = {21.987654};
    row.psnr_out = {26.123456};
    row.mean_in = 21.987654;
    row.mean_out = 26.123456;

    EvalReport report;
    report.rows.push_back(row);
    const std::string text = report_render(report, ReportFormat::Text);
    CHECK(text.find("26.12") != std::string::npos);
    CHECK(text.find("21.99") != std::string::npos);
    CHECK(text.find("26.123456") == std::string::npos);
    CHECK(text.find("label") != std::string::npos);
    CHECK(text.find("wall_s") == std::string::npos);  // no timing column unmeasured

    row.wall_seconds = 1.25;
    EvalReport timed;
    timed.rows.push_back(row);
    CHECK(report_render(timed, ReportFormat::Text).find("wall_s") != std::string::npos);
}

TEST_CASE("empty report renders as a bare header") {
    EvalReport report;
    const std::string text = report_render(report, ReportFormat::Text);
    CHECK(text.find("label") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);

    const std::string csv = report_render(report, ReportFormat::Csv);
    CHECK(csv == "label,noise,image,psnr_in,psnr_out\n");
}

TEST_CASE("csv report lists per-image rows plus a mean row") {
    EvalRow row;
    row.label = "m";
    row.noise = "awgn(sigma=25)";
    row.image_names = {"a.pgm", "b.pgm"};
    row.psnr_in = {20.0, 22.0};
    row.psnr_out = {24.0, 26.0};
    row.mean_in = 21.0;
    row.mean_out = 25.0;
    EvalReport report;
    report.rows.push_back(row);

    const std::string csv = report_render(report, ReportFormat::Csv);
    auto rows = parse_csv(csv);
    REQUIRE(rows.size() == 4);  // header + two images + mean
    CHECK(rows[0] == std::vector<std::string>{"label", "noise", "image", "psnr_in", "psnr_out"});
    CHECK(rows[1][2] == "a.pgm");
    CHECK(rows[2][2] == "b.pgm");
    CHECK(rows[3][2] == "mean");
    CHECK(rows[1][3] == "20.000000");
    CHECK(rows[3][4] == "25.000000");
}

TEST_CASE("csv escaping survives a round trip") {
    std::vector<std::vector<std::string>> rows = {
        {"plain", "with,comma", "with\"quote"},
        {"multi\nline", "", "tail"},
    };
    const std::string text = render_csv(rows);
    CHECK(parse_csv(text) == rows);
    CHECK(render_csv(parse_csv(text)) == text);

    // quoting is minimal: only fields that need it
    CHECK(text.find("plain") == 0);
    CHECK(text.find("\"with,comma\"") != std::string::npos);
    CHECK(text.find("\"with\"\"quote\"") != std::string::npos);
}

TEST_CASE("csv report round trip is byte-identical") {
    Network net = identity_network();
    Rng rng(37);
    std::vector<Image> images{random_image(16, 16, 1, rng), random_image(16, 16, 1, rng)};
    std::vector<std::string> names{"one.pgm", "two.pgm"};
    EvalRow row = evaluate(net, images, names, AwgnSpec{25.0}, EvalOptions{});
    EvalReport report;
    report.rows.push_back(row);

    const std::string csv = report_render(report, ReportFormat::Csv);
    CHECK(render_csv(parse_csv(csv)) == csv);
}

TEST_CASE("csv parser flags malformed input") {
    CHECK_THROWS_AS(parse_csv("a,\"unterminated\n"), DataError);
    CHECK(parse_csv("").empty());
    auto rows = parse_csv("a,b\n");  // trailing newline: exactly one row
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<std::string>{"a", "b"});
    auto bare = parse_csv("a,b");  // unterminated final line still parses
    REQUIRE(bare.size() == 1);
    CHECK(bare[0] == std::vector<std::string>{"a", "b"});
}

TEST_CASE("ablation run trains every cell and records comparable series") {
    TempDir dir("ablate");
    RunConfig cfg;
    cfg.network = mini_config();
    cfg.train.epochs = 2;
    cfg.train.batch_size = 4;
    cfg.train.patch_size = 18;
    cfg.train.seed = 9;
    cfg.train.weight_decay = 0.0;
    cfg.noise = AwgnSpec{25.0};
    cfg.data.train_manifest = synth_dataset(dir.str() + "/train", 3, 24, 24, 1, 7);
    cfg.data.val_manifest = synth_dataset(dir.str() + "/val", 2, 24, 24, 1, 8);
    cfg.data.count_per_image = 2;
    cfg.out_dir = dir.str() + "/out";

    std::vector<std::string> progress_labels;
    AblationOutcome outcome = ablation_run(
        cfg, {KrBlockVariant::KR7_3, KrBlockVariant::KR3_3}, {1},
        [&](const std::string& label, int epoch) {
            if (epoch == 1) progress_labels.push_back(label);
        });

    REQUIRE(outcome.cells.size() == 2);
    CHECK(outcome.cells[0].label == "kr7_3_blocks1");
    CHECK(outcome.cells[1].label == "kr3_3_blocks1");
    CHECK(progress_labels == std::vector<std::string>{"kr7_3_blocks1", "kr3_3_blocks1"});
    REQUIRE(outcome.report.rows.size() == 2);
    CHECK(outcome.report.rows[0].label == "kr7_3_blocks1");

    for (const AblationCell& cell : outcome.cells) {
        CHECK(cell.param_count > 0);
        REQUIRE(cell.val_loss.size() == 2);  // one entry per epoch
        for (double l : cell.val_loss) {
            CHECK(l > 0.0);
            CHECK(std::isfinite(l));
        }
    }
    CHECK(outcome.cells[0].param_count != outcome.cells[1].param_count);

    const std::string table = ablation_table(outcome);
    CHECK(table.find("kr7_3_blocks1") != std::string::npos);
    CHECK(table.find("kr3_3_blocks1") != std::string::npos);
    CHECK(table.find("params") != std::string::npos);

    // identical call, identical outcome
    AblationOutcome again =
        ablation_run(cfg, {KrBlockVariant::KR7_3, KrBlockVariant::KR3_3}, {1});
    CHECK(again.cells[0].val_loss == outcome.cells[0].val_loss);
    CHECK(again.cells[1].val_loss == outcome.cells[1].val_loss);
    CHECK(ablation_table(again) == table);
    CHECK(report_render(again.report, ReportFormat::Text) ==
          report_render(outcome.report, ReportFormat::Text));
}

TEST_CASE("ablation run demands manifests and valid cells") {
    TempDir dir("ablate_err");
    RunConfig cfg;
    cfg.network = mini_config();
    cfg.train.patch_size = 18;
    cfg.data.train_manifest = synth_dataset(dir.str() + "/train", 2, 24, 24, 1, 7);
    cfg.out_dir = dir.str() + "/out";

    // no validation manifest
    CHECK_THROWS_AS(ablation_run(cfg, {KrBlockVariant::KR7_3}, {1}), ConfigError);

    cfg.data.val_manifest = synth_dataset(dir.str() + "/val", 1, 24, 24, 1, 8);
    CHECK_THROWS_AS(ablation_run(cfg, {}, {1}), ConfigError);
    CHECK_THROWS_AS(ablation_run(cfg, {KrBlockVariant::KR7_3}, {}), ConfigError);
    CHECK_THROWS_AS(ablation_run(cfg, {KrBlockVariant::KR7_3}, {0}), ConfigError);

    // a block count that pushes the receptive field past the patch size names
    // the offending cell
    try {
        ablation_run(cfg, {KrBlockVariant::KR7_7}, {2});
        FAIL("cell with receptive field beyond the patch must be rejected");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("kr7_7") != std::string::npos);
    }
}
