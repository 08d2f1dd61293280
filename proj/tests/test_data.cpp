#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "krnet/dataset.hpp"
#include "krnet/error.hpp"
#include "krnet/image.hpp"
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

std::vector<unsigned char> bytes_of(const std::string& header, std::vector<unsigned char> payload) {
    std::vector<unsigned char> out(header.begin(), header.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Image random_image(int h, int w, int channels, Rng& rng) {
    Image img(h, w, channels);
    for (double& x : img.v) x = rng.uniform01();
    return img;
}

}  // namespace

TEST_CASE("pgm bytes scale to unit floats") {
    Image img = parse_pnm(bytes_of("P5\n2 2\n255\n", {0, 128, 255, 64}));
    CHECK(img.h == 2);
    CHECK(img.w == 2);
    CHECK(img.channels == 1);
    CHECK(img.v[0] == 0.0);
    CHECK(img.v[1] == 128.0 / 255.0);
    CHECK(img.v[2] == 1.0);
    CHECK(img.v[3] == 64.0 / 255.0);
}

TEST_CASE("ppm interleaved bytes land in channel planes") {
    Image red = parse_pnm(bytes_of("P6\n1 1\n255\n", {255, 0, 0}));
    CHECK(red.channels == 3);
    CHECK(red.at(0, 0, 0) == 1.0);  // R
    CHECK(red.at(1, 0, 0) == 0.0);  // G
    CHECK(red.at(2, 0, 0) == 0.0);  // B

    Image px = parse_pnm(bytes_of("P6\n2 1\n255\n", {10, 20, 30, 40, 50, 60}));
    CHECK(px.at(0, 0, 1) == 40.0 / 255.0);
    CHECK(px.at(1, 0, 1) == 50.0 / 255.0);
    CHECK(px.at(2, 0, 1) == 60.0 / 255.0);
}

TEST_CASE("pnm header tolerates comments and whitespace") {
    Image img = parse_pnm(bytes_of("P5 # magic\n# a comment line\n 2\t2 \n255\n", {1, 2, 3, 4}));
    CHECK(img.h == 2);
    CHECK(img.w == 2);
    CHECK(img.v[3] == 4.0 / 255.0);
}

TEST_CASE("pnm parse failures are distinct and named") {
    // wrong magic
    CHECK_THROWS_AS(parse_pnm(bytes_of("P4\n2 2\n255\n", {0, 0, 0, 0})), DataError);
    // unsupported maxval
    CHECK_THROWS_AS(parse_pnm(bytes_of("P5\n2 2\n254\n", {0, 0, 0, 0})), DataError);
    CHECK_THROWS_AS(parse_pnm(bytes_of("P5\n2 2\n65535\n", {0, 0, 0, 0})), DataError);
    // truncated payload
    CHECK_THROWS_AS(parse_pnm(bytes_of("P5\n2 2\n255\n", {0, 0, 0})), DataError);
    CHECK_THROWS_AS(parse_pnm(bytes_of("P6\n2 2\n255\n", {0, 0, 0, 0})), DataError);
    // nonsense dimensions
    CHECK_THROWS_AS(parse_pnm(bytes_of("P5\n0 2\n255\n", {})), DataError);

    const char* messages[] = {"P4\n2 2\n255\n", "P5\n2 2\n254\n"};
    std::set<std::string> texts;
    for (const char* h : messages) {
        try {
            parse_pnm(bytes_of(h, {0, 0, 0, 0}));
        } catch (const DataError& e) {
            texts.insert(e.what());
        }
    }
    CHECK(texts.size() == 2);  // the failure modes read differently
}

TEST_CASE("quantization rounds and clamps") {
    Image img(1, 4, 1);
    img.v = {1.2, -0.5, 0.4 / 255.0, 0.6 / 255.0};
    std::vector<unsigned char> bytes = pnm_bytes(img);
    // payload is the last 4 bytes
    REQUIRE(bytes.size() >= 4);
    CHECK(bytes[bytes.size() - 4] == 255);  // clamped high
    CHECK(bytes[bytes.size() - 3] == 0);    // clamped low
    CHECK(bytes[bytes.size() - 2] == 0);    // rounds down
    CHECK(bytes[bytes.size() - 1] == 1);    // rounds up
}

TEST_CASE("write-read round trip stays within half a quantization step") {
    Rng rng(3);
    TempDir dir("pnm_rt");
    for (int channels : {1, 3}) {
        Image img = random_image(9, 7, channels, rng);
        const std::string path =
            dir.str() + (channels == 1 ? "/round.pgm" : "/round.ppm");
        write_pnm(img, path);
        Image back = read_pnm(path);
        REQUIRE(back.h == img.h);
        REQUIRE(back.w == img.w);
        REQUIRE(back.channels == img.channels);
        for (std::size_t i = 0; i < img.size(); ++i)
            CHECK(std::abs(back.v[i] - img.v[i]) <= 1.0 / 510.0);
    }
}

TEST_CASE("write of a read image is the identity on canonical files") {
    Rng rng(5);
    TempDir dir("pnm_id");
    for (int channels : {1, 3}) {
        Image img = random_image(6, 8, channels, rng);
        const std::string a = dir.str() + "/a.pnm";
        const std::string b = dir.str() + "/b.pnm";
        write_pnm(img, a);

        Image once = read_pnm(a);
        write_pnm(once, b);

        std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
        std::vector<char> ba((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        std::vector<char> bb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        CHECK(ba == bb);

        CHECK(pnm_bytes(once) == pnm_bytes(read_pnm(b)));
    }
}

TEST_CASE("read_pnm reports a missing file") {
    CHECK_THROWS_AS(read_pnm("/nonexistent/image.pgm"), DataError);
}

TEST_CASE("image and tensor views agree") {
    Rng rng(7);
    Image img = random_image(5, 4, 3, rng);
    Tensor4 t = image_to_tensor(img);
    CHECK(t.n == 1);
    CHECK(t.c == 3);
    CHECK(t.h == 5);
    CHECK(t.w == 4);
    CHECK(t.at(0, 2, 4, 3) == img.at(2, 4, 3));

    Image back = tensor_to_image(t);
    CHECK(back.v == img.v);

    Tensor4 batch(2, 1, 2, 2);
    batch.v = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(tensor_to_image(batch, 1).v == std::vector<double>{5, 6, 7, 8});
}

TEST_CASE("clip01 clamps exactly to the unit interval") {
    Image img(1, 5, 1);
    img.v = {-0.2, 0.0, 0.5, 1.0, 1.7};
    Image c = clip01(img);
    CHECK(c.v == std::vector<double>{0.0, 0.0, 0.5, 1.0, 1.0});
}

TEST_CASE("manifest parsing resolves relative paths and skips noise") {
    TempDir dir("manifest");
    fs::create_directories(dir.path / "sub");
    {
        std::ofstream m(dir.path / "sub" / "list.txt");
        m << "# corpus\n";
        m << "a.pgm\n";
        m << "\n";
        m << "   \n";
        m << "/abs/b.pgm\n";
        m << "nested/c.pgm   \n";  // trailing spaces are trimmed
    }
    auto paths = read_manifest((dir.path / "sub" / "list.txt").string());
    REQUIRE(paths.size() == 3);
    CHECK(paths[0] == (dir.path / "sub" / "a.pgm").string());
    CHECK(paths[1] == "/abs/b.pgm");
    CHECK(paths[2] == (dir.path / "sub" / "nested/c.pgm").string());

    CHECK_THROWS_AS(read_manifest(dir.str() + "/absent.txt"), DataError);
}

TEST_CASE("load_images reads every manifest entry in order") {
    TempDir dir("load");
    Rng rng(9);
    Image a = random_image(4, 4, 1, rng);
    Image b = random_image(6, 5, 1, rng);
    write_pnm(a, dir.str() + "/a.pgm");
    write_pnm(b, dir.str() + "/b.pgm");

    auto images = load_images({dir.str() + "/a.pgm", dir.str() + "/b.pgm"});
    REQUIRE(images.size() == 2);
    CHECK(images[0].h == 4);
    CHECK(images[1].h == 6);
    CHECK(images[1].w == 5);
}

TEST_CASE("sigma zero leaves the image untouched") {
    Rng img_rng(11), noise_rng(12);
    Image img = random_image(8, 8, 3, img_rng);
    Image noisy = add_noise(img, AwgnSpec{0.0}, noise_rng);
    CHECK(noisy.v == img.v);
}

TEST_CASE("awgn statistics match the requested sigma") {
    Rng rng(13);
    Image img(1000, 1000, 1);
    for (double& x : img.v) x = 0.5;

    Image noisy = add_noise(img, AwgnSpec{25.0}, rng);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double eta = noisy.v[i] - img.v[i];
        sum += eta;
        sum_sq += eta * eta;
    }
    const double n = static_cast<double>(img.size());
    const double mean = sum / n;
    const double std_dev = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean) <= 5e-4);
    CHECK(std::abs(std_dev - 25.0 / 255.0) <= 0.01 * (25.0 / 255.0));
}

TEST_CASE("multi-channel noise honors per-channel sigmas") {
    Rng rng(17);
    Image img(512, 512, 3);
    for (double& x : img.v) x = 0.5;

    Image noisy = add_noise(img, MultiChannelSpec{40.0, 20.0, 30.0}, rng);
    const double want[3] = {40.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0};
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sum_sq = 0.0;
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                const double eta = noisy.at(c, y, x) - img.at(c, y, x);
                sum += eta;
                sum_sq += eta * eta;
            }
        const double n = static_cast<double>(img.h) * img.w;
        const double mean = sum / n;
        const double std_dev = std::sqrt(sum_sq / n - mean * mean);
        CHECK(std::abs(std_dev - want[c]) <= 0.02 * want[c]);
    }
}

TEST_CASE("multi-channel noise channels are uncorrelated") {
    Rng rng(19);
    Image img(1000, 1000, 3);
    Image noisy = add_noise(img, MultiChannelSpec{30.0, 30.0, 30.0}, rng);

    const double n = static_cast<double>(img.h) * img.w;
    double mean[3] = {0, 0, 0};
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) mean[c] += noisy.at(c, y, x);
        mean[c] /= n;
    }
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            double cov = 0.0, va = 0.0, vb = 0.0;
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x) {
                    const double da = noisy.at(a, y, x) - mean[a];
                    const double db = noisy.at(b, y, x) - mean[b];
                    cov += da * db;
                    va += da * da;
                    vb += db * db;
                }
            CHECK(std::abs(cov / std::sqrt(va * vb)) < 0.01);
        }
}

TEST_CASE("noise is never clipped") {
    Rng rng(23);
    Image img(64, 64, 1);
    for (double& x : img.v) x = 0.0;  // sits on the boundary
    Image low = add_noise(img, AwgnSpec{50.0}, rng);
    CHECK(*std::min_element(low.v.begin(), low.v.end()) < 0.0);

    for (double& x : img.v) x = 1.0;
    Image high = add_noise(img, AwgnSpec{50.0}, rng);
    CHECK(*std::max_element(high.v.begin(), high.v.end()) > 1.0);
}

TEST_CASE("blind noise draws per-channel sigmas in range") {
    Rng rng(29);
    Image img(8, 8, 3);
    std::vector<double> sigmas;
    add_noise(img, BlindSpec{5.0, 10.0}, rng, &sigmas);
    REQUIRE(sigmas.size() == 3);
    for (double s : sigmas) {
        CHECK(s >= 5.0);
        CHECK(s <= 10.0);
    }

    // distinct draws per channel, new draws per call
    std::vector<double> again;
    add_noise(img, BlindSpec{0.0, 55.0}, rng, &again);
    REQUIRE(again.size() == 3);
    CHECK((again[0] != again[1] || again[1] != again[2]));
}

TEST_CASE("blind sigma draws are uniform on the interval") {
    Rng rng(31);
    Image tiny(1, 1, 1);
    const int n = 10000;
    std::vector<double> draws;
    draws.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> s;
        add_noise(tiny, BlindSpec{0.0, 55.0}, rng, &s);
        draws.push_back(s[0] / 55.0);
    }
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        ks = std::max({ks, std::abs(draws[static_cast<std::size_t>(i)] - lo),
                       std::abs(draws[static_cast<std::size_t>(i)] - hi)});
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));  // 1% critical value
}

TEST_CASE("explicit per-channel sigmas reproduce the multi-channel path") {
    Rng a(37), b(37);
    Rng img_rng(38);
    Image img = random_image(16, 16, 3, img_rng);
    Image via_spec = add_noise(img, MultiChannelSpec{40.0, 20.0, 30.0}, a);
    Image via_list = add_noise_with_sigmas(img, {40.0, 20.0, 30.0}, b);
    CHECK(via_spec.v == via_list.v);

    CHECK_THROWS_AS(add_noise_with_sigmas(img, {40.0, 20.0}, a), ConfigError);
}

TEST_CASE("noise validation rejects incompatible specs") {
    CHECK_NOTHROW(validate_noise(AwgnSpec{25.0}, 1));
    CHECK_NOTHROW(validate_noise(MultiChannelSpec{}, 3));
    CHECK_THROWS_AS(validate_noise(MultiChannelSpec{}, 1), ConfigError);
    CHECK_THROWS_AS(validate_noise(AwgnSpec{-1.0}, 1), ConfigError);
    CHECK_THROWS_AS(validate_noise(MultiChannelSpec{40.0, -20.0, 30.0}, 3), ConfigError);
    CHECK_THROWS_AS(validate_noise(BlindSpec{-1.0, 55.0}, 1), ConfigError);
    CHECK_THROWS_AS(validate_noise(BlindSpec{30.0, 20.0}, 1), ConfigError);
    CHECK_NOTHROW(validate_noise(BlindSpec{20.0, 20.0}, 1));

    Rng rng(41);
    Image gray(4, 4, 1);
    CHECK_THROWS_AS(add_noise(gray, MultiChannelSpec{}, rng), ConfigError);
}

TEST_CASE("noise specs describe themselves") {
    CHECK(describe(AwgnSpec{25.0}) == "awgn(sigma=25)");
    CHECK(describe(MultiChannelSpec{40.0, 20.0, 30.0}) == "mc(40,20,30)");
    CHECK(describe(BlindSpec{0.0, 55.0}) == "blind(0,55)");
    CHECK(describe(AwgnSpec{12.5}) == "awgn(sigma=12.5)");
}

TEST_CASE("same seed reproduces the same noise") {
    Rng a(43), b(43);
    Rng img_rng(44);
    Image img = random_image(12, 12, 1, img_rng);
    CHECK(add_noise(img, AwgnSpec{25.0}, a).v == add_noise(img, AwgnSpec{25.0}, b).v);
}

TEST_CASE("patch cropping stays inside bounds and is deterministic") {
    Rng img_rng(47);
    std::vector<Image> images{random_image(100, 100, 1, img_rng)};

    Rng a(48), b(48);
    PatchSet pa = crop_patches(images, 75, 100, a);
    PatchSet pb = crop_patches(images, 75, 100, b);
    REQUIRE(pa.patches.size() == 100);
    CHECK(pa.patch_size == 75);
    CHECK(pa.skipped_images == 0);
    for (std::size_t i = 0; i < pa.patches.size(); ++i) {
        const Patch& p = pa.patches[i];
        CHECK(p.top >= 0);
        CHECK(p.top <= 25);
        CHECK(p.left >= 0);
        CHECK(p.left <= 25);
        CHECK(p.source_id == 0);
        CHECK(p.image.h == 75);
        CHECK(p.image.w == 75);
        CHECK(pa.patches[i].top == pb.patches[i].top);
        CHECK(pa.patches[i].left == pb.patches[i].left);
        CHECK(pa.patches[i].image.v == pb.patches[i].image.v);
    }

    // patch contents equal the source window
    const Patch& p0 = pa.patches[0];
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            CHECK(p0.image.at(0, y, x) == images[0].at(0, p0.top + y, p0.left + x));
}

TEST_CASE("patch equal to the image size is the whole image") {
    Rng img_rng(53);
    std::vector<Image> images{random_image(32, 32, 1, img_rng)};
    Rng rng(54);
    PatchSet set = crop_patches(images, 32, 3, rng);
    REQUIRE(set.patches.size() == 3);
    for (const Patch& p : set.patches) {
        CHECK(p.top == 0);
        CHECK(p.left == 0);
        CHECK(p.image.v == images[0].v);
    }
}

TEST_CASE("undersized images are skipped, empty results refused") {
    Rng img_rng(59);
    std::vector<Image> images{random_image(16, 16, 1, img_rng), random_image(64, 64, 1, img_rng)};
    Rng rng(60);
    PatchSet set = crop_patches(images, 32, 2, rng);
    CHECK(set.skipped_images == 1);
    REQUIRE(set.patches.size() == 2);
    for (const Patch& p : set.patches) CHECK(p.source_id == 1);

    std::vector<Image> small{random_image(8, 8, 1, img_rng)};
    Rng rng2(61);
    CHECK_THROWS_AS(crop_patches(small, 32, 2, rng2), DataError);

    CHECK_THROWS_AS(crop_patches(images, 0, 2, rng2), ConfigError);
    CHECK_THROWS_AS(crop_patches(images, 32, 0, rng2), ConfigError);
}

TEST_CASE("batch stream covers every patch once per epoch") {
    Rng img_rng(67);
    std::vector<Image> images{random_image(20, 20, 1, img_rng)};
    Rng crop_rng(68);
    PatchSet set = crop_patches(images, 10, 5, crop_rng);

    Rng stream_rng(69);
    BatchStream stream(set, AwgnSpec{25.0}, 2, stream_rng);
    CHECK(stream.batch_count() == 3);  // 2 + 2 + 1

    int seen = 0, batches = 0;
    while (auto batch = stream.next()) {
        ++batches;
        REQUIRE(batch->noisy.same_shape(batch->clean));
        CHECK(batch->noisy.c == 1);
        CHECK(batch->noisy.h == 10);
        CHECK(batch->noisy.w == 10);
        seen += batch->noisy.n;
        CHECK(batch->noisy.v != batch->clean.v);  // sigma 25 really corrupts
    }
    CHECK(batches == 3);
    CHECK(seen == 5);
    CHECK_FALSE(stream.next().has_value());  // exhausted streams stay exhausted
}

TEST_CASE("batch size equal to the patch count gives one batch") {
    Rng img_rng(71);
    std::vector<Image> images{random_image(20, 20, 1, img_rng)};
    Rng crop_rng(72);
    PatchSet set = crop_patches(images, 10, 4, crop_rng);
    Rng stream_rng(73);
    BatchStream stream(set, AwgnSpec{25.0}, 4, stream_rng);
    CHECK(stream.batch_count() == 1);
    auto batch = stream.next();
    REQUIRE(batch.has_value());
    CHECK(batch->noisy.n == 4);
    CHECK_FALSE(stream.next().has_value());

    // an oversized batch size degrades to one smaller batch
    Rng rng2(74);
    BatchStream big(set, AwgnSpec{25.0}, 100, rng2);
    CHECK(big.batch_count() == 1);
    CHECK(big.next()->noisy.n == 4);
}

TEST_CASE("epochs share clean patches but resample noise") {
    Rng img_rng(79);
    std::vector<Image> images{random_image(20, 20, 1, img_rng)};
    Rng crop_rng(80);
    PatchSet set = crop_patches(images, 10, 1, crop_rng);  // one patch: order is fixed

    Rng stream_rng(81);
    BatchStream epoch1(set, AwgnSpec{25.0}, 1, stream_rng);
    Batch b1 = *epoch1.next();
    BatchStream epoch2(set, AwgnSpec{25.0}, 1, stream_rng);
    Batch b2 = *epoch2.next();

    CHECK(b1.clean.v == b2.clean.v);
    CHECK(b1.noisy.v != b2.noisy.v);
}

TEST_CASE("batch streams are reproducible from the seed") {
    Rng img_rng(83);
    std::vector<Image> images{random_image(24, 24, 1, img_rng)};
    Rng crop_rng(84);
    PatchSet set = crop_patches(images, 12, 6, crop_rng);

    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> flat;
        BatchStream stream(set, BlindSpec{0.0, 55.0}, 4, rng);
        while (auto b = stream.next()) {
            flat.insert(flat.end(), b->noisy.v.begin(), b->noisy.v.end());
            flat.insert(flat.end(), b->clean.v.begin(), b->clean.v.end());
        }
        return flat;
    };
    CHECK(run(7) == run(7));
    CHECK(run(7) != run(8));
}

TEST_CASE("blind noise can vary per patch when asked") {
    Rng img_rng(89);
    std::vector<Image> images{random_image(40, 40, 1, img_rng)};
    Rng crop_rng(90);
    PatchSet set = crop_patches(images, 40, 2, crop_rng);  // two identical full-image patches

    // per-image draw: both patches of the same source get the same sigma,
    // so equal clean patches produce noise of equal magnitude per epoch
    auto noise_energy = [](const Batch& b, int row) {
        double s = 0.0;
        const std::size_t plane = b.noisy.size() / static_cast<std::size_t>(b.noisy.n);
        for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t k = static_cast<std::size_t>(row) * plane + i;
            const double d = b.noisy.v[k] - b.clean.v[k];
            s += d * d;
        }
        return std::sqrt(s / static_cast<double>(plane));
    };

    Rng shared(91);
    BatchStream per_image(set, BlindSpec{5.0, 55.0}, 2, shared);
    Batch bi = *per_image.next();
    const double ratio_image = noise_energy(bi, 0) / noise_energy(bi, 1);
    CHECK(std::abs(ratio_image - 1.0) < 0.2);  // same sigma, sampling noise only

    Rng split(92);
    BatchStream per_patch(set, BlindSpec{5.0, 55.0}, 2, split, /*per_patch_blind=*/true);
    Batch bp = *per_patch.next();
    const double lo = std::min(noise_energy(bp, 0), noise_energy(bp, 1));
    const double hi = std::max(noise_energy(bp, 0), noise_energy(bp, 1));
    CHECK(hi / lo > 1.05);  // independent sigmas drift apart
}

TEST_CASE("batch stream contract errors") {
    PatchSet empty;
    empty.patch_size = 8;
    Rng rng(93);
    CHECK_THROWS_AS(BatchStream(empty, AwgnSpec{25.0}, 2, rng), DataError);

    Rng img_rng(94);
    std::vector<Image> images{random_image(16, 16, 1, img_rng)};
    Rng crop_rng(95);
    PatchSet set = crop_patches(images, 8, 2, crop_rng);
    CHECK_THROWS_AS(BatchStream(set, AwgnSpec{25.0}, 0, rng), ConfigError);

    PatchSet mixed = set;
    Image rgb(8, 8, 3);
    mixed.patches.push_back({rgb, 1, 0, 0});
    CHECK_THROWS_AS(BatchStream(mixed, AwgnSpec{25.0}, 2, rng), DataError);
}

TEST_CASE("synthetic corpus is deterministic and well-formed") {
    TempDir dir("synth");
    const std::string manifest = synth_dataset(dir.str() + "/a", 4, 24, 20, 1, 7);
    CHECK(manifest == dir.str() + "/a/manifest.txt");

    auto paths = read_manifest(manifest);
    REQUIRE(paths.size() == 4);
    auto images = load_images(paths);
    for (const Image& img : images) {
        CHECK(img.h == 24);
        CHECK(img.w == 20);
        CHECK(img.channels == 1);
        for (double x : img.v) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }

    // identical seed, fresh directory: byte-identical corpus
    synth_dataset(dir.str() + "/b", 4, 24, 20, 1, 7);
    for (const std::string& name : {"img_0000.pgm", "img_0003.pgm", "manifest.txt"}) {
        std::ifstream fa(dir.str() + "/a/" + name, std::ios::binary);
        std::ifstream fb(dir.str() + "/b/" + name, std::ios::binary);
        REQUIRE(fa.good());
        REQUIRE(fb.good());
        std::vector<char> ba((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        std::vector<char> bb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        CHECK(ba == bb);
    }

    // a different seed produces different pixels
    synth_dataset(dir.str() + "/c", 4, 24, 20, 1, 8);
    Image a0 = read_pnm(dir.str() + "/a/img_0000.pgm");
    Image c0 = read_pnm(dir.str() + "/c/img_0000.pgm");
    CHECK(a0.v != c0.v);

    // color variant emits ppm files
    const std::string cm = synth_dataset(dir.str() + "/rgb", 2, 16, 16, 3, 7);
    auto cpaths = read_manifest(cm);
    REQUIRE(cpaths.size() == 2);
    CHECK(cpaths[0].find(".ppm") != std::string::npos);
    CHECK(load_images(cpaths)[0].channels == 3);

    CHECK_THROWS_AS(synth_dataset(dir.str() + "/bad", 0, 16, 16, 1, 7), ConfigError);
    CHECK_THROWS_AS(synth_dataset(dir.str() + "/bad", 2, 16, 16, 2, 7), ConfigError);
}

TEST_CASE("synthetic images contain edges and smooth regions") {
    Rng rng(97);
    Image img = synth_image(32, 32, 1, rng);
    // neighboring-pixel differences: some near zero (smooth), some large (edges)
    double max_step = 0.0;
    int tiny_steps = 0, total = 0;
    for (int y = 0; y < img.h; ++y)
        for (int x = 1; x < img.w; ++x) {
            const double d = std::abs(img.at(0, y, x) - img.at(0, y, x - 1));
            max_step = std::max(max_step, d);
            if (d < 0.02) ++tiny_steps;
            ++total;
        }
    CHECK(max_step > 0.1);
    CHECK(tiny_steps > total / 4);
}
