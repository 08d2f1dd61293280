#include "krnet/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>

#include "json.hpp"

#include "krnet/error.hpp"

namespace krnet {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const char* where,
                         std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError(std::string(where) + ": unknown key \"" + it.key() + "\"");
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

int get_int(const json& obj, const char* where, const char* key, int fallback) {
    const json* v = find(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer())
        throw ConfigError(std::string(where) + "." + key + ": expected an integer");
    return v->get<int>();
}

double get_double(const json& obj, const char* where, const char* key, double fallback) {
    const json* v = find(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_number())
        throw ConfigError(std::string(where) + "." + key + ": expected a number");
    return v->get<double>();
}

bool get_bool(const json& obj, const char* where, const char* key, bool fallback) {
    const json* v = find(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean())
        throw ConfigError(std::string(where) + "." + key + ": expected a boolean");
    return v->get<bool>();
}

std::string get_string(const json& obj, const char* where, const char* key,
                       const std::string& fallback) {
    const json* v = find(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_string())
        throw ConfigError(std::string(where) + "." + key + ": expected a string");
    return v->get<std::string>();
}

std::uint64_t get_u64(const json& obj, const char* where, const char* key,
                      std::uint64_t fallback) {
    const json* v = find(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0))
        throw ConfigError(std::string(where) + "." + key + ": expected a non-negative integer");
    return v->get<std::uint64_t>();
}

NetworkConfig parse_network(const json& obj) {
    reject_unknown_keys(obj, "network",
                        {"in_channels", "extract_filters", "extract_kernel", "shrink_channels",
                         "block_channels_reduced", "num_blocks", "variant", "recon_filters",
                         "mini"});
    NetworkConfig cfg;
    cfg.in_channels = get_int(obj, "network", "in_channels", cfg.in_channels);
    cfg.extract_filters = get_int(obj, "network", "extract_filters", cfg.extract_filters);
    cfg.extract_kernel = get_int(obj, "network", "extract_kernel", cfg.extract_kernel);
    cfg.shrink_channels = get_int(obj, "network", "shrink_channels", cfg.shrink_channels);
    cfg.block_channels_reduced =
        get_int(obj, "network", "block_channels_reduced", cfg.block_channels_reduced);
    cfg.num_blocks = get_int(obj, "network", "num_blocks", cfg.num_blocks);
    cfg.variant = variant_from_string(get_string(obj, "network", "variant", to_string(cfg.variant)));
    cfg.recon_filters = get_int(obj, "network", "recon_filters", cfg.recon_filters);
    cfg.mini = get_bool(obj, "network", "mini", cfg.mini);
    return cfg;
}

TrainConfig parse_train(const json& obj) {
    reject_unknown_keys(obj, "train",
                        {"epochs", "lr_start", "lr_end", "momentum", "weight_decay", "decay_all",
                         "batch_size", "seed", "patch_size"});
    TrainConfig cfg;
    cfg.epochs = get_int(obj, "train", "epochs", cfg.epochs);
    cfg.lr_start = get_double(obj, "train", "lr_start", cfg.lr_start);
    cfg.lr_end = get_double(obj, "train", "lr_end", cfg.lr_end);
    cfg.momentum = get_double(obj, "train", "momentum", cfg.momentum);
    cfg.weight_decay = get_double(obj, "train", "weight_decay", cfg.weight_decay);
    cfg.decay_all = get_bool(obj, "train", "decay_all", cfg.decay_all);
    cfg.batch_size = get_int(obj, "train", "batch_size", cfg.batch_size);
    cfg.seed = get_u64(obj, "train", "seed", cfg.seed);
    cfg.patch_size = get_int(obj, "train", "patch_size", cfg.patch_size);
    return cfg;
}

NoiseSpec parse_noise(const json& obj) {
    if (!obj.is_object()) throw ConfigError("noise: expected an object");
    const std::string kind = get_string(obj, "noise", "kind", "");
    if (kind == "awgn") {
        reject_unknown_keys(obj, "noise", {"kind", "sigma"});
        AwgnSpec spec;
        spec.sigma = get_double(obj, "noise", "sigma", spec.sigma);
        return spec;
    }
    if (kind == "mc") {
        reject_unknown_keys(obj, "noise", {"kind", "sigma_r", "sigma_g", "sigma_b"});
        MultiChannelSpec spec;
        spec.sigma_r = get_double(obj, "noise", "sigma_r", spec.sigma_r);
        spec.sigma_g = get_double(obj, "noise", "sigma_g", spec.sigma_g);
        spec.sigma_b = get_double(obj, "noise", "sigma_b", spec.sigma_b);
        return spec;
    }
    if (kind == "blind") {
        reject_unknown_keys(obj, "noise", {"kind", "lo", "hi"});
        BlindSpec spec;
        spec.lo = get_double(obj, "noise", "lo", spec.lo);
        spec.hi = get_double(obj, "noise", "hi", spec.hi);
        return spec;
    }
    throw ConfigError("noise.kind: expected \"awgn\", \"mc\" or \"blind\", got \"" + kind + "\"");
}

DataConfig parse_data(const json& obj) {
    reject_unknown_keys(obj, "data",
                        {"train_manifest", "val_manifest", "test_manifest", "count_per_image",
                         "blind_per_patch"});
    DataConfig cfg;
    cfg.train_manifest = get_string(obj, "data", "train_manifest", cfg.train_manifest);
    cfg.val_manifest = get_string(obj, "data", "val_manifest", cfg.val_manifest);
    cfg.test_manifest = get_string(obj, "data", "test_manifest", cfg.test_manifest);
    cfg.count_per_image = get_int(obj, "data", "count_per_image", cfg.count_per_image);
    cfg.blind_per_patch = get_bool(obj, "data", "blind_per_patch", cfg.blind_per_patch);
    return cfg;
}

}  // namespace

void RunConfig::validate() const {
    network.validate();
    train.validate();
    validate_noise(noise, network.in_channels);
    if (data.count_per_image < 1) throw ConfigError("data.count_per_image: must be positive");
    if (out_dir.empty()) throw ConfigError("out_dir: must not be empty");
}

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(doc, "config", {"network", "train", "noise", "data", "out_dir"});

    RunConfig cfg;
    try {
        if (const json* v = find(doc, "network")) {
            if (!v->is_object()) throw ConfigError("network: expected an object");
            cfg.network = parse_network(*v);
        }
        if (const json* v = find(doc, "train")) {
            if (!v->is_object()) throw ConfigError("train: expected an object");
            cfg.train = parse_train(*v);
        }
        if (const json* v = find(doc, "noise")) cfg.noise = parse_noise(*v);
        if (const json* v = find(doc, "data")) {
            if (!v->is_object()) throw ConfigError("data: expected an object");
            cfg.data = parse_data(*v);
        }
        cfg.out_dir = get_string(doc, "config", "out_dir", cfg.out_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw ConfigError(path + ": read failed");
    return parse_run_config(text);
}

NoiseSpec parse_noise_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("noise: invalid JSON: ") + e.what());
    }
    NoiseSpec spec = parse_noise(doc);
    return spec;
}

std::string noise_to_json(const NoiseSpec& spec) {
    json obj;
    if (const auto* awgn = std::get_if<AwgnSpec>(&spec)) {
        obj["kind"] = "awgn";
        obj["sigma"] = awgn->sigma;
    } else if (const auto* mc = std::get_if<MultiChannelSpec>(&spec)) {
        obj["kind"] = "mc";
        obj["sigma_r"] = mc->sigma_r;
        obj["sigma_g"] = mc->sigma_g;
        obj["sigma_b"] = mc->sigma_b;
    } else {
        const auto& blind = std::get<BlindSpec>(spec);
        obj["kind"] = "blind";
        obj["lo"] = blind.lo;
        obj["hi"] = blind.hi;
    }
    return obj.dump();
}

std::string run_config_to_json(const RunConfig& cfg) {
    json doc;
    json& network = doc["network"];
    network["in_channels"] = cfg.network.in_channels;
    network["extract_filters"] = cfg.network.extract_filters;
    network["extract_kernel"] = cfg.network.extract_kernel;
    network["shrink_channels"] = cfg.network.shrink_channels;
    network["block_channels_reduced"] = cfg.network.block_channels_reduced;
    network["num_blocks"] = cfg.network.num_blocks;
    network["variant"] = to_string(cfg.network.variant);
    network["recon_filters"] = cfg.network.recon_filters;
    network["mini"] = cfg.network.mini;
    json& train = doc["train"];
    train["epochs"] = cfg.train.epochs;
    train["lr_start"] = cfg.train.lr_start;
    train["lr_end"] = cfg.train.lr_end;
    train["momentum"] = cfg.train.momentum;
    train["weight_decay"] = cfg.train.weight_decay;
    train["decay_all"] = cfg.train.decay_all;
    train["batch_size"] = cfg.train.batch_size;
    train["seed"] = cfg.train.seed;
    train["patch_size"] = cfg.train.patch_size;
    doc["noise"] = json::parse(noise_to_json(cfg.noise));
    json& data = doc["data"];
    data["train_manifest"] = cfg.data.train_manifest;
    data["val_manifest"] = cfg.data.val_manifest;
    data["test_manifest"] = cfg.data.test_manifest;
    data["count_per_image"] = cfg.data.count_per_image;
    data["blind_per_patch"] = cfg.data.blind_per_patch;
    doc["out_dir"] = cfg.out_dir;
    return doc.dump();
}

}  // namespace krnet
