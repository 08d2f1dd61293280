#pragma once

#include <string>

#include "krnet/network.hpp"
#include "krnet/noise.hpp"
#include "krnet/trainer.hpp"

namespace krnet {

// Everything a training run needs, normally read from a JSON file. Parsing is
// fail-closed: unknown keys and values outside their documented ranges raise
// ConfigError rather than being ignored.
struct RunConfig {
    NetworkConfig network;
    TrainConfig train;
    NoiseSpec noise = AwgnSpec{};
    DataConfig data;
    std::string out_dir = ".";

    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

// Noise specs appear both inside run configs and as a standalone CLI argument.
NoiseSpec parse_noise_json(const std::string& json_text);
std::string noise_to_json(const NoiseSpec& spec);

}  // namespace krnet
