#pragma once

#include <cstdint>
#include <string>

#include "krnet/config.hpp"
#include "krnet/network.hpp"
#include "krnet/rng.hpp"

namespace krnet {

// A checkpoint restores training mid-run without any drift: network params,
// momentum buffers, batch-norm running stats, the training RNG and the full
// run configuration travel together in one little-endian binary file.
struct TrainingState {
    RunConfig config;
    int epoch = 0;  // epochs completed
    Rng::State train_rng;
};

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Network& net, const TrainingState& state);

struct LoadedCheckpoint {
    Network net;
    TrainingState state;
};

// Raises BadMagicError / VersionError / TruncatedError for the matching defect;
// trailing bytes after the final field are also an error.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace krnet
