#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "krnet/dataset.hpp"
#include "krnet/network.hpp"
#include "krnet/optim.hpp"

namespace krnet {

struct TrainConfig {
    int epochs = 50;
    double lr_start = 1e-1;
    double lr_end = 1e-4;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    bool decay_all = true;  // when unset, weight decay touches conv weights only
    int batch_size = 16;
    std::uint64_t seed = 1;
    int patch_size = 75;

    void validate() const;
};

struct EpochStats {
    double mean_loss = 0.0;
    int batches = 0;
};

// One pass over the stream: forward, loss, backward, SGD step per batch, in
// stream order. Per-step losses are appended to step_losses when non-null.
EpochStats train_epoch(Network& net, BatchStream& batches, const TrainConfig& cfg, double lr,
                       std::vector<double>* step_losses = nullptr);

struct DataConfig {
    std::string train_manifest;
    std::string val_manifest;   // optional; needed by ablation runs
    std::string test_manifest;  // optional
    int count_per_image = 16;
    bool blind_per_patch = false;
};

struct RunConfig;  // defined in config.hpp

struct TrainOptions {
    std::string resume_checkpoint;  // empty for a fresh run
    std::optional<std::uint64_t> seed_override;
    std::optional<int> epochs_override;
};

// Full training session: loads the manifest, crops patches, then runs the
// remaining epochs with per-epoch checkpoints (ckpt_epoch_<k>.krn) and a final
// model.krn under out_dir. Three independent RNG streams are derived from the
// run seed: weight init, patch cropping and the training stream (shuffle +
// noise). Only the training stream advances across epochs; it is serialized in
// checkpoints, and patches are re-derived from the config on resume, so a
// resumed run reproduces the unbroken one bit-exactly.
class Trainer {
  public:
    Trainer(const RunConfig& cfg, const TrainOptions& opts);

    // on_epoch(epoch, lr, mean_loss) fires after each completed epoch, once the
    // epoch checkpoint is on disk.
    void run(const std::function<void(int, double, double)>& on_epoch = nullptr,
             std::vector<double>* step_losses = nullptr);

    Network& network() { return net_; }
    const Network& network() const { return net_; }
    int epoch() const { return epoch_; }
    const TrainConfig& train_config() const { return train_cfg_; }

  private:
    Network net_;
    TrainConfig train_cfg_;
    NoiseSpec noise_;
    DataConfig data_cfg_;
    std::string out_dir_;
    PatchSet patches_;
    Rng train_rng_;
    int epoch_ = 0;
};

}  // namespace krnet
