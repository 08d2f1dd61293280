#include "krnet/trainer.hpp"

#include <filesystem>
#include <string>
#include <utility>

#include "krnet/checkpoint.hpp"
#include "krnet/config.hpp"
#include "krnet/error.hpp"

namespace krnet {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs: must be at least 1");
    if (!(lr_end > 0.0) || !(lr_end <= lr_start))
        throw ConfigError("train.lr_start/lr_end: need 0 < lr_end <= lr_start");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ConfigError("train.momentum: must be in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay: must be non-negative");
    if (batch_size < 1) throw ConfigError("train.batch_size: must be positive");
    if (patch_size < 1) throw ConfigError("train.patch_size: must be positive");
}

EpochStats train_epoch(Network& net, BatchStream& batches, const TrainConfig& cfg, double lr,
                       std::vector<double>* step_losses) {
    if (net.mode() != BnMode::Train)
        throw StateError("train_epoch: network must be in training mode");
    const auto params = net.param_list();
    EpochStats stats;
    double total = 0.0;
    while (auto batch = batches.next()) {
        Tensor4 pred = network_forward(net, batch->noisy, /*record_trace=*/true);
        LossGrad lg = mse_loss(pred, batch->clean);
        network_backward(net, lg.grad);
        sgd_step(params, lr, cfg.momentum, cfg.weight_decay, cfg.decay_all);
        total += lg.loss;
        ++stats.batches;
        if (step_losses != nullptr) step_losses->push_back(lg.loss);
    }
    if (stats.batches == 0) throw DataError("train_epoch: empty epoch");
    stats.mean_loss = total / static_cast<double>(stats.batches);
    return stats;
}

namespace {

// Fixed roles for the streams derived from the run seed. Only the training
// stream advances across epochs (and is checkpointed); init and patch layout
// are pure functions of the configuration.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kTrainStream = 2;

}  // namespace

Trainer::Trainer(const RunConfig& cfg, const TrainOptions& opts) : train_rng_(0) {
    RunConfig effective = cfg;
    int start_epoch = 0;
    std::optional<LoadedCheckpoint> loaded;
    if (!opts.resume_checkpoint.empty()) {
        loaded = load_checkpoint(opts.resume_checkpoint);
        effective = loaded->state.config;
        start_epoch = loaded->state.epoch;
    }
    if (opts.seed_override.has_value()) {
        if (loaded.has_value())
            throw ConfigError("a seed override cannot be combined with a resumed run");
        effective.train.seed = *opts.seed_override;
    }
    if (opts.epochs_override.has_value()) effective.train.epochs = *opts.epochs_override;
    effective.validate();
    if (effective.train.epochs < start_epoch)
        throw ConfigError("train.epochs: " + std::to_string(effective.train.epochs) +
                          " is below the checkpoint's completed epoch count " +
                          std::to_string(start_epoch));
    if (effective.data.train_manifest.empty())
        throw ConfigError("data.train_manifest: required for training");
    const int rf = receptive_field(effective.network);
    if (effective.train.patch_size <= rf)
        throw ConfigError("train.patch_size: " + std::to_string(effective.train.patch_size) +
                          " must exceed the network's receptive field of " + std::to_string(rf) +
                          " pixels");

    const auto paths = read_manifest(effective.data.train_manifest);
    if (paths.empty()) throw DataError(effective.data.train_manifest + ": manifest lists no images");
    auto images = load_images(paths);
    for (std::size_t i = 0; i < images.size(); ++i)
        if (images[i].channels != effective.network.in_channels)
            throw DataError(paths[i] + ": has " + std::to_string(images[i].channels) +
                            " channel(s), network expects " +
                            std::to_string(effective.network.in_channels));

    Rng data_rng(derive_seed(effective.train.seed, kDataStream));
    patches_ = crop_patches(images, effective.train.patch_size, effective.data.count_per_image,
                            data_rng);

    if (loaded.has_value()) {
        net_ = std::move(loaded->net);
        train_rng_.restore(loaded->state.train_rng);
    } else {
        net_ = build_network(effective.network, derive_seed(effective.train.seed, kInitStream));
        train_rng_ = Rng(derive_seed(effective.train.seed, kTrainStream));
    }
    epoch_ = start_epoch;
    train_cfg_ = effective.train;
    noise_ = effective.noise;
    data_cfg_ = effective.data;
    out_dir_ = effective.out_dir;
}

void Trainer::run(const std::function<void(int, double, double)>& on_epoch,
                  std::vector<double>* step_losses) {
    LrSchedule schedule;
    schedule.lr_start = train_cfg_.lr_start;
    schedule.lr_end = train_cfg_.lr_end;
    schedule.total_epochs = train_cfg_.epochs;

    std::filesystem::create_directories(out_dir_);
    RunConfig current;
    current.network = net_.config;
    current.train = train_cfg_;
    current.noise = noise_;
    current.data = data_cfg_;
    current.out_dir = out_dir_;

    net_.set_mode(BnMode::Train);
    while (epoch_ < train_cfg_.epochs) {
        const double lr = lr_at(schedule, epoch_);
        BatchStream batches(patches_, noise_, train_cfg_.batch_size, train_rng_,
                            data_cfg_.blind_per_patch);
        const EpochStats stats = train_epoch(net_, batches, train_cfg_, lr, step_losses);
        ++epoch_;
        TrainingState state;
        state.config = current;
        state.epoch = epoch_;
        state.train_rng = train_rng_.state();
        save_checkpoint(out_dir_ + "/ckpt_epoch_" + std::to_string(epoch_) + ".krn", net_, state);
        if (on_epoch) on_epoch(epoch_, lr, stats.mean_loss);
    }
    TrainingState state;
    state.config = current;
    state.epoch = epoch_;
    state.train_rng = train_rng_.state();
    save_checkpoint(out_dir_ + "/model.krn", net_, state);
}

}  // namespace krnet
