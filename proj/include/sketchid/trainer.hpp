#pragma once

#include <optional>
#include <string>

#include "sketchid/augment.hpp"
#include "sketchid/losses.hpp"
#include "sketchid/sampler.hpp"

namespace sketchid {

struct TrainConfig {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int batch_size = 8;  // genuine pairs per batch; each brings four impostors
    int epochs = 10;
    uint64_t seed = 0;
    LossWeights weights;
    ContrastiveConfig contrastive;
    AugmentConfig augment;
    bool use_attributes = true;  // false zeroes the witness planes (ablation baseline)
    int threads = 0;             // 0 = hardware concurrency

    void validate() const;
    int effective_threads() const;
};

struct TrainState {
    CoupledModel model;
    std::vector<double> velocity;  // momentum buffer, parameter-shaped
    int epoch = 0;
    int step = 0;
    LossComponents last;

    explicit TrainState(CoupledModel m) : model(std::move(m)), velocity(model.param_count(), 0.0) {}
};

// Augments every triple (shared flip per pair, independent warps), evaluates
// the total loss, and applies one SGD-with-momentum step to both branches.
// step_seed drives the augmentation draws.
void train_step(TrainState& state, const PairBatch& batch, const TrainConfig& cfg, uint64_t step_seed);

// The augmented copy of a batch that train_step optimizes against; exposed so
// tests can recompute the loss a step acted on.
PairBatch augment_batch(const PairBatch& batch, const AugmentConfig& aug, bool use_attributes,
                        uint64_t step_seed, int threads = 1);

struct TrainResult {
    std::string checkpoint_path;
    std::string metrics_path;
    LossComponents first_epoch_mean;
    LossComponents last_epoch_mean;
    int steps = 0;
};

// Full loop: epochs x batches over the manifest with per-epoch reshuffling,
// a per-step metrics CSV (step,epoch,L1,L2,L3,LT,wall_ms) and a checkpoint
// refreshed after every epoch, so an interrupted run keeps its last-good
// state. `init_from` resumes/fine-tunes from an existing checkpoint.
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const BackboneConfig& photo_cfg, const BackboneConfig& sketch_cfg,
                  const std::string& out_dir,
                  const std::optional<std::string>& init_from = std::nullopt,
                  const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace sketchid
