#include "sketchid/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sketchid/kernels.hpp"
#include "sketchid/parallel.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

void TrainConfig::validate() const {
    // learning_rate == 0 is allowed: a null step, useful for dry runs.
    if (!(learning_rate >= 0.0)) throw usage_error("learning_rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw usage_error("momentum must be in [0,1)");
    if (batch_size < 1) throw usage_error("batch_size must be >= 1");
    if (epochs < 0) throw usage_error("epochs must be >= 0");
    if (threads < 0) throw usage_error("threads must be >= 0");
    weights.validate();
    contrastive.validate();
    augment.validate();
}

int TrainConfig::effective_threads() const { return threads == 0 ? default_threads() : threads; }

PairBatch augment_batch(const PairBatch& batch, const AugmentConfig& aug, bool use_attributes,
                        uint64_t step_seed, int threads) {
    PairBatch out;
    const std::size_t n = batch.triples.size();
    out.photos.resize(n);
    out.sketches.resize(n);
    out.triples.resize(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& t = batch.triples[i];
            auto [photo, sketch] = augment_pair(batch.photos[t.photo_index], batch.sketches[t.sketch_index],
                                                aug, mix_seed(step_seed, i));
            if (!use_attributes)
                sketch.witness_attributes = AttributeVector(sketch.witness_attributes.size());
            out.photos[i] = std::move(photo);
            out.sketches[i] = std::move(sketch);
            out.triples[i] = {static_cast<int>(i), static_cast<int>(i), t.label, t.provenance};
        }
    });
    return out;
}

void train_step(TrainState& state, const PairBatch& batch, const TrainConfig& cfg, uint64_t step_seed) {
    cfg.validate();
    const PairBatch augmented =
        augment_batch(batch, cfg.augment, cfg.use_attributes, step_seed, cfg.effective_threads());
    auto lg = total_loss_and_gradients(augmented, state.model, cfg.weights, cfg.contrastive,
                                       cfg.effective_threads());
    active_kernels().sgd_momentum(state.model.values().data(), state.velocity.data(), lg.gradients.data(),
                                  cfg.learning_rate, cfg.momentum, state.model.param_count());
    state.last = lg.components;
    state.step += 1;
}

namespace {

void accumulate(LossComponents& acc, const LossComponents& c) {
    acc.verification += c.verification;
    acc.photo_attribute += c.photo_attribute;
    acc.sketch_attribute += c.sketch_attribute;
    acc.total += c.total;
}

LossComponents divide(LossComponents acc, int n) {
    if (n > 0) {
        acc.verification /= n;
        acc.photo_attribute /= n;
        acc.sketch_attribute /= n;
        acc.total /= n;
    }
    return acc;
}

}  // namespace

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const BackboneConfig& photo_cfg, const BackboneConfig& sketch_cfg,
                  const std::string& out_dir,
                  const std::optional<std::string>& init_from,
                  const std::vector<std::pair<std::string, std::string>>& metadata) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir)) throw data_error("cannot create output directory " + out_dir);

    CoupledModel model = CoupledModel::initialized(photo_cfg, sketch_cfg, cfg.seed);
    if (init_from) {
        Checkpoint ckpt = load_checkpoint(*init_from);
        if (!(ckpt.model.photo_config() == photo_cfg) || !(ckpt.model.sketch_config() == sketch_cfg))
            throw data_error("checkpoint " + *init_from + " was trained with a different backbone config");
        model = std::move(ckpt.model);
    }
    TrainState state(std::move(model));

    const LoadedPairSet set = load_pair_set(manifest);

    const std::string ckpt_path = (std::filesystem::path(out_dir) / "model.ckpt").string();
    const std::string metrics_path = (std::filesystem::path(out_dir) / "metrics.csv").string();

    auto write_ckpt = [&]() {
        const std::string tmp = ckpt_path + ".tmp";
        save_checkpoint(state.model, metadata, tmp);
        std::filesystem::rename(tmp, ckpt_path);
    };
    write_ckpt();  // epochs == 0 leaves the initialization on disk

    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw data_error("cannot write metrics log: " + metrics_path);
    metrics << "step,epoch,L1,L2,L3,LT,wall_ms\n";
    metrics.precision(17);

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        state.epoch = epoch;

        // Genuine rows without replacement within the epoch.
        std::vector<int> rows(set.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        Rng perm(mix_seed(cfg.seed, 0xe70c + uint64_t(epoch)));
        for (int i = static_cast<int>(rows.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(perm.below(uint64_t(i) + 1));
            std::swap(rows[i], rows[j]);
        }

        LossComponents epoch_acc;
        int epoch_steps = 0;
        for (std::size_t off = 0; off < rows.size(); off += cfg.batch_size) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, rows.size() - off);
            const uint64_t step_tag = uint64_t(epoch) * 1000003ULL + off;
            const PairBatch batch =
                build_batch(set, std::span<const int>(rows.data() + off, count), mix_seed(cfg.seed, step_tag));

            const auto t0 = std::chrono::steady_clock::now();
            train_step(state, batch, cfg, mix_seed(cfg.seed, step_tag ^ 0xa5a5a5a5ULL));
            const auto t1 = std::chrono::steady_clock::now();
            const double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

            metrics << state.step << ',' << epoch << ',' << state.last.verification << ','
                    << state.last.photo_attribute << ',' << state.last.sketch_attribute << ','
                    << state.last.total << ',' << wall_ms << '\n';
            accumulate(epoch_acc, state.last);
            ++epoch_steps;
        }
        write_ckpt();

        const LossComponents mean = divide(epoch_acc, epoch_steps);
        if (epoch == 0) result.first_epoch_mean = mean;
        result.last_epoch_mean = mean;
        result.steps = state.step;
    }

    metrics.flush();
    result.checkpoint_path = ckpt_path;
    result.metrics_path = metrics_path;
    return result;
}

}  // namespace sketchid
