#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "sketchid/kernels.hpp"
#include "sketchid/synthfaces.hpp"
#include "sketchid/trainer.hpp"
#include "testutil.hpp"

using namespace sketchid;

namespace {

// Desk-scale config for 48x40 synthetic images cropped to 32x32.
TrainConfig desk_cfg() {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 4;
    cfg.epochs = 1;
    cfg.threads = 1;
    cfg.augment.crop_height = 32;
    cfg.augment.crop_width = 32;
    cfg.augment.max_displacement = 1.5;
    cfg.augment.scale_min = 1.0;
    cfg.augment.scale_max = 1.08;
    return cfg;
}

BackboneConfig photo_desk() { return BackboneConfig::desk(3); }
BackboneConfig sketch_desk() { return BackboneConfig::desk(13); }

struct Fixture {
    testutil::TempDir dir{"trainer"};
    DatasetManifest manifest;
    LoadedPairSet set;

    Fixture() {
        SynthConfig synth;
        synth.identities = 6;
        synth.seed = 9;
        manifest = synth_dataset(synth, dir.path());
        set = load_pair_set(manifest);
    }
};

}  // namespace

TEST_CASE("train_step") {
    Fixture fx;
    const PairBatch batch = sample_pairs(fx.set, 3, 1);

    SUBCASE("learning_rate 0 leaves the parameters unchanged") {
        TrainConfig cfg = desk_cfg();
        cfg.learning_rate = 0.0;
        TrainState state(CoupledModel::initialized(photo_desk(), sketch_desk(), 1));
        const auto before = state.model.values();
        train_step(state, batch, cfg, 77);
        CHECK(state.model.values() == before);
        CHECK(state.step == 1);
        CHECK(std::isfinite(state.last.total));
    }

    SUBCASE("a small step decreases the loss it was computed on") {
        TrainConfig cfg = desk_cfg();
        cfg.learning_rate = 1e-4;
        TrainState state(CoupledModel::initialized(photo_desk(), sketch_desk(), 2));
        const uint64_t step_seed = 4242;
        const PairBatch augmented =
            augment_batch(batch, cfg.augment, cfg.use_attributes, step_seed, 1);
        const double before =
            total_loss(augmented, state.model, cfg.weights, cfg.contrastive, 1).total;
        train_step(state, batch, cfg, step_seed);
        const double after =
            total_loss(augmented, state.model, cfg.weights, cfg.contrastive, 1).total;
        CHECK(after < before);
        CHECK(state.last.total == doctest::Approx(before).epsilon(1e-15));
    }

    SUBCASE("same seed and state give an identical next state") {
        TrainConfig cfg = desk_cfg();
        TrainState a(CoupledModel::initialized(photo_desk(), sketch_desk(), 3));
        TrainState b(CoupledModel::initialized(photo_desk(), sketch_desk(), 3));
        train_step(a, batch, cfg, 99);
        train_step(b, batch, cfg, 99);
        CHECK(a.model.values() == b.model.values());
        CHECK(a.velocity == b.velocity);
        CHECK(a.last.total == b.last.total);
    }

    SUBCASE("non-finite parameters abort with the offending component named") {
        TrainConfig cfg = desk_cfg();
        TrainState state(CoupledModel::initialized(photo_desk(), sketch_desk(), 4));
        state.model.values().back() = std::numeric_limits<double>::infinity();
        try {
            train_step(state, batch, cfg, 5);
            FAIL("expected a numeric error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::numeric);
            CHECK(std::string(e.what()).find("L3") != std::string::npos);
        }
    }
}

TEST_CASE("momentum recurrence on a scalar quadratic") {
    // Minimize f(w) = (w - 3)^2 / 2 by following v <- mu v - lr g, w <- w + v
    // by hand and through the kernel; both must agree step for step.
    const auto& k = active_kernels();
    double w = 0.0, v = 0.0;
    double w_ref = 0.0, v_ref = 0.0;
    for (int i = 0; i < 200; ++i) {
        double g = w - 3.0;
        k.sgd_momentum(&w, &v, &g, 0.05, 0.9, 1);
        const double g_ref = w_ref - 3.0;
        v_ref = 0.9 * v_ref - 0.05 * g_ref;
        w_ref += v_ref;
        CHECK(w == doctest::Approx(w_ref).epsilon(1e-15));
    }
    CHECK(w == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("train loop") {
    Fixture fx;

    SUBCASE("epochs 0 leaves the initialization checkpoint") {
        testutil::TempDir out("train_e0");
        TrainConfig cfg = desk_cfg();
        cfg.epochs = 0;
        cfg.seed = 21;
        const auto result = train(fx.manifest, cfg, photo_desk(), sketch_desk(), out.path());
        const auto ckpt = load_checkpoint(result.checkpoint_path);
        const auto init = CoupledModel::initialized(photo_desk(), sketch_desk(), 21);
        CHECK(ckpt.model.values() == init.values());
        CHECK(result.steps == 0);
    }

    SUBCASE("metrics log has one row per step plus a header") {
        testutil::TempDir out("train_metrics");
        TrainConfig cfg = desk_cfg();
        cfg.epochs = 2;
        cfg.batch_size = 4;  // 6 rows -> 2 batches per epoch
        const auto result = train(fx.manifest, cfg, photo_desk(), sketch_desk(), out.path());
        CHECK(result.steps == 4);

        std::ifstream in(result.metrics_path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "step,epoch,L1,L2,L3,LT,wall_ms");
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 4);
    }

    SUBCASE("training is bit-reproducible single-threaded") {
        testutil::TempDir out_a("train_rep_a"), out_b("train_rep_b");
        TrainConfig cfg = desk_cfg();
        cfg.epochs = 2;
        cfg.seed = 77;
        const auto ra = train(fx.manifest, cfg, photo_desk(), sketch_desk(), out_a.path());
        const auto rb = train(fx.manifest, cfg, photo_desk(), sketch_desk(), out_b.path());
        const auto ma = load_checkpoint(ra.checkpoint_path);
        const auto mb = load_checkpoint(rb.checkpoint_path);
        CHECK(ma.model.values() == mb.model.values());
    }

    SUBCASE("init-from resumes from an existing checkpoint") {
        testutil::TempDir stage1("train_s1"), stage2("train_s2");
        TrainConfig cfg = desk_cfg();
        cfg.epochs = 1;
        cfg.seed = 5;
        const auto first = train(fx.manifest, cfg, photo_desk(), sketch_desk(), stage1.path());
        const auto trained = load_checkpoint(first.checkpoint_path);

        TrainConfig resume = cfg;
        resume.epochs = 0;  // load and immediately checkpoint
        const auto second = train(fx.manifest, resume, photo_desk(), sketch_desk(), stage2.path(),
                                  first.checkpoint_path);
        const auto resumed = load_checkpoint(second.checkpoint_path);
        CHECK(resumed.model.values() == trained.model.values());

        // A mismatched backbone is rejected.
        CHECK_THROWS_AS(train(fx.manifest, resume, BackboneConfig::tiny(3), BackboneConfig::tiny(13),
                              stage2.path(), first.checkpoint_path),
                        Error);
    }

    SUBCASE("metadata lands in the checkpoint") {
        testutil::TempDir out("train_meta");
        TrainConfig cfg = desk_cfg();
        cfg.epochs = 0;
        const auto result =
            train(fx.manifest, cfg, photo_desk(), sketch_desk(), out.path(), std::nullopt,
                  {{"config_hash", "deadbeef"}});
        const auto ckpt = load_checkpoint(result.checkpoint_path);
        bool found = false;
        for (const auto& [k, v] : ckpt.metadata) found = found || (k == "config_hash" && v == "deadbeef");
        CHECK(found);
    }
}

TEST_CASE("training on the separable synthetic set makes progress") {
    testutil::TempDir data("train_progress_data"), out("train_progress_out");
    SynthConfig synth;
    synth.identities = 8;
    synth.seed = 31;
    const auto manifest = synth_dataset(synth, data.path());

    TrainConfig cfg = desk_cfg();
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.learning_rate = 2e-3;
    cfg.seed = 3;
    const auto result = train(manifest, cfg, photo_desk(), sketch_desk(), out.path());
    CHECK(result.last_epoch_mean.total < result.first_epoch_mean.total);
}
