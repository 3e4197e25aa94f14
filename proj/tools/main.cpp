// Command-line surface: ingest, sketchify, augment-preview, train,
// build-gallery, identify, evaluate, report, synth-dataset.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numeric
// failure. Every error prints a single diagnostic line to stderr.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sketchid/augment.hpp"
#include "sketchid/config.hpp"
#include "sketchid/eval.hpp"
#include "sketchid/image_io.hpp"
#include "sketchid/kernels.hpp"
#include "sketchid/rng.hpp"
#include "sketchid/synthfaces.hpp"
#include "sketchid/trainer.hpp"
#include "sketchid/xdog.hpp"

namespace {

using namespace sketchid;

struct CommonFlags {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> kernels;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration JSON");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware concurrency)");
    cmd->add_option("--kernels", flags.kernels, "kernel backend: auto, scalar or avx2");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig cfg = flags.config_path.empty() ? default_run_config() : load_run_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.kernels) cfg.kernels = *flags.kernels;
    finalize_run_config(cfg);
    select_kernel_backend(cfg.kernels);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out << text;
    if (!out) throw data_error("failed writing " + path);
}

// Side-by-side panel of equally tall images, 1px white gutters.
Tensor hconcat(const std::vector<Tensor>& panels) {
    int h = 0, w = 0, c = 1;
    for (const auto& p : panels) {
        h = std::max(h, p.height);
        w += p.width + 1;
        c = std::max(c, p.channels);
    }
    Tensor canvas(c, h, w - 1, 1.0);
    int off = 0;
    for (const auto& p : panels) {
        for (int ch = 0; ch < c; ++ch) {
            const int src_ch = p.channels == 1 ? 0 : ch;
            for (int y = 0; y < p.height; ++y)
                for (int x = 0; x < p.width; ++x) canvas.at(ch, y, off + x) = p.at(src_ch, y, x);
        }
        off += p.width + 1;
    }
    return canvas;
}

int cmd_ingest(const CommonFlags& flags, const std::string& manifest_path) {
    resolve_config(flags);
    const DatasetManifest m = load_manifest(manifest_path);
    std::printf("manifest ok: %zu entries, %zu identities, %d attributes\n", m.entries.size(),
                m.identities().size(), m.vocabulary.size());
    return 0;
}

int cmd_synth(const CommonFlags& flags, int identities, const std::string& out_dir) {
    RunConfig cfg = resolve_config(flags);
    if (identities > 0) cfg.synth.identities = identities;
    cfg.synth.seed = cfg.seed;
    const DatasetManifest m = synth_dataset(cfg.synth, out_dir);
    std::printf("wrote %zu photo/sketch pairs under %s\n", m.entries.size(), out_dir.c_str());
    return 0;
}

int cmd_sketchify(const CommonFlags& flags, const std::string& manifest_path, const std::string& out_dir) {
    RunConfig cfg = resolve_config(flags);
    const DatasetManifest in = load_manifest(manifest_path);
    const DatasetManifest out = sketchify_dataset(in, cfg.xdog, out_dir);
    std::printf("wrote %zu synthetic sketches under %s\n", out.entries.size(), out_dir.c_str());
    return 0;
}

int cmd_augment_preview(const CommonFlags& flags, const std::string& manifest_path, const std::string& out_dir,
                        int count) {
    RunConfig cfg = resolve_config(flags);
    const DatasetManifest m = load_manifest(manifest_path);
    std::filesystem::create_directories(out_dir);
    const int n = std::min<int>(count, static_cast<int>(m.entries.size()));
    for (int i = 0; i < n; ++i) {
        const PhotoSample photo = load_photo(m, m.entries[i]);
        const SketchSample sketch = load_sketch(m, m.entries[i]);
        const uint64_t seed = mix_seed(cfg.seed, uint64_t(i));
        auto [aug_photo, aug_sketch] = augment_pair(photo, sketch, cfg.train.augment, seed);

        const Tensor photo_deformed = random_deform(photo.image, cfg.train.augment, mix_seed(seed, 1));
        const Tensor photo_scaled = scale_and_crop(photo.image, cfg.train.augment, mix_seed(seed, 3));
        write_png(hconcat({photo.image, photo_deformed, photo_scaled, hflip(photo.image), aug_photo.image}),
                  (std::filesystem::path(out_dir) / ("photo_" + std::to_string(i) + ".png")).string());

        const Tensor sketch_deformed = random_deform(sketch.image, cfg.train.augment, mix_seed(seed, 2));
        const Tensor sketch_scaled = scale_and_crop(sketch.image, cfg.train.augment, mix_seed(seed, 4));
        write_png(hconcat({sketch.image, sketch_deformed, sketch_scaled, hflip(sketch.image), aug_sketch.image}),
                  (std::filesystem::path(out_dir) / ("sketch_" + std::to_string(i) + ".png")).string());
    }
    std::printf("wrote %d preview grids under %s\n", n, out_dir.c_str());
    return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& manifest_path, const std::string& out_dir,
              const std::string& init_from) {
    RunConfig cfg = resolve_config(flags);
    const DatasetManifest m = load_manifest(manifest_path);
    const int t = m.vocabulary.size();
    const auto result = train(m, cfg.train, make_photo_backbone(cfg, t), make_sketch_backbone(cfg, t), out_dir,
                              init_from.empty() ? std::nullopt : std::optional<std::string>(init_from),
                              {{"config_hash", cfg.hash}});
    std::printf("checkpoint: %s\nmetrics: %s\nsteps: %d, final LT: %.6f\n", result.checkpoint_path.c_str(),
                result.metrics_path.c_str(), result.steps, result.last_epoch_mean.total);
    return 0;
}

int cmd_build_gallery(const CommonFlags& flags, const std::string& manifest_path,
                      const std::string& checkpoint_path, const std::string& out_path) {
    RunConfig cfg = resolve_config(flags);
    const DatasetManifest m = load_manifest(manifest_path);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::vector<PhotoSample> photos;
    photos.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        PhotoSample p = load_photo(m, e);
        p.image = center_crop(p.image, cfg.train.augment.crop_height, cfg.train.augment.crop_width);
        photos.push_back(std::move(p));
    }
    const GalleryIndex index = build_gallery(photos, ckpt.model, cfg.train.effective_threads());
    save_gallery(index, cfg.hash, out_path);
    std::printf("gallery of %zu entries written to %s\n", index.size(), out_path.c_str());
    return 0;
}

int cmd_identify(const CommonFlags& flags, const std::string& probe_path, const std::string& attribute_bits,
                 const std::string& gallery_path, const std::string& checkpoint_path, int top) {
    RunConfig cfg = resolve_config(flags);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);

    SketchSample probe;
    probe.image = center_crop(read_png_gray(probe_path), cfg.train.augment.crop_height,
                              cfg.train.augment.crop_width);
    probe.identity = -1;
    probe.witness_attributes = AttributeVector::parse(attribute_bits);
    probe.attributes = probe.witness_attributes;
    if (probe.witness_attributes.size() != ckpt.model.sketch_config().attribute_count)
        throw data_error("probe attribute string has length " + std::to_string(probe.witness_attributes.size()) +
                         ", model expects " + std::to_string(ckpt.model.sketch_config().attribute_count));

    const GalleryIndex index = load_gallery(gallery_path);
    const ProbeResult r = identify(probe, index, ckpt.model, cfg.train.use_attributes);
    const int n = std::min<int>(top, static_cast<int>(r.ranked.size()));
    for (int i = 0; i < n; ++i)
        std::printf("%d\t%d\t%.9g\n", i + 1, r.ranked[i].first, r.ranked[i].second);
    return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& protocol, const std::string& manifest_path,
                 const std::string& probe_manifest, const std::string& distractor_manifest,
                 std::optional<int> folds, const std::string& out_path, const std::string& work_dir,
                 const std::string& init_from) {
    RunConfig cfg = resolve_config(flags);
    if (!protocol.empty()) cfg.protocol.name = protocol;
    if (!manifest_path.empty()) cfg.protocol.train_manifest = manifest_path;
    if (!probe_manifest.empty()) cfg.protocol.probe_manifest = probe_manifest;
    if (!distractor_manifest.empty()) cfg.protocol.distractor_manifest = distractor_manifest;
    if (folds) cfg.protocol.folds = *folds;
    finalize_run_config(cfg);

    const std::string work = work_dir.empty() ? out_path + ".work" : work_dir;
    const int t = load_manifest(cfg.protocol.train_manifest).vocabulary.size();
    const ProtocolReport report =
        run_protocol(cfg.protocol, cfg.train, make_photo_backbone(cfg, t), make_sketch_backbone(cfg, t), work,
                     cfg.hash, init_from.empty() ? std::nullopt : std::optional<std::string>(init_from));
    write_text(out_path, report_to_json(report));

    std::printf("protocol %s, gallery size %d, %zu folds\n", report.protocol.c_str(), report.gallery_size,
                report.folds.size());
    for (std::size_t i = 0; i < report.summary_ranks.size(); ++i)
        std::printf("rank-%d: %s\n", report.summary_ranks[i], report.rank_formatted[i].c_str());
    std::printf("report written to %s\n", out_path.c_str());
    return 0;
}

int cmd_report(const CommonFlags& flags, const std::string& in_path, const std::string& out_path) {
    RunConfig cfg = flags.config_path.empty() ? default_run_config() : load_run_config(flags.config_path);
    std::ifstream in(in_path);
    if (!in) throw data_error("cannot open report: " + in_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const ProtocolReport report = report_from_json(text);
    if (!flags.config_path.empty() && report.config_hash != cfg.hash)
        throw data_error("report config hash " + report.config_hash + " does not match config " + cfg.hash);
    if (!out_path.empty()) write_text(out_path, report_cmc_csv(report));

    std::printf("protocol %s, gallery size %d, %zu folds\n", report.protocol.c_str(), report.gallery_size,
                report.folds.size());
    for (std::size_t i = 0; i < report.summary_ranks.size(); ++i)
        std::printf("rank-%d: %s\n", report.summary_ranks[i], report.rank_formatted[i].c_str());
    if (!out_path.empty()) std::printf("CMC curve written to %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-modal sketch-to-photo identification pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string manifest_path, out_path, probe_path, attribute_bits, gallery_path, checkpoint_path;
    std::string protocol, probe_manifest, distractor_manifest, work_dir, init_from, in_path;
    int identities = 0, count = 4, top = 10;
    std::optional<int> folds;

    auto* ingest = app.add_subcommand("ingest", "validate a dataset manifest");
    add_common(ingest, flags);
    ingest->add_option("--manifest", manifest_path, "manifest to validate")->required();

    auto* synth = app.add_subcommand("synth-dataset", "generate a synthetic face dataset");
    add_common(synth, flags);
    synth->add_option("--identities", identities, "number of identities");
    synth->add_option("--out", out_path, "output directory")->required();

    auto* sketchify = app.add_subcommand("sketchify", "render xdog sketches for every photo in a manifest");
    add_common(sketchify, flags);
    sketchify->add_option("--manifest", manifest_path, "input manifest")->required();
    sketchify->add_option("--out", out_path, "output directory")->required();

    auto* preview = app.add_subcommand("augment-preview", "write before/after augmentation grids");
    add_common(preview, flags);
    preview->add_option("--manifest", manifest_path, "input manifest")->required();
    preview->add_option("--out", out_path, "output directory")->required();
    preview->add_option("--count", count, "rows to preview");

    auto* train_cmd = app.add_subcommand("train", "train the coupled model on a manifest");
    add_common(train_cmd, flags);
    train_cmd->add_option("--manifest", manifest_path, "training manifest")->required();
    train_cmd->add_option("--out", out_path, "output directory")->required();
    train_cmd->add_option("--init-from", init_from, "checkpoint to fine-tune from");

    auto* gallery = app.add_subcommand("build-gallery", "embed gallery photos with a checkpoint");
    add_common(gallery, flags);
    gallery->add_option("--manifest", manifest_path, "gallery manifest")->required();
    gallery->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    gallery->add_option("--out", out_path, "gallery JSON path")->required();

    auto* ident = app.add_subcommand("identify", "rank a gallery against a probe sketch");
    add_common(ident, flags);
    ident->add_option("--probe", probe_path, "probe sketch PNG")->required();
    ident->add_option("--attributes", attribute_bits, "witness attribute bits, e.g. 010001000100")->required();
    ident->add_option("--gallery", gallery_path, "gallery JSON")->required();
    ident->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    ident->add_option("--top", top, "ranks to print");

    auto* evaluate = app.add_subcommand("evaluate", "run an identification protocol end to end");
    add_common(evaluate, flags);
    evaluate->add_option("--protocol", protocol, "S1, S2 or S3");
    evaluate->add_option("--manifest", manifest_path, "training/split manifest");
    evaluate->add_option("--probe-manifest", probe_manifest, "unseen probe manifest (S3)");
    evaluate->add_option("--distractor-manifest", distractor_manifest, "distractor manifest (S2/S3)");
    evaluate->add_option("--folds", folds, "cross-validation folds");
    evaluate->add_option("--out", out_path, "report JSON path")->required();
    evaluate->add_option("--work-dir", work_dir, "directory for per-fold checkpoints");
    evaluate->add_option("--init-from", init_from, "checkpoint to fine-tune from");

    auto* report = app.add_subcommand("report", "emit the CMC CSV and rank table from a report JSON");
    add_common(report, flags);
    report->add_option("--in", in_path, "report JSON")->required();
    report->add_option("--out", out_path, "CMC CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(flags, manifest_path);
        if (app.got_subcommand(synth)) return cmd_synth(flags, identities, out_path);
        if (app.got_subcommand(sketchify)) return cmd_sketchify(flags, manifest_path, out_path);
        if (app.got_subcommand(preview)) return cmd_augment_preview(flags, manifest_path, out_path, count);
        if (app.got_subcommand(train_cmd)) return cmd_train(flags, manifest_path, out_path, init_from);
        if (app.got_subcommand(gallery)) return cmd_build_gallery(flags, manifest_path, checkpoint_path, out_path);
        if (app.got_subcommand(ident))
            return cmd_identify(flags, probe_path, attribute_bits, gallery_path, checkpoint_path, top);
        if (app.got_subcommand(evaluate))
            return cmd_evaluate(flags, protocol, manifest_path, probe_manifest, distractor_manifest, folds,
                                out_path, work_dir, init_from);
        if (app.got_subcommand(report)) return cmd_report(flags, in_path, out_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
