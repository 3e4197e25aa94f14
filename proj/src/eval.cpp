#include "sketchid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sketchid/losses.hpp"
#include "sketchid/parallel.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

using json = nlohmann::ordered_json;

GalleryIndex build_gallery(const std::vector<PhotoSample>& photos, const CoupledModel& model, int threads) {
    if (photos.empty()) throw data_error("cannot build a gallery from zero photos");
    GalleryIndex index;
    index.fingerprint = model.fingerprint();
    index.entries.resize(photos.size());
    parallel_for(photos.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            index.entries[i].identity = photos[i].identity;
            index.entries[i].embedding = model.forward_photo(photos[i].image).embedding;
        }
    });
    return index;
}

ProbeResult rank_gallery(const std::vector<double>& probe_embedding, const GalleryIndex& index,
                         int true_identity) {
    if (index.entries.empty()) throw data_error("cannot identify against an empty gallery");
    ProbeResult r;
    r.probe_identity = true_identity;
    r.ranked.reserve(index.entries.size());
    for (const auto& e : index.entries) {
        if (e.embedding.size() != probe_embedding.size())
            throw data_error("gallery and probe embedding dimensions differ");
        r.ranked.emplace_back(e.identity, euclidean_distance(probe_embedding, e.embedding));
    }
    std::stable_sort(r.ranked.begin(), r.ranked.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
        if (r.ranked[i].first == true_identity) {
            r.rank_of_true = static_cast<int>(i) + 1;
            break;
        }
    }
    return r;
}

ProbeResult identify(const SketchSample& probe, const GalleryIndex& index, const CoupledModel& model,
                     bool use_attributes) {
    if (index.fingerprint != model.fingerprint())
        throw data_error("gallery was built with a different model (fingerprint mismatch)");
    const int t = model.sketch_config().attribute_count;
    const AttributeVector att = use_attributes ? probe.witness_attributes : AttributeVector(t);
    const Tensor encoded = encode_attribute_channels(probe.image, att, t);
    const auto fwd = model.forward_sketch(encoded);
    return rank_gallery(fwd.embedding, index, probe.identity);
}

double rank_k_accuracy(const std::vector<ProbeResult>& results, int k) {
    if (results.empty()) throw data_error("rank-k accuracy over zero probes");
    const int m = static_cast<int>(results.front().ranked.size());
    if (k < 1 || k > m)
        throw data_error("rank " + std::to_string(k) + " out of range for gallery of " + std::to_string(m));
    int hits = 0;
    for (const auto& r : results)
        if (r.rank_of_true >= 1 && r.rank_of_true <= k) ++hits;
    return double(hits) / double(results.size());
}

CMCCurve cmc_curve(const std::vector<ProbeResult>& results) {
    if (results.empty()) throw data_error("CMC over zero probes");
    const int m = static_cast<int>(results.front().ranked.size());
    CMCCurve c;
    c.accuracy_at_rank.resize(m);
    std::vector<int> hits_at(m + 1, 0);
    for (const auto& r : results)
        if (r.rank_of_true >= 1 && r.rank_of_true <= m) hits_at[r.rank_of_true] += 1;
    int acc = 0;
    for (int k = 1; k <= m; ++k) {
        acc += hits_at[k];
        c.accuracy_at_rank[k - 1] = double(acc) / double(results.size());
    }
    return c;
}

GalleryIndex extend_gallery(const GalleryIndex& index, const std::vector<PhotoSample>& distractors,
                            const CoupledModel& model, int threads) {
    if (index.fingerprint != model.fingerprint())
        throw data_error("cannot extend gallery: model fingerprint mismatch");
    GalleryIndex out = index;
    if (distractors.empty()) return out;
    const GalleryIndex extra = build_gallery(distractors, model, threads);
    out.entries.insert(out.entries.end(), extra.entries.begin(), extra.entries.end());
    return out;
}

void ProtocolConfig::validate() const {
    if (name != "S1" && name != "S2" && name != "S3")
        throw usage_error("protocol must be S1, S2 or S3, got " + name);
    if (train_manifest.empty()) throw usage_error("protocol requires a train manifest");
    if (folds < 1) throw usage_error("folds must be >= 1");
    if ((name == "S2" || name == "S3") && distractor_manifest.empty())
        throw usage_error(name + " requires a distractor manifest");
    if (name == "S3" && probe_manifest.empty())
        throw usage_error("S3 requires a probe manifest (the unseen test dataset)");
    if (name != "S3" && !(train_fraction > 0.0 && train_fraction < 1.0))
        throw usage_error("train_fraction must be in (0,1)");
}

std::string format_mean_std(double mean, double stddev) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", mean * 100.0, stddev * 100.0);
    return buf;
}

namespace {

// Evaluation inputs go through the same canonical geometry training crops
// produce: a centered crop at the configured network input size.
std::vector<PhotoSample> photos_of(const DatasetManifest& m, const AugmentConfig& aug) {
    std::vector<PhotoSample> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        PhotoSample p = load_photo(m, e);
        p.image = center_crop(p.image, aug.crop_height, aug.crop_width);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<SketchSample> sketches_of(const DatasetManifest& m, const AugmentConfig& aug) {
    std::vector<SketchSample> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        SketchSample s = load_sketch(m, e);
        s.image = center_crop(s.image, aug.crop_height, aug.crop_width);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

ProtocolReport run_protocol(const ProtocolConfig& cfg, const TrainConfig& train_cfg,
                            const BackboneConfig& photo_cfg, const BackboneConfig& sketch_cfg,
                            const std::string& work_dir, const std::string& config_hash,
                            const std::optional<std::string>& init_from) {
    cfg.validate();
    train_cfg.validate();
    std::filesystem::create_directories(work_dir);

    const DatasetManifest train_manifest = load_manifest(cfg.train_manifest);
    std::optional<DatasetManifest> probe_manifest;
    if (!cfg.probe_manifest.empty()) probe_manifest = load_manifest(cfg.probe_manifest);
    std::optional<DatasetManifest> distractor_manifest;
    if (!cfg.distractor_manifest.empty()) distractor_manifest = load_manifest(cfg.distractor_manifest);

    std::vector<PhotoSample> distractors;
    if (distractor_manifest) distractors = photos_of(*distractor_manifest, train_cfg.augment);

    ProtocolReport report;
    report.protocol = cfg.name;
    report.config_hash = config_hash;

    const int threads = train_cfg.effective_threads();

    for (int fold = 0; fold < cfg.folds; ++fold) {
        const uint64_t fold_seed = mix_seed(cfg.seed, 0xf01d + uint64_t(fold));

        DatasetManifest fold_train;
        DatasetManifest fold_test;
        FoldReport fr;
        fr.fold = fold;
        fr.fold_seed = fold_seed;

        if (cfg.name == "S3") {
            fold_train = train_manifest;
            fold_test = *probe_manifest;
            fr.train_identities = fold_train.identities();
            fr.test_identities = fold_test.identities();
        } else {
            SplitResult split = split_dataset(train_manifest, SplitSpec{cfg.train_fraction, fold_seed});
            fold_train = std::move(split.train);
            fold_test = std::move(split.test);
            fr.train_identities = split.train_identities;
            fr.test_identities = split.test_identities;
        }

        TrainConfig fold_train_cfg = train_cfg;
        fold_train_cfg.seed = mix_seed(fold_seed, 0x7e57);
        const std::string fold_dir = (std::filesystem::path(work_dir) / ("fold" + std::to_string(fold))).string();

        TrainResult tr;
        try {
            tr = train(fold_train, fold_train_cfg, photo_cfg, sketch_cfg, fold_dir, init_from,
                       {{"config_hash", config_hash}, {"protocol", cfg.name}});
        } catch (const Error& e) {
            throw Error(e.kind(), "fold " + std::to_string(fold) + ": " + e.what());
        }
        const CoupledModel model = load_checkpoint(tr.checkpoint_path).model;

        GalleryIndex gallery = build_gallery(photos_of(fold_test, train_cfg.augment), model, threads);
        if (!distractors.empty()) gallery = extend_gallery(gallery, distractors, model, threads);

        const auto probes = sketches_of(fold_test, train_cfg.augment);
        std::vector<ProbeResult> results(probes.size());
        parallel_for(probes.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                results[i] = identify(probes[i], gallery, model, train_cfg.use_attributes);
        });

        const CMCCurve curve = cmc_curve(results);
        fr.cmc = curve.accuracy_at_rank;
        for (const auto& r : results) fr.probe_ranks.push_back(r.rank_of_true);
        report.gallery_size = static_cast<int>(gallery.size());
        report.folds.push_back(std::move(fr));
    }

    // Summary table over the standard ranks that fit this gallery.
    for (int k : {1, 5, 10, 20, 50}) {
        if (k > report.gallery_size) continue;
        double mean = 0.0;
        for (const auto& f : report.folds) mean += f.cmc[k - 1];
        mean /= report.folds.size();
        double var = 0.0;
        if (report.folds.size() > 1) {
            for (const auto& f : report.folds) var += (f.cmc[k - 1] - mean) * (f.cmc[k - 1] - mean);
            var /= double(report.folds.size() - 1);
        }
        report.summary_ranks.push_back(k);
        report.rank_mean.push_back(mean);
        report.rank_std.push_back(std::sqrt(var));
        report.rank_formatted.push_back(format_mean_std(mean, std::sqrt(var)));
    }
    return report;
}

std::string report_to_json(const ProtocolReport& report) {
    json j;
    j["protocol"] = report.protocol;
    j["config_hash"] = report.config_hash;
    j["gallery_size"] = report.gallery_size;
    json summary;
    summary["ranks"] = report.summary_ranks;
    summary["mean"] = report.rank_mean;
    summary["std"] = report.rank_std;
    summary["formatted"] = report.rank_formatted;
    j["summary"] = summary;
    j["folds"] = json::array();
    for (const auto& f : report.folds) {
        json jf;
        jf["fold"] = f.fold;
        jf["fold_seed"] = f.fold_seed;
        jf["train_identities"] = f.train_identities;
        jf["test_identities"] = f.test_identities;
        jf["cmc"] = f.cmc;
        jf["probe_ranks"] = f.probe_ranks;
        j["folds"].push_back(std::move(jf));
    }
    return j.dump(2) + "\n";
}

ProtocolReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw data_error(std::string("invalid report JSON: ") + e.what());
    }
    try {
        ProtocolReport r;
        r.protocol = j.at("protocol").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.gallery_size = j.at("gallery_size").get<int>();
        r.summary_ranks = j.at("summary").at("ranks").get<std::vector<int>>();
        r.rank_mean = j.at("summary").at("mean").get<std::vector<double>>();
        r.rank_std = j.at("summary").at("std").get<std::vector<double>>();
        r.rank_formatted = j.at("summary").at("formatted").get<std::vector<std::string>>();
        for (const auto& jf : j.at("folds")) {
            FoldReport f;
            f.fold = jf.at("fold").get<int>();
            f.fold_seed = jf.at("fold_seed").get<uint64_t>();
            f.train_identities = jf.at("train_identities").get<std::vector<int>>();
            f.test_identities = jf.at("test_identities").get<std::vector<int>>();
            f.cmc = jf.at("cmc").get<std::vector<double>>();
            f.probe_ranks = jf.at("probe_ranks").get<std::vector<int>>();
            r.folds.push_back(std::move(f));
        }
        return r;
    } catch (const json::exception& e) {
        throw data_error(std::string("report JSON missing fields: ") + e.what());
    }
}

std::string report_cmc_csv(const ProtocolReport& report) {
    if (report.folds.empty()) throw data_error("report holds no folds");
    const std::size_t m = report.folds.front().cmc.size();
    std::string out = "rank,accuracy\n";
    char buf[64];
    for (std::size_t k = 0; k < m; ++k) {
        double mean = 0.0;
        for (const auto& f : report.folds) mean += f.cmc[k];
        mean /= report.folds.size();
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", k + 1, mean);
        out += buf;
    }
    return out;
}

void save_gallery(const GalleryIndex& index, const std::string& config_hash, const std::string& path) {
    json j;
    j["config_hash"] = config_hash;
    j["fingerprint"] = index.fingerprint;
    j["entries"] = json::array();
    for (const auto& e : index.entries)
        j["entries"].push_back(json{{"identity", e.identity}, {"embedding", e.embedding}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write gallery: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw data_error("failed writing gallery: " + path);
}

GalleryIndex load_gallery(const std::string& path, std::string* config_hash) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open gallery: " + path);
    json j;
    try {
        in >> j;
        GalleryIndex index;
        index.fingerprint = j.at("fingerprint").get<uint64_t>();
        for (const auto& je : j.at("entries")) {
            GalleryEntry e;
            e.identity = je.at("identity").get<int>();
            e.embedding = je.at("embedding").get<std::vector<double>>();
            index.entries.push_back(std::move(e));
        }
        if (config_hash) *config_hash = j.at("config_hash").get<std::string>();
        if (index.entries.empty()) throw data_error("gallery is empty: " + path);
        return index;
    } catch (const json::exception& e) {
        throw data_error("invalid gallery file " + path + ": " + e.what());
    }
}

}  // namespace sketchid
