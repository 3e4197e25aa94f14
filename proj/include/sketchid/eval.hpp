#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sketchid/network.hpp"
#include "sketchid/trainer.hpp"

namespace sketchid {

struct GalleryEntry {
    int identity = 0;
    std::vector<double> embedding;
};

struct GalleryIndex {
    std::vector<GalleryEntry> entries;
    uint64_t fingerprint = 0;  // model fingerprint the embeddings came from

    std::size_t size() const { return entries.size(); }
};

struct ProbeResult {
    int probe_identity = -1;
    std::vector<std::pair<int, double>> ranked;  // (identity, distance), ascending distance
    int rank_of_true = 0;                        // 1-based best rank of the true identity; 0 if absent
};

struct CMCCurve {
    std::vector<double> accuracy_at_rank;  // index k-1 holds rank-k accuracy, k = 1..M
};

GalleryIndex build_gallery(const std::vector<PhotoSample>& photos, const CoupledModel& model, int threads = 1);

// Ranks gallery entries by ascending Euclidean distance to the probe
// embedding; ties keep gallery insertion order.
ProbeResult rank_gallery(const std::vector<double>& probe_embedding, const GalleryIndex& index,
                         int true_identity);

ProbeResult identify(const SketchSample& probe, const GalleryIndex& index, const CoupledModel& model,
                     bool use_attributes = true);

double rank_k_accuracy(const std::vector<ProbeResult>& results, int k);
CMCCurve cmc_curve(const std::vector<ProbeResult>& results);

// Appends distractor photos; rejects embeddings from a different model.
GalleryIndex extend_gallery(const GalleryIndex& index, const std::vector<PhotoSample>& distractors,
                            const CoupledModel& model, int threads = 1);

// Identification protocols. S1 splits one dataset by identity per fold and
// tests on the held-out part; S2 additionally floods the gallery with
// distractor photos; S3 trains on one dataset and probes a disjoint one
// (folds repeat with reseeded training), optionally with distractors.
struct ProtocolConfig {
    std::string name = "S1";  // S1, S2 or S3
    std::string train_manifest;
    std::string probe_manifest;       // S3 only: the unseen test dataset
    std::string distractor_manifest;  // required for S2 and S3
    int folds = 10;
    uint64_t seed = 0;
    double train_fraction = 0.4;

    void validate() const;
};

struct FoldReport {
    int fold = 0;
    uint64_t fold_seed = 0;
    std::vector<int> train_identities;
    std::vector<int> test_identities;
    std::vector<double> cmc;
    std::vector<int> probe_ranks;  // rank_of_true per probe (0 = absent)
};

struct ProtocolReport {
    std::string protocol;
    std::string config_hash;
    int gallery_size = 0;
    std::vector<int> summary_ranks;        // the k values reported in the table
    std::vector<double> rank_mean;         // mean accuracy across folds, per summary rank
    std::vector<double> rank_std;          // sample std across folds
    std::vector<std::string> rank_formatted;  // "76.4 ± 1.2" style (percent)
    std::vector<FoldReport> folds;
};

ProtocolReport run_protocol(const ProtocolConfig& cfg, const TrainConfig& train_cfg,
                            const BackboneConfig& photo_cfg, const BackboneConfig& sketch_cfg,
                            const std::string& work_dir, const std::string& config_hash,
                            const std::optional<std::string>& init_from = std::nullopt);

// "76.4 ± 1.2": percent, one decimal.
std::string format_mean_std(double mean, double stddev);

std::string report_to_json(const ProtocolReport& report);
ProtocolReport report_from_json(const std::string& text);
// Two columns (rank, accuracy); accuracy is the across-fold mean.
std::string report_cmc_csv(const ProtocolReport& report);

// Gallery (de)serialization: JSON with the model fingerprint and per-entry
// identity + embedding.
void save_gallery(const GalleryIndex& index, const std::string& config_hash, const std::string& path);
GalleryIndex load_gallery(const std::string& path, std::string* config_hash = nullptr);

}  // namespace sketchid
