#include "sketchid/sampler.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "sketchid/rng.hpp"

namespace sketchid {

LoadedPairSet load_pair_set(const DatasetManifest& manifest) {
    LoadedPairSet set;
    std::map<int, int> id_slot;
    for (const auto& e : manifest.entries) {
        set.photos.push_back(load_photo(manifest, e));
        set.sketches.push_back(load_sketch(manifest, e));
        set.row_identity.push_back(e.identity);
        if (!id_slot.count(e.identity)) {
            id_slot[e.identity] = static_cast<int>(set.identity_ids.size());
            set.identity_ids.push_back(e.identity);
            set.identity_attrs.push_back(e.attributes);
            set.identity_rows.emplace_back();
        }
        set.identity_rows[id_slot[e.identity]].push_back(static_cast<int>(set.photos.size()) - 1);
    }
    // identity_ids arrive in first-appearance order; normalize to sorted order
    // so downstream seeding does not depend on manifest row order.
    std::vector<int> order(set.identity_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return set.identity_ids[a] < set.identity_ids[b]; });
    LoadedPairSet sorted = set;
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted.identity_ids[i] = set.identity_ids[order[i]];
        sorted.identity_attrs[i] = set.identity_attrs[order[i]];
        sorted.identity_rows[i] = set.identity_rows[order[i]];
    }
    return sorted;
}

namespace {

struct BatchBuilder {
    const LoadedPairSet& set;
    PairBatch batch;
    std::vector<int> photo_slot;   // row -> index into batch.photos, -1 if absent
    std::vector<int> sketch_slot;  // row -> index into batch.sketches

    explicit BatchBuilder(const LoadedPairSet& s)
        : set(s), photo_slot(s.rows(), -1), sketch_slot(s.rows(), -1) {}

    int photo_index(int row) {
        if (photo_slot[row] < 0) {
            photo_slot[row] = static_cast<int>(batch.photos.size());
            batch.photos.push_back(set.photos[row]);
        }
        return photo_slot[row];
    }
    int sketch_index(int row) {
        if (sketch_slot[row] < 0) {
            sketch_slot[row] = static_cast<int>(batch.sketches.size());
            batch.sketches.push_back(set.sketches[row]);
        }
        return sketch_slot[row];
    }
};

}  // namespace

PairBatch build_batch(const LoadedPairSet& set, std::span<const int> genuine_rows, uint64_t seed) {
    if (set.identity_ids.size() < 2)
        throw data_error("impostor sampling needs at least two identities, got " +
                         std::to_string(set.identity_ids.size()));
    if (genuine_rows.empty()) throw data_error("cannot build a batch from zero genuine rows");

    const int id_count = static_cast<int>(set.identity_ids.size());
    Rng rng(seed);
    BatchBuilder builder(set);

    // Identity slot lookup by id value.
    auto slot_of = [&](int identity) {
        const auto it = std::lower_bound(set.identity_ids.begin(), set.identity_ids.end(), identity);
        return static_cast<int>(it - set.identity_ids.begin());
    };

    for (int row : genuine_rows) {
        if (row < 0 || row >= static_cast<int>(set.rows()))
            throw data_error("genuine row index out of range");
        const int own_slot = slot_of(set.row_identity[row]);
        const AttributeVector& attrs = set.photos[row].attributes;

        builder.batch.triples.push_back({builder.photo_index(row), builder.sketch_index(row),
                                         PairKind::genuine, PairProvenance::genuine});

        // Partition the other identities by attribute agreement.
        std::vector<int> same, diff;
        int min_hamming = std::numeric_limits<int>::max();
        std::vector<int> nearest;
        for (int s = 0; s < id_count; ++s) {
            if (s == own_slot) continue;
            const int h = attrs.hamming(set.identity_attrs[s]);
            if (h == 0) {
                same.push_back(s);
            } else {
                diff.push_back(s);
                if (h < min_hamming) {
                    min_hamming = h;
                    nearest.clear();
                }
                if (h == min_hamming) nearest.push_back(s);
            }
        }

        auto draw_sketch_of = [&](const std::vector<int>& pool) {
            const int s = pool[rng.below(pool.size())];
            const auto& rows = set.identity_rows[s];
            return rows[rng.below(rows.size())];
        };

        for (int i = 0; i < 2; ++i) {
            const bool fallback = same.empty();
            const int imp_row = draw_sketch_of(fallback ? nearest : same);
            builder.batch.triples.push_back({builder.photo_index(row), builder.sketch_index(imp_row),
                                             PairKind::impostor,
                                             fallback ? PairProvenance::same_attr_fallback
                                                      : PairProvenance::same_attr});
        }
        for (int i = 0; i < 2; ++i) {
            const bool fallback = diff.empty();
            const int imp_row = draw_sketch_of(fallback ? same : diff);
            builder.batch.triples.push_back({builder.photo_index(row), builder.sketch_index(imp_row),
                                             PairKind::impostor,
                                             fallback ? PairProvenance::diff_attr_fallback
                                                      : PairProvenance::diff_attr});
        }
    }
    return std::move(builder.batch);
}

PairBatch sample_pairs(const LoadedPairSet& set, int genuine_count, uint64_t seed) {
    if (genuine_count < 1) throw usage_error("genuine_count must be >= 1");
    if (genuine_count > static_cast<int>(set.rows()))
        throw usage_error("genuine_count " + std::to_string(genuine_count) + " exceeds the " +
                          std::to_string(set.rows()) + " available rows");

    Rng rng(mix_seed(seed, 0x9e37));
    std::vector<int> rows(set.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    for (int i = static_cast<int>(rows.size()) - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(uint64_t(i) + 1));
        std::swap(rows[i], rows[j]);
    }
    rows.resize(genuine_count);
    return build_batch(set, rows, seed);
}

}  // namespace sketchid
