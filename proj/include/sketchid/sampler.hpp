#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchid/batch.hpp"
#include "sketchid/datamodel.hpp"

namespace sketchid {

// All (photo, sketch) rows of a manifest loaded into memory, plus the
// identity-level attribute table the impostor rule matches against.
struct LoadedPairSet {
    std::vector<PhotoSample> photos;    // row-aligned
    std::vector<SketchSample> sketches; // row-aligned
    std::vector<int> row_identity;
    std::vector<int> identity_ids;                  // sorted unique
    std::vector<AttributeVector> identity_attrs;    // aligned with identity_ids
    std::vector<std::vector<int>> identity_rows;    // aligned with identity_ids

    std::size_t rows() const { return photos.size(); }
};

LoadedPairSet load_pair_set(const DatasetManifest& manifest);

// For each genuine row: one genuine triple plus four impostor sketches, two
// drawn from identities sharing the photo's exact attribute vector (falling
// back to minimum nonzero Hamming distance when none exists) and two from
// identities with differing vectors. Impostor draws are with replacement;
// provenance is recorded per triple.
PairBatch build_batch(const LoadedPairSet& set, std::span<const int> genuine_rows, uint64_t seed);

// Draws `genuine_count` distinct rows at random and builds the batch.
PairBatch sample_pairs(const LoadedPairSet& set, int genuine_count, uint64_t seed);

}  // namespace sketchid
