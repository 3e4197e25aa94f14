#pragma once

#include <string>
#include <vector>

#include "sketchid/datamodel.hpp"

namespace sketchid {

// y_cont: 0 for a genuine (same identity) pair, 1 for an impostor pair.
enum class PairKind { genuine = 0, impostor = 1 };

// How an impostor was selected relative to the genuine photo's attributes.
enum class PairProvenance {
    genuine,
    same_attr,           // identity with an identical attribute vector
    same_attr_fallback,  // no exact match existed; minimum-Hamming identity
    diff_attr,           // identity with a differing attribute vector
    diff_attr_fallback,  // every identity shared the photo's attributes
};

const char* provenance_name(PairProvenance p);

struct PairTriple {
    int photo_index = 0;   // into PairBatch::photos
    int sketch_index = 0;  // into PairBatch::sketches
    PairKind label = PairKind::genuine;
    PairProvenance provenance = PairProvenance::genuine;
};

// Training unit for the verification term. The photo and sketch arrays hold
// each distinct sample exactly once; triples reference them by index, so the
// attribute terms can average over unique samples while the verification
// term averages over pairs.
struct PairBatch {
    std::vector<PhotoSample> photos;
    std::vector<SketchSample> sketches;
    std::vector<PairTriple> triples;

    void validate() const;  // index bounds, label/identity consistency
};

}  // namespace sketchid
