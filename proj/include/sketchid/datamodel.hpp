#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sketchid/tensor.hpp"

namespace sketchid {

// Ordered binary attribute vocabulary. The default is the 12-trait set every
// sample in this project is annotated with.
struct AttributeVocabulary {
    std::vector<std::string> names;

    static AttributeVocabulary standard();

    int size() const { return static_cast<int>(names.size()); }
    // Index of a name, -1 if absent.
    int index_of(const std::string& name) const;
    void validate() const;  // unique, non-empty names

    bool operator==(const AttributeVocabulary&) const = default;
};

// One bit per vocabulary entry.
struct AttributeVector {
    std::vector<uint8_t> bits;

    AttributeVector() = default;
    explicit AttributeVector(int t) : bits(t, 0) {}

    int size() const { return static_cast<int>(bits.size()); }
    static AttributeVector parse(const std::string& s);  // '0'/'1' string
    std::string to_string() const;
    int hamming(const AttributeVector& o) const;

    bool operator==(const AttributeVector&) const = default;
};

struct PhotoSample {
    Tensor image;  // 3xHxW, values in [0,1]
    int identity = 0;
    AttributeVector attributes;
};

struct SketchSample {
    Tensor image;  // 1xHxW, values in [0,1]
    int identity = 0;
    AttributeVector attributes;          // ground-truth labels
    AttributeVector witness_attributes;  // network input
};

struct ManifestEntry {
    std::string photo_path;
    std::string sketch_path;
    int identity = 0;
    AttributeVector attributes;
    AttributeVector witness_attributes;  // defaults to `attributes` when the column is empty

    bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
    AttributeVocabulary vocabulary;
    std::vector<ManifestEntry> entries;
    std::string base_dir;  // directory of the manifest file; relative paths resolve against it

    std::vector<int> identities() const;  // sorted unique
    std::string resolve(const std::string& path) const;

    bool operator==(const DatasetManifest& o) const {
        return vocabulary == o.vocabulary && entries == o.entries;
    }
};

struct SplitSpec {
    double train_fraction = 0.4;
    uint64_t seed = 0;
};

// Manifest CSV: header row declares the vocabulary order, one record per
// (photo, sketch) pair. Referenced image files are checked for existence.
DatasetManifest load_manifest(const std::string& path);
// Parse without touching the filesystem for the referenced images.
DatasetManifest parse_manifest_text(const std::string& text, const std::string& base_dir);
void write_manifest(const DatasetManifest& manifest, const std::string& path);
std::string manifest_to_text(const DatasetManifest& manifest);

// Channel 0 is the grayscale sketch; channel 1+t is a constant plane holding
// bit t. When expected_t >= 0 the attribute length is validated against it.
Tensor encode_attribute_channels(const Tensor& sketch_image, const AttributeVector& att, int expected_t = -1);

// Identity-disjoint split. Train identity count = round(fraction * total).
struct SplitResult {
    std::vector<int> train_identities;
    std::vector<int> test_identities;
    DatasetManifest train;
    DatasetManifest test;
};
SplitResult split_dataset(const DatasetManifest& manifest, const SplitSpec& spec);

PhotoSample load_photo(const DatasetManifest& manifest, const ManifestEntry& entry);
SketchSample load_sketch(const DatasetManifest& manifest, const ManifestEntry& entry);

}  // namespace sketchid
