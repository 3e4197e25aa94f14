#include "sketchid/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sketchid/image_io.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

namespace {

const char* kStandardNames[] = {"bald",   "black_hair", "blond_hair", "brown_hair",
                                "gray_hair", "male",    "asian",      "indian",
                                "white",  "black",      "eyeglasses", "pale_skin"};

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

AttributeVocabulary AttributeVocabulary::standard() {
    AttributeVocabulary v;
    for (const char* n : kStandardNames) v.names.emplace_back(n);
    return v;
}

int AttributeVocabulary::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

void AttributeVocabulary::validate() const {
    if (names.empty()) throw data_error("attribute vocabulary is empty");
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty()) throw data_error("attribute vocabulary contains an empty name");
        if (!seen.insert(n).second) throw data_error("duplicate attribute name: " + n);
    }
}

AttributeVector AttributeVector::parse(const std::string& s) {
    AttributeVector v;
    v.bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') throw data_error("attribute string must be binary, got '" + s + "'");
        v.bits.push_back(c == '1' ? 1 : 0);
    }
    return v;
}

std::string AttributeVector::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (uint8_t b : bits) s += b ? '1' : '0';
    return s;
}

int AttributeVector::hamming(const AttributeVector& o) const {
    if (size() != o.size()) throw data_error("attribute vector length mismatch in hamming distance");
    int d = 0;
    for (int i = 0; i < size(); ++i) d += bits[i] != o.bits[i];
    return d;
}

std::vector<int> DatasetManifest::identities() const {
    std::set<int> ids;
    for (const auto& e : entries) ids.insert(e.identity);
    return {ids.begin(), ids.end()};
}

std::string DatasetManifest::resolve(const std::string& path) const {
    if (base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(base_dir) / path).string();
}

DatasetManifest parse_manifest_text(const std::string& text, const std::string& base_dir) {
    DatasetManifest m;
    m.base_dir = base_dir;

    std::istringstream in(text);
    std::string line;
    int row = -1;  // header is row -1, data rows are 0-based
    bool saw_header = false;
    bool has_witness_column = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_on(line, ',');

        if (!saw_header) {
            if (fields.size() != 4 && fields.size() != 5)
                throw data_error("manifest header must have 4 or 5 columns, got " + std::to_string(fields.size()));
            if (fields[0] != "photo_path" || fields[1] != "sketch_path" || fields[2] != "identity")
                throw data_error("manifest header must start with photo_path,sketch_path,identity");
            const std::string& attr_col = fields[3];
            const std::string prefix = "attributes:";
            if (attr_col.rfind(prefix, 0) != 0)
                throw data_error("manifest attributes column must declare the vocabulary, e.g. attributes:bald|male");
            for (auto& name : split_on(attr_col.substr(prefix.size()), '|')) m.vocabulary.names.push_back(name);
            m.vocabulary.validate();
            if (fields.size() == 5) {
                if (fields[4] != "witness_attributes")
                    throw data_error("manifest fifth column must be witness_attributes");
                has_witness_column = true;
            }
            saw_header = true;
            continue;
        }

        ++row;
        const std::size_t expected = has_witness_column ? 5 : 4;
        if (fields.size() != expected)
            throw data_error("manifest row " + std::to_string(row) + ": expected " + std::to_string(expected) +
                             " fields, got " + std::to_string(fields.size()));

        ManifestEntry e;
        e.photo_path = fields[0];
        e.sketch_path = fields[1];
        try {
            std::size_t pos = 0;
            e.identity = std::stoi(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw data_error("manifest row " + std::to_string(row) + ": identity '" + fields[2] +
                             "' is not an integer");
        }
        if (e.identity < 0)
            throw data_error("manifest row " + std::to_string(row) + ": identity must be non-negative");

        try {
            e.attributes = AttributeVector::parse(fields[3]);
        } catch (const Error& err) {
            throw data_error("manifest row " + std::to_string(row) + ": " + err.what());
        }
        if (e.attributes.size() != m.vocabulary.size())
            throw data_error("manifest row " + std::to_string(row) + ": attribute string has length " +
                             std::to_string(e.attributes.size()) + ", vocabulary has " +
                             std::to_string(m.vocabulary.size()));

        if (has_witness_column && !fields[4].empty()) {
            try {
                e.witness_attributes = AttributeVector::parse(fields[4]);
            } catch (const Error& err) {
                throw data_error("manifest row " + std::to_string(row) + ": " + err.what());
            }
            if (e.witness_attributes.size() != m.vocabulary.size())
                throw data_error("manifest row " + std::to_string(row) + ": witness attribute string has length " +
                                 std::to_string(e.witness_attributes.size()) + ", vocabulary has " +
                                 std::to_string(m.vocabulary.size()));
        } else {
            e.witness_attributes = e.attributes;
        }
        m.entries.push_back(std::move(e));
    }

    if (!saw_header) {
        // An empty file is an empty manifest with the standard vocabulary.
        m.vocabulary = AttributeVocabulary::standard();
    }

    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        if (e.photo_path.empty())
            throw data_error("identity " + std::to_string(e.identity) + " (row " + std::to_string(i) +
                             ") has no photo entry");
        if (e.sketch_path.empty())
            throw data_error("identity " + std::to_string(e.identity) + " (row " + std::to_string(i) +
                             ") has no sketch entry");
    }
    return m;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open manifest: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto m = parse_manifest_text(buf.str(), std::filesystem::path(path).parent_path().string());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        if (!file_exists(m.resolve(e.photo_path)))
            throw data_error("manifest row " + std::to_string(i) + ": missing photo file " + m.resolve(e.photo_path));
        if (!file_exists(m.resolve(e.sketch_path)))
            throw data_error("manifest row " + std::to_string(i) + ": missing sketch file " +
                             m.resolve(e.sketch_path));
    }
    return m;
}

std::string manifest_to_text(const DatasetManifest& manifest) {
    std::string out = "photo_path,sketch_path,identity,attributes:" + join(manifest.vocabulary.names, '|') +
                      ",witness_attributes\n";
    for (const auto& e : manifest.entries) {
        out += e.photo_path + "," + e.sketch_path + "," + std::to_string(e.identity) + "," +
               e.attributes.to_string() + ",";
        if (!(e.witness_attributes == e.attributes)) out += e.witness_attributes.to_string();
        out += "\n";
    }
    return out;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write manifest: " + path);
    out << manifest_to_text(manifest);
    if (!out) throw data_error("failed writing manifest: " + path);
}

Tensor encode_attribute_channels(const Tensor& sketch_image, const AttributeVector& att, int expected_t) {
    if (sketch_image.channels != 1) throw data_error("encode_attribute_channels expects a 1-channel sketch");
    if (expected_t >= 0 && att.size() != expected_t)
        throw data_error("attribute vector has length " + std::to_string(att.size()) + ", expected " +
                         std::to_string(expected_t));
    Tensor out(1 + att.size(), sketch_image.height, sketch_image.width);
    std::copy(sketch_image.plane(0), sketch_image.plane(0) + sketch_image.plane_size(), out.plane(0));
    for (int t = 0; t < att.size(); ++t) {
        double* plane = out.plane(1 + t);
        std::fill(plane, plane + out.plane_size(), att.bits[t] ? 1.0 : 0.0);
    }
    return out;
}

SplitResult split_dataset(const DatasetManifest& manifest, const SplitSpec& spec) {
    if (manifest.entries.empty()) throw data_error("cannot split an empty manifest");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw usage_error("train_fraction must be in (0,1)");

    std::vector<int> ids = manifest.identities();
    const int total = static_cast<int>(ids.size());
    const int train_count = static_cast<int>(std::lround(spec.train_fraction * total));
    if (train_count <= 0 || train_count >= total)
        throw usage_error("train_fraction " + std::to_string(spec.train_fraction) + " yields an empty partition for " +
                          std::to_string(total) + " identities");

    Rng rng(spec.seed);
    for (int i = total - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(uint64_t(i) + 1));
        std::swap(ids[i], ids[j]);
    }

    SplitResult result;
    result.train_identities.assign(ids.begin(), ids.begin() + train_count);
    result.test_identities.assign(ids.begin() + train_count, ids.end());
    std::sort(result.train_identities.begin(), result.train_identities.end());
    std::sort(result.test_identities.begin(), result.test_identities.end());

    const std::set<int> train_set(result.train_identities.begin(), result.train_identities.end());
    result.train.vocabulary = manifest.vocabulary;
    result.train.base_dir = manifest.base_dir;
    result.test.vocabulary = manifest.vocabulary;
    result.test.base_dir = manifest.base_dir;
    for (const auto& e : manifest.entries) {
        if (train_set.count(e.identity))
            result.train.entries.push_back(e);
        else
            result.test.entries.push_back(e);
    }
    return result;
}

PhotoSample load_photo(const DatasetManifest& manifest, const ManifestEntry& entry) {
    PhotoSample s;
    s.image = read_png_rgb(manifest.resolve(entry.photo_path));
    s.identity = entry.identity;
    s.attributes = entry.attributes;
    return s;
}

SketchSample load_sketch(const DatasetManifest& manifest, const ManifestEntry& entry) {
    SketchSample s;
    s.image = read_png_gray(manifest.resolve(entry.sketch_path));
    s.identity = entry.identity;
    s.attributes = entry.attributes;
    s.witness_attributes = entry.witness_attributes;
    return s;
}

}  // namespace sketchid
