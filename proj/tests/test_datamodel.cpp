#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "sketchid/datamodel.hpp"
#include "sketchid/image_io.hpp"
#include "sketchid/synthfaces.hpp"
#include "testutil.hpp"

using namespace sketchid;

namespace {

std::string header() {
    std::string vocab;
    for (const auto& n : AttributeVocabulary::standard().names) {
        if (!vocab.empty()) vocab += '|';
        vocab += n;
    }
    return "photo_path,sketch_path,identity,attributes:" + vocab + ",witness_attributes\n";
}

}  // namespace

TEST_CASE("standard vocabulary has the 12 traits in order") {
    const auto v = AttributeVocabulary::standard();
    REQUIRE(v.size() == 12);
    CHECK(v.names.front() == "bald");
    CHECK(v.names[5] == "male");
    CHECK(v.names.back() == "pale_skin");
    std::set<std::string> unique(v.names.begin(), v.names.end());
    CHECK(unique.size() == 12);
    CHECK_NOTHROW(v.validate());
}

TEST_CASE("empty manifest parses to zero entries") {
    const auto m = parse_manifest_text("", "");
    CHECK(m.entries.empty());
    CHECK(m.identities().empty());
}

TEST_CASE("two identities, one pair each") {
    const std::string text = header() +
                             "p0.png,s0.png,0,100001001000,\n"
                             "p1.png,s1.png,1,010000100100,\n";
    const auto m = parse_manifest_text(text, "");
    CHECK(m.entries.size() == 2);
    CHECK(m.identities() == std::vector<int>{0, 1});
    CHECK(m.entries[0].witness_attributes == m.entries[0].attributes);
}

TEST_CASE("11-bit attribute string under the 12-entry vocabulary names the row") {
    const std::string text = header() +
                             "p0.png,s0.png,0,100001001000,\n"
                             "p1.png,s1.png,1,01000010010,\n";
    try {
        parse_manifest_text(text, "");
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("missing photo or sketch path is an integrity error naming the identity") {
    const std::string no_sketch = header() + "p0.png,,7,100001001000,\n";
    try {
        parse_manifest_text(no_sketch, "");
        FAIL("expected an integrity error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("identity 7") != std::string::npos);
        CHECK(std::string(e.what()).find("sketch") != std::string::npos);
    }
}

TEST_CASE("witness column may differ from the label column") {
    const std::string text = header() +
                             "p0.png,s0.png,0,100001001000,000001001000\n"
                             "p1.png,s1.png,1,010000100100,\n";
    const auto m = parse_manifest_text(text, "");
    CHECK(m.entries[0].witness_attributes.to_string() == "000001001000");
    CHECK(m.entries[0].attributes.to_string() == "100001001000");
    CHECK(m.entries[1].witness_attributes == m.entries[1].attributes);
}

TEST_CASE("manifest round-trips through its text form") {
    sketchid::Rng rng(99);
    DatasetManifest m;
    m.vocabulary = AttributeVocabulary::standard();
    for (int i = 0; i < 20; ++i) {
        ManifestEntry e;
        e.photo_path = "photos/p" + std::to_string(i) + ".png";
        e.sketch_path = "sketches/s" + std::to_string(i) + ".png";
        e.identity = i / 2;
        AttributeVector a(12);
        for (auto& b : a.bits) b = rng.bernoulli(0.4);
        e.attributes = a;
        e.witness_attributes = a;
        if (rng.bernoulli(0.3)) e.witness_attributes.bits[0] ^= 1;
        m.entries.push_back(e);
    }
    const auto again = parse_manifest_text(manifest_to_text(m), "");
    CHECK(again == m);
}

TEST_CASE("load_manifest checks image existence") {
    testutil::TempDir dir("manifest");
    const std::string path = dir.file("m.csv");
    {
        DatasetManifest m;
        m.vocabulary = AttributeVocabulary::standard();
        ManifestEntry e;
        e.photo_path = "p.png";
        e.sketch_path = "s.png";
        e.identity = 0;
        e.attributes = AttributeVector::parse("000000000000");
        e.witness_attributes = e.attributes;
        m.entries.push_back(e);
        write_manifest(m, path);
    }
    CHECK_THROWS_AS(load_manifest(path), Error);  // images do not exist yet
    write_png(testutil::random_tensor(3, 8, 8, 1), dir.file("p.png"));
    write_png(testutil::random_tensor(1, 8, 8, 2), dir.file("s.png"));
    const auto m = load_manifest(path);
    CHECK(m.entries.size() == 1);
    CHECK_THROWS_AS(load_manifest(dir.file("absent.csv")), Error);
}

TEST_CASE("attribute channel encoding") {
    const Tensor sketch = testutil::random_tensor(1, 6, 5, 3);

    SUBCASE("all-zero attributes give all-zero planes") {
        const auto out = encode_attribute_channels(sketch, AttributeVector(12), 12);
        REQUIRE(out.channels == 13);
        for (std::size_t i = 0; i < sketch.plane_size(); ++i) CHECK(out.plane(0)[i] == sketch.plane(0)[i]);
        for (int t = 1; t < 13; ++t)
            for (std::size_t i = 0; i < out.plane_size(); ++i) CHECK(out.plane(t)[i] == 0.0);
    }
    SUBCASE("a single set bit becomes an all-ones plane") {
        AttributeVector a(12);
        a.bits[5] = 1;  // male
        const auto out = encode_attribute_channels(sketch, a, 12);
        for (int t = 0; t < 12; ++t) {
            const double expect = t == 5 ? 1.0 : 0.0;
            for (std::size_t i = 0; i < out.plane_size(); ++i) CHECK(out.plane(1 + t)[i] == expect);
        }
    }
    SUBCASE("wrong attribute length is a dimension error") {
        CHECK_THROWS_AS(encode_attribute_channels(sketch, AttributeVector(11), 12), Error);
    }
    SUBCASE("injective in the attribute vector") {
        sketchid::Rng rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            AttributeVector a(12), b(12);
            for (auto& x : a.bits) x = rng.bernoulli(0.5);
            b = a;
            b.bits[rng.below(12)] ^= 1;
            const auto ea = encode_attribute_channels(sketch, a);
            const auto eb = encode_attribute_channels(sketch, b);
            CHECK(ea.data != eb.data);
        }
    }
}

TEST_CASE("identity splits") {
    DatasetManifest m;
    m.vocabulary = AttributeVocabulary::standard();
    auto add = [&](int identity) {
        ManifestEntry e;
        e.photo_path = "p.png";
        e.sketch_path = "s.png";
        e.identity = identity;
        e.attributes = AttributeVector(12);
        e.witness_attributes = e.attributes;
        m.entries.push_back(e);
    };

    SUBCASE("123 identities at fraction 0.39 gives the 48/75 split") {
        for (int i = 0; i < 123; ++i) add(i);
        const auto r = split_dataset(m, SplitSpec{0.39, 5});
        CHECK(r.train_identities.size() == 48);
        CHECK(r.test_identities.size() == 75);
    }
    SUBCASE("same seed twice gives identical partitions, and partitions are disjoint") {
        for (int i = 0; i < 10; ++i) add(100 + i);
        const auto a = split_dataset(m, SplitSpec{0.4, 17});
        const auto b = split_dataset(m, SplitSpec{0.4, 17});
        CHECK(a.train_identities == b.train_identities);
        CHECK(a.test_identities == b.test_identities);
        CHECK(a.train_identities.size() == 4);
        CHECK(a.test_identities.size() == 6);
        std::set<int> train(a.train_identities.begin(), a.train_identities.end());
        for (int id : a.test_identities) CHECK(!train.count(id));
    }
    SUBCASE("identity partition property across seeds") {
        for (int i = 0; i < 17; ++i) add(i * 3);
        const auto all = m.identities();
        for (uint64_t seed = 0; seed < 20; ++seed) {
            const auto r = split_dataset(m, SplitSpec{0.4, seed});
            std::vector<int> merged = r.train_identities;
            merged.insert(merged.end(), r.test_identities.begin(), r.test_identities.end());
            std::sort(merged.begin(), merged.end());
            CHECK(merged == all);
        }
    }
    SUBCASE("degenerate fraction is a configuration error") {
        for (int i = 0; i < 5; ++i) add(i);
        CHECK_THROWS_AS(split_dataset(m, SplitSpec{0.01, 0}), Error);
        CHECK_THROWS_AS(split_dataset(m, SplitSpec{0.999, 0}), Error);
    }
}

TEST_CASE("PNG round trip preserves 8-bit values") {
    testutil::TempDir dir("png");
    Tensor rgb(3, 9, 7);
    sketchid::Rng rng(4);
    for (auto& v : rgb.data) v = double(rng.below(256)) / 255.0;
    write_png(rgb, dir.file("x.png"));
    const Tensor back = read_png(dir.file("x.png"));
    REQUIRE(back.channels == 3);
    REQUIRE(back.height == 9);
    CHECK(testutil::max_abs_diff(rgb.data, back.data) == 0.0);

    Tensor gray(1, 5, 6);
    for (auto& v : gray.data) v = double(rng.below(256)) / 255.0;
    write_png(gray, dir.file("g.png"));
    const Tensor gback = read_png(dir.file("g.png"));
    REQUIRE(gback.channels == 1);
    CHECK(testutil::max_abs_diff(gray.data, gback.data) == 0.0);
}

TEST_CASE("synthetic dataset generates a loadable manifest") {
    testutil::TempDir dir("synth");
    SynthConfig cfg;
    cfg.identities = 6;
    cfg.seed = 3;
    const auto m = synth_dataset(cfg, dir.path());
    CHECK(m.entries.size() == 6);
    const auto loaded = load_manifest(dir.file("manifest.csv"));
    CHECK(loaded.entries.size() == 6);
    CHECK(loaded.identities().size() == 6);
    const auto photo = load_photo(loaded, loaded.entries[0]);
    CHECK(photo.image.channels == 3);
    CHECK(photo.image.height == cfg.height);
}

TEST_CASE("eyeglasses bit flips exactly the overlay") {
    SynthConfig cfg;
    FaceParams p = draw_face_params(cfg, 42);
    p.attributes.bits[10] = 0;
    const Tensor without = render_face(p);
    p.attributes.bits[10] = 1;
    const Tensor with = render_face(p);
    CHECK(without.data != with.data);
    CHECK(render_face(p).data == with.data);  // same params, same pixels
}

TEST_CASE("synth dataset is bit-deterministic per seed") {
    testutil::TempDir a("synth_a"), b("synth_b");
    SynthConfig cfg;
    cfg.identities = 3;
    cfg.seed = 11;
    synth_dataset(cfg, a.path());
    synth_dataset(cfg, b.path());
    for (const char* name : {"photo_0000.png", "sketch_0002.png", "manifest.csv"}) {
        std::ifstream fa(a.file(name), std::ios::binary), fb(b.file(name), std::ios::binary);
        const std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        const std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        CHECK(da == db);
        CHECK(!da.empty());
    }
}
