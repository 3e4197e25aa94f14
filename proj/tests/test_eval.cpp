#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "sketchid/config.hpp"
#include "sketchid/eval.hpp"
#include "sketchid/synthfaces.hpp"
#include "testutil.hpp"

using namespace sketchid;

namespace {

GalleryIndex random_gallery(int m, int dim, uint64_t seed, uint64_t fingerprint = 1) {
    GalleryIndex g;
    g.fingerprint = fingerprint;
    sketchid::Rng rng(seed);
    for (int i = 0; i < m; ++i) {
        GalleryEntry e;
        e.identity = i;
        e.embedding.resize(dim);
        for (auto& v : e.embedding) v = rng.uniform(-1, 1);
        g.entries.push_back(std::move(e));
    }
    return g;
}

// Brute-force oracle: compute every distance with plain loops, sort stably.
ProbeResult brute_force(const std::vector<double>& probe, const GalleryIndex& g, int true_id) {
    ProbeResult r;
    r.probe_identity = true_id;
    for (const auto& e : g.entries) {
        double s = 0;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            const double d = probe[i] - e.embedding[i];
            s += d * d;
        }
        r.ranked.emplace_back(e.identity, std::sqrt(s));
    }
    std::stable_sort(r.ranked.begin(), r.ranked.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    for (std::size_t i = 0; i < r.ranked.size(); ++i)
        if (r.ranked[i].first == true_id) {
            r.rank_of_true = static_cast<int>(i) + 1;
            break;
        }
    return r;
}

ProbeResult fake_result(int true_id, int rank, int m) {
    // Synthetic ranked list: true identity placed at `rank` (1-based), filler
    // identities everywhere else.
    ProbeResult r;
    r.probe_identity = true_id;
    for (int i = 0; i < m; ++i)
        r.ranked.emplace_back(i + 1 == rank ? true_id : 100000 + i, double(i));
    r.rank_of_true = rank;
    return r;
}

}  // namespace

TEST_CASE("rank_gallery matches the brute-force oracle including ties") {
    GalleryIndex g = random_gallery(100, 64, 5);
    // Duplicate embeddings force ties resolved by insertion order.
    g.entries[40].embedding = g.entries[17].embedding;
    g.entries[41].embedding = g.entries[17].embedding;

    sketchid::Rng rng(6);
    for (int p = 0; p < 20; ++p) {
        std::vector<double> probe(64);
        for (auto& v : probe) v = rng.uniform(-1, 1);
        if (p == 0) probe = g.entries[17].embedding;  // exact triple tie

        const auto got = rank_gallery(probe, g, p % 100);
        const auto want = brute_force(probe, g, p % 100);
        REQUIRE(got.ranked.size() == want.ranked.size());
        for (std::size_t i = 0; i < got.ranked.size(); ++i) {
            CHECK(got.ranked[i].first == want.ranked[i].first);
            CHECK(got.ranked[i].second == doctest::Approx(want.ranked[i].second).epsilon(1e-12));
        }
        CHECK(got.rank_of_true == want.rank_of_true);
    }
}

TEST_CASE("an exact-match gallery entry ranks first at distance zero") {
    GalleryIndex g = random_gallery(10, 16, 7);
    const auto probe = g.entries[4].embedding;
    const auto r = rank_gallery(probe, g, 4);
    CHECK(r.rank_of_true == 1);
    CHECK(r.ranked[0].first == 4);
    CHECK(r.ranked[0].second == 0.0);
    CHECK(r.ranked.size() == 10);
}

TEST_CASE("a single-entry gallery ranks that identity") {
    const GalleryIndex g = random_gallery(1, 8, 9);
    const auto r = rank_gallery(testutil::random_vector(8, 10), g, 0);
    CHECK(r.ranked.size() == 1);
    CHECK(r.rank_of_true == 1);
}

TEST_CASE("rank_k_accuracy") {
    const int m = 20;
    std::vector<ProbeResult> results = {fake_result(1, 1, m), fake_result(2, 4, m), fake_result(3, 11, m)};

    SUBCASE("ranks {1,4,11} at k=10 give 2/3") {
        CHECK(rank_k_accuracy(results, 10) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("k = M with everyone present gives 1.0") {
        CHECK(rank_k_accuracy(results, m) == doctest::Approx(1.0));
    }
    SUBCASE("monotone in k") {
        for (int k = 1; k < m; ++k) CHECK(rank_k_accuracy(results, k) <= rank_k_accuracy(results, k + 1));
    }
    SUBCASE("out-of-range k is rejected") {
        CHECK_THROWS_AS(rank_k_accuracy(results, 0), Error);
        CHECK_THROWS_AS(rank_k_accuracy(results, m + 1), Error);
    }
}

TEST_CASE("cmc curve") {
    const int m = 15;
    SUBCASE("all probes at rank 1 give a constant curve") {
        std::vector<ProbeResult> results(4, fake_result(7, 1, m));
        const auto c = cmc_curve(results);
        REQUIRE(c.accuracy_at_rank.size() == std::size_t(m));
        for (double v : c.accuracy_at_rank) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("curve is non-decreasing and consistent with rank_k_accuracy") {
        sketchid::Rng rng(12);
        std::vector<ProbeResult> results;
        for (int i = 0; i < 40; ++i)
            results.push_back(fake_result(i, 1 + int(rng.below(m)), m));
        const auto c = cmc_curve(results);
        for (int k = 1; k < m; ++k) CHECK(c.accuracy_at_rank[k] >= c.accuracy_at_rank[k - 1]);
        CHECK(c.accuracy_at_rank[9] == doctest::Approx(rank_k_accuracy(results, 10)));
        CHECK(c.accuracy_at_rank[m - 1] == doctest::Approx(1.0));  // everyone present
    }
}

TEST_CASE("gallery build and extension against a real model") {
    testutil::TempDir dir("eval_synth");
    SynthConfig synth;
    synth.identities = 6;
    synth.seed = 13;
    const auto manifest = synth_dataset(synth, dir.path());
    const CoupledModel model =
        CoupledModel::initialized(BackboneConfig::desk(3), BackboneConfig::desk(13), 3);

    std::vector<PhotoSample> photos;
    std::vector<SketchSample> sketches;
    for (const auto& e : manifest.entries) {
        photos.push_back(load_photo(manifest, e));
        sketches.push_back(load_sketch(manifest, e));
    }

    const GalleryIndex g = build_gallery(photos, model, 1);
    CHECK(g.size() == 6);
    CHECK(g.fingerprint == model.fingerprint());

    // Deterministic rebuild.
    const GalleryIndex g2 = build_gallery(photos, model, 2);
    for (std::size_t i = 0; i < g.entries.size(); ++i) CHECK(g.entries[i].embedding == g2.entries[i].embedding);

    // identify returns a full ranked list over the gallery.
    const auto r = identify(sketches[2], g, model);
    CHECK(r.ranked.size() == 6);
    CHECK(r.rank_of_true >= 1);

    // Extension keeps the original entries and never improves a rank.
    const GalleryIndex extended = extend_gallery(g, photos, model, 1);
    CHECK(extended.size() == 12);
    const auto r2 = identify(sketches[2], extended, model);
    CHECK(r2.rank_of_true >= r.rank_of_true);

    CHECK(extend_gallery(g, {}, model, 1).size() == g.size());

    // A different model is rejected by fingerprint.
    CoupledModel other = model;
    other.values()[0] += 0.5;
    CHECK_THROWS_AS(extend_gallery(g, photos, other, 1), Error);
    CHECK_THROWS_AS(identify(sketches[0], g, other), Error);
}

TEST_CASE("gallery files round-trip") {
    testutil::TempDir dir("gallery_io");
    const GalleryIndex g = random_gallery(5, 8, 3, 0xabcdef);
    save_gallery(g, "cafe0123", dir.file("g.json"));
    std::string hash;
    const GalleryIndex back = load_gallery(dir.file("g.json"), &hash);
    CHECK(hash == "cafe0123");
    CHECK(back.fingerprint == g.fingerprint);
    REQUIRE(back.size() == g.size());
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
        CHECK(back.entries[i].identity == g.entries[i].identity);
        CHECK(back.entries[i].embedding == g.entries[i].embedding);
    }
    CHECK_THROWS_AS(load_gallery(dir.file("missing.json")), Error);
}

TEST_CASE("format_mean_std renders percent with one decimal") {
    CHECK(format_mean_std(0.764, 0.012) == "76.4 ± 1.2");
    CHECK(format_mean_std(1.0, 0.0) == "100.0 ± 0.0");
}

TEST_CASE("protocol config validation") {
    ProtocolConfig cfg;
    cfg.train_manifest = "m.csv";
    CHECK_NOTHROW(cfg.validate());
    cfg.name = "S2";
    CHECK_THROWS_AS(cfg.validate(), Error);  // needs distractors
    cfg.distractor_manifest = "d.csv";
    CHECK_NOTHROW(cfg.validate());
    cfg.name = "S3";
    CHECK_THROWS_AS(cfg.validate(), Error);  // needs a probe manifest
    cfg.probe_manifest = "p.csv";
    CHECK_NOTHROW(cfg.validate());
    cfg.name = "S9";
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("S1 protocol run: disjoint folds, deterministic reports, std 0 for one fold") {
    testutil::TempDir data("proto_data"), work_a("proto_a"), work_b("proto_b");
    SynthConfig synth;
    synth.identities = 10;
    synth.seed = 8;
    const auto manifest = synth_dataset(synth, data.path());

    TrainConfig tcfg;
    tcfg.epochs = 1;
    tcfg.batch_size = 4;
    tcfg.threads = 1;
    tcfg.augment.crop_height = 32;
    tcfg.augment.crop_width = 32;
    tcfg.augment.max_displacement = 1.0;
    tcfg.augment.scale_max = 1.05;

    ProtocolConfig pcfg;
    pcfg.name = "S1";
    pcfg.train_manifest = data.file("manifest.csv");
    pcfg.folds = 2;
    pcfg.seed = 7;
    pcfg.train_fraction = 0.4;

    const auto photo_cfg = BackboneConfig::desk(3);
    const auto sketch_cfg = BackboneConfig::desk(13);

    const auto report = run_protocol(pcfg, tcfg, photo_cfg, sketch_cfg, work_a.path(), "hash1");
    REQUIRE(report.folds.size() == 2);
    for (const auto& f : report.folds) {
        CHECK(f.train_identities.size() == 4);
        CHECK(f.test_identities.size() == 6);
        for (int id : f.train_identities)
            CHECK(std::find(f.test_identities.begin(), f.test_identities.end(), id) ==
                  f.test_identities.end());
        CHECK(f.cmc.size() == 6);  // gallery of the 6 test identities
        CHECK(f.probe_ranks.size() == 6);
    }
    CHECK(report.gallery_size == 6);

    // Byte-identical on rerun (single-threaded).
    const auto again = run_protocol(pcfg, tcfg, photo_cfg, sketch_cfg, work_b.path(), "hash1");
    CHECK(report_to_json(report) == report_to_json(again));

    // Round trip through JSON.
    const auto back = report_from_json(report_to_json(report));
    CHECK(back.protocol == "S1");
    CHECK(back.folds.size() == 2);
    CHECK(back.folds[1].cmc == report.folds[1].cmc);

    // CSV emitter: header plus one row per rank.
    const std::string csv = report_cmc_csv(report);
    CHECK(csv.rfind("rank,accuracy\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

    // One fold reports std 0.
    ProtocolConfig one = pcfg;
    one.folds = 1;
    testutil::TempDir work_c("proto_c");
    const auto single = run_protocol(one, tcfg, photo_cfg, sketch_cfg, work_c.path(), "hash1");
    for (double s : single.rank_std) CHECK(s == 0.0);
}
