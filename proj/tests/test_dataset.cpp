#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>

#include "doctest.h"
#include "reglab/dataset.hpp"
#include "test_util.hpp"

using namespace reglab;

namespace {
std::string fixture(const std::string& name) {
    return std::string(REGLAB_FIXTURES_DIR) + "/" + name;
}
}  // namespace

TEST_CASE("catalog invariants") {
    ClassCatalog cat = ClassCatalog::highway_assets();
    CHECK(cat.det_count() == 7);
    CHECK(cat.seg_count() == 5);
    CHECK_NOTHROW(cat.validate());

    ClassCatalog bad = cat;
    bad.segmentation_classes.push_back("Not a class");
    CHECK_THROWS_AS(bad.validate(), SchemaError);

    ClassCatalog dup = cat;
    dup.detection_classes.push_back("Pavilions");
    CHECK_THROWS_AS(dup.validate(), SchemaError);
}

TEST_CASE("single-scene identity round trip") {
    const std::string text = R"({
      "catalog": {"detection_classes": ["a"], "segmentation_classes": []},
      "scenes": [{"scene_id": "s0",
                  "ground_truth": [{"box": [0, 0, 1, 1], "class": "a"}],
                  "predictions": []}]})";
    const Dataset d = parse_dataset(text);
    REQUIRE(d.scenes.size() == 1);
    REQUIRE(d.scenes[0].ground_truth.size() == 1);
    CHECK(d.scenes[0].ground_truth[0].class_id == 0);
    CHECK(d.scenes[0].ground_truth[0].box.x_max == 1.0);
}

TEST_CASE("degenerate box is a GeometryError") {
    const std::string text = R"({
      "catalog": {"detection_classes": ["a"], "segmentation_classes": []},
      "scenes": [{"scene_id": "s0",
                  "ground_truth": [{"box": [2, 0, 2, 1], "class": "a"}]}]})";
    CHECK_THROWS_AS(parse_dataset(text), GeometryError);
}

TEST_CASE("malformed JSON and schema violations") {
    CHECK_THROWS_AS(parse_dataset("{not json"), ParseError);
    CHECK_THROWS_AS(parse_dataset(R"({"scenes": []})"), SchemaError);
    const std::string bad_class = R"({
      "catalog": {"detection_classes": ["a"], "segmentation_classes": []},
      "scenes": [{"scene_id": "s0",
                  "ground_truth": [{"box": [0, 0, 1, 1], "class": "zzz"}]}]})";
    CHECK_THROWS_AS(parse_dataset(bad_class), SchemaError);
}

TEST_CASE("appendix counts fixture totals 3650") {
    const AnnotationCounts counts = load_counts(fixture("appendix_counts.json"));
    CHECK(counts.total == 3650);
    CHECK(counts.per_class.at("Single-arm poles") == 1500);
    const AnnotationCounts seg = load_counts(fixture("appendix_seg_counts.json"));
    CHECK(seg.total == 1200);
}

TEST_CASE("dataset serialization round trip on fixtures") {
    const Dataset d = load_dataset(fixture("tiny_dataset.json"));
    const Dataset again = parse_dataset(serialize_dataset(d));
    REQUIRE(again.scenes.size() == d.scenes.size());
    for (size_t s = 0; s < d.scenes.size(); ++s) {
        CHECK(again.scenes[s].scene_id == d.scenes[s].scene_id);
        REQUIRE(again.scenes[s].ground_truth.size() == d.scenes[s].ground_truth.size());
        REQUIRE(again.scenes[s].predictions.size() == d.scenes[s].predictions.size());
        for (size_t i = 0; i < d.scenes[s].predictions.size(); ++i) {
            CHECK(again.scenes[s].predictions[i].box.x_min ==
                  d.scenes[s].predictions[i].box.x_min);
            CHECK(again.scenes[s].predictions[i].confidence ==
                  d.scenes[s].predictions[i].confidence);
        }
    }
}

TEST_CASE("summarize_counts: empty, fixture, permutation invariance") {
    const ClassCatalog cat = ClassCatalog::highway_assets();
    const AnnotationCounts empty = summarize_counts({}, cat);
    CHECK(empty.total == 0);
    for (const auto& [name, n] : empty.per_class) CHECK(n == 0);

    Dataset d = load_dataset(fixture("tiny_dataset.json"));
    const AnnotationCounts base = summarize_counts(d.scenes, cat);
    CHECK(base.total == 3);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(d.scenes.begin(), d.scenes.end(), rng);
        const AnnotationCounts shuffled = summarize_counts(d.scenes, cat);
        CHECK(shuffled.per_class == base.per_class);
        CHECK(shuffled.total == base.total);
    }
}

TEST_CASE("softmax consistency of batches built from logits") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const auto batch = testutil::random_batch(rng, 6, 4);
        CHECK_NOTHROW(batch.validate());
        for (Eigen::Index i = 0; i < batch.size(); ++i) {
            CHECK(batch.probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    // A tampered batch trips the softmax check.
    auto batch = testutil::random_batch(rng, 3, 3);
    batch.probs(0, 0) += 1e-6;
    CHECK_THROWS_AS(batch.validate(), SchemaError);
}

TEST_CASE("annotation counts reject negatives") {
    CHECK_THROWS_AS(AnnotationCounts::from_map({{"a", -1}}), SchemaError);
}
