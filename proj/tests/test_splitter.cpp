#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "adglab/common.hpp"
#include "adglab/datagen.hpp"
#include "adglab/splitter.hpp"

using namespace adglab;

namespace {

Instance make_instance(int id, int image, int object, std::vector<int> preds,
                       Box hbox = {0, 0, 1, 1}, Box obox = {2, 2, 3, 3}) {
    Instance x;
    x.instance_id = id;
    x.image_id = image;
    x.object_label = object;
    x.predicate_labels = std::move(preds);
    x.human_box = hbox;
    x.object_box = obox;
    return x;
}

}  // namespace

TEST_CASE("iou basics") {
    CHECK(iou({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(iou({0, 0, 1, 1}, {2, 2, 3, 3}) == doctest::Approx(0.0));
    // unit squares overlapping by half: inter 0.5, union 1.5
    CHECK(iou({0, 0, 1, 1}, {0.5, 0, 1.5, 1}) == doctest::Approx(1.0 / 3.0));
    // symmetry
    CHECK(iou({0, 0, 2, 1}, {1, 0, 3, 1}) == iou({1, 0, 3, 1}, {0, 0, 2, 1}));
}

TEST_CASE("merge_pairs unions predicate sets of duplicated pairs") {
    Dataset anns;
    anns.push_back(make_instance(0, 1, 4, {2}));
    anns.push_back(make_instance(1, 1, 4, {5}));  // identical boxes, same object
    auto merged = merge_pairs(anns, 0.7);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].predicate_labels == std::vector<int>{2, 5});
    CHECK(merged[0].instance_id == 0);  // first member wins
}

TEST_CASE("disjoint boxes do not merge; different objects do not merge") {
    Dataset anns;
    anns.push_back(make_instance(0, 1, 4, {2}, {0, 0, 1, 1}, {2, 2, 3, 3}));
    anns.push_back(make_instance(1, 1, 4, {5}, {5, 5, 6, 6}, {7, 7, 8, 8}));
    CHECK(merge_pairs(anns, 0.7).size() == 2);

    Dataset diff;
    diff.push_back(make_instance(0, 1, 4, {2}));
    diff.push_back(make_instance(1, 1, 5, {5}));  // same boxes, different object label
    CHECK(merge_pairs(diff, 0.7).size() == 2);

    Dataset imgs;
    imgs.push_back(make_instance(0, 1, 4, {2}));
    imgs.push_back(make_instance(1, 2, 4, {5}));  // same boxes, different image
    CHECK(merge_pairs(imgs, 0.7).size() == 2);
}

TEST_CASE("merging is transitive over chains") {
    // A~B and B~C above threshold, A~C below: one instance via connected
    // components. Brute-force pairwise IoU confirms the chain structure.
    const Box ha = {0, 0, 10, 10};
    const Box hb = {1.5, 0, 11.5, 10};
    const Box hc = {3, 0, 13, 10};
    const Box obj = {20, 20, 30, 30};
    REQUIRE(iou(ha, hb) >= 0.7);
    REQUIRE(iou(hb, hc) >= 0.7);
    REQUIRE(iou(ha, hc) < 0.7);

    Dataset anns;
    anns.push_back(make_instance(0, 1, 4, {1}, ha, obj));
    anns.push_back(make_instance(1, 1, 4, {2}, hb, obj));
    anns.push_back(make_instance(2, 1, 4, {3}, hc, obj));
    auto merged = merge_pairs(anns, 0.7);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].predicate_labels == std::vector<int>{1, 2, 3});
}

TEST_CASE("merge_pairs is idempotent") {
    GeneratorConfig cfg;
    cfg.total_instances = 300;
    auto data = generate(cfg);
    // inject near-duplicates so the merge actually does something
    Dataset anns = data.instances;
    for (int i = 0; i < 40; ++i) {
        Instance dup = anns[static_cast<std::size_t>(i * 5)];
        dup.instance_id = 1000 + i;
        dup.predicate_labels = {(dup.predicate_labels[0] + 1) % cfg.num_predicates};
        anns.push_back(dup);
    }
    auto once = merge_pairs(anns, 0.7);
    auto twice = merge_pairs(once, 0.7);
    REQUIRE(once.size() == twice.size());
    CHECK(once.size() < anns.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(once[i].instance_id == twice[i].instance_id);
        CHECK(once[i].predicate_labels == twice[i].predicate_labels);
    }
}

TEST_CASE("merge_pairs rejects degenerate boxes") {
    Dataset anns;
    anns.push_back(make_instance(0, 1, 4, {2}, {0, 0, 0, 1}, {2, 2, 3, 3}));
    CHECK_THROWS_AS(merge_pairs(anns, 0.7), ValidationError);
}

TEST_CASE("single predicate with ten uniform objects carves exactly one object") {
    Dataset data;
    int id = 0;
    for (int o = 0; o < 10; ++o)
        for (int j = 0; j < 10; ++j) {
            data.push_back(make_instance(id, id, o, {0}));
            ++id;
        }
    auto carve = category_disjoint_carve(data, 0.1, 3, "test");
    CHECK(carve.novel.size() == 10);
    std::set<int> novel_objects;
    for (const Instance& x : carve.novel) novel_objects.insert(x.object_label);
    CHECK(novel_objects.size() == 1);
    CHECK(carve.seen.size() == 90);
}

TEST_CASE("predicate with one object is reported and kept seen") {
    Dataset data;
    for (int j = 0; j < 8; ++j) data.push_back(make_instance(j, j, 3, {0}));
    auto carve = category_disjoint_carve(data, 0.1, 3, "test");
    CHECK(carve.novel.empty());
    CHECK(carve.seen.size() == 8);
    REQUIRE(carve.warnings.size() == 1);
    CHECK(carve.warnings[0].find("single object") != std::string::npos);
}

TEST_CASE("mixed multi-label instances stay seen and drag categories") {
    // predicate 0 pairs with objects {0,1}; predicate 1 pairs with {0,1}.
    // One multi-label instance ties (0,obj1) to the seen side even when the
    // carve would have preferred it novel.
    Dataset data;
    int id = 0;
    for (int j = 0; j < 9; ++j) data.push_back(make_instance(id++, id, 0, {0}));
    for (int j = 0; j < 9; ++j) data.push_back(make_instance(id++, id, 1, {1}));
    data.push_back(make_instance(id++, id, 1, {0, 1}));
    auto carve = category_disjoint_carve(data, 0.3, 1, "test");
    const CategorySet seen_cats = categories_of(carve.seen);
    const CategorySet novel_cats = categories_of(carve.novel);
    for (const Category& c : novel_cats) CHECK(!seen_cats.count(c));
}

TEST_CASE("full split on generated data satisfies all invariants and fractions") {
    GeneratorConfig gcfg;
    gcfg.total_instances = 2400;
    auto data = generate(gcfg);

    SplitConfig scfg;
    scfg.seed = 11;
    auto split = make_split(data.instances, scfg);  // invariants checked inside

    const double n = static_cast<double>(data.instances.size());
    const double test_frac = split.test.size() / n;
    CHECK(std::abs(test_frac - 0.1) <= 0.05);
    const double pool = static_cast<double>(split.train.size() + split.trainval.size() +
                                            split.testval.size());
    CHECK(std::abs(split.testval.size() / pool - 1.0 / 9.0) <= 0.05);
    CHECK(std::abs(split.trainval.size() / pool - 1.0 / 9.0) <= 0.05);
    CHECK(std::abs(split.train.size() / pool - 7.0 / 9.0) <= 0.05);

    // 7:1 ratio between train and trainval
    const double ratio = static_cast<double>(split.train.size()) / split.trainval.size();
    CHECK(ratio > 5.5);
    CHECK(ratio < 8.5);
}

TEST_CASE("split invariants hold across seeds") {
    GeneratorConfig gcfg;
    gcfg.total_instances = 800;
    gcfg.seed = 3;
    auto data = generate(gcfg);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SplitConfig scfg;
        scfg.seed = seed;
        CHECK_NOTHROW(make_split(data.instances, scfg));
    }
}

TEST_CASE("split files round-trip and manifest is written") {
    GeneratorConfig gcfg;
    gcfg.total_instances = 400;
    auto data = generate(gcfg);
    SplitConfig scfg;
    auto split = make_split(data.instances, scfg);
    const std::string dir = "split_rt_dir";
    save_split(split, scfg, dir);
    auto loaded = load_split(dir);
    CHECK(loaded.train.size() == split.train.size());
    CHECK(loaded.test.size() == split.test.size());
    CHECK(loaded.test_categories == split.test_categories);
    CHECK(read_file(dir + "/split_manifest.json").find("counts") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty dataset is a validation error") {
    SplitConfig cfg;
    CHECK_THROWS_AS(make_split({}, cfg), ValidationError);
}
