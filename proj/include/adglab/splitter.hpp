#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adglab/data.hpp"

namespace adglab {

// A (predicate, object) pair; the unit of "seen vs novel".
using Category = std::pair<int, int>;
using CategorySet = std::set<Category>;

struct SplitConfig {
    double novel_fraction = 0.1;         // test carve from the full set
    double testval_fraction = 1.0 / 9.0; // novel-style carve from the seen pool
    double trainval_fraction = 1.0 / 8.0;  // i.i.d. carve from the remainder
    double iou_threshold = 0.7;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SplitResult {
    Dataset train, trainval, testval, test;
    CategorySet train_categories, trainval_categories, testval_categories, test_categories;
    std::vector<std::string> warnings;
    std::vector<std::pair<int, std::string>> dropped;  // (instance_id, reason)

    // Machine-checks every split invariant: novel category purity, image
    // disjointness, trainval categories contained in train's, and the
    // partition accounting. Throws InvariantError on violation.
    void check_invariants(std::size_t input_size) const;
};

// Intersection-over-union of two boxes.
double iou(const Box& a, const Box& b);

// Merges duplicate annotations of the same pair within an image: instances
// whose human and object boxes both overlap with IoU >= threshold and whose
// object labels match are unioned over connected components of that
// relation. The merged instance keeps the first component member's boxes and
// features and the union of predicate sets.
Dataset merge_pairs(const Dataset& annotations, double iou_threshold = 0.7);

struct CarveResult {
    Dataset seen;   // majority side, categories stay "seen"
    Dataset novel;  // carved side with disjoint categories and images
    std::vector<std::string> warnings;
    std::vector<std::pair<int, std::string>> dropped;
};

// Carves a category- and image-disjoint subset holding roughly
// `novel_fraction` of the instances: per predicate, its co-occurring objects
// are partitioned by instance count; instances with any seen-side category
// stay seen (dragging their categories along); straddling images move to
// their majority side, ties to seen.
CarveResult category_disjoint_carve(const Dataset& instances, double novel_fraction,
                                    std::uint64_t seed, const std::string& stage);

// Full pipeline: 90/10 novel test carve, then a 1/9 testval carve from the
// seen pool, then an i.i.d. 7/8 vs 1/8 train/trainval split that keeps
// trainval's categories inside train's.
SplitResult make_split(const Dataset& instances, const SplitConfig& cfg);

CategorySet categories_of(const Dataset& data);

void save_split(const SplitResult& split, const SplitConfig& cfg, const std::string& out_dir);
SplitResult load_split(const std::string& dir);

}  // namespace adglab
