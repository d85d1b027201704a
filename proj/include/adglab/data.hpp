#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace adglab {

// Axis-aligned box, (x1, y1, x2, y2) with x2 > x1 and y2 > y1.
using Box = std::array<double, 4>;

// Per-branch input vectors. Desk-scale stand-ins for the image crops: the
// union vector feeds the feature extractor, human and spatial vectors feed
// their heads directly.
struct BranchInputs {
    std::vector<double> human;
    std::vector<double> union_box;
    std::vector<double> spatial;
};

// One annotated human-object pair. Predicates are multi-label; the set is
// kept sorted and non-empty.
struct Instance {
    int image_id = 0;
    int instance_id = 0;
    Box human_box{};
    Box object_box{};
    int subject_label = 0;  // 0 = human
    int object_label = 0;
    std::vector<int> predicate_labels;
    BranchInputs features;

    void validate(int num_objects, int num_predicates) const;
};

using Dataset = std::vector<Instance>;

// Line-delimited JSON records, one instance per line.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

// Positive (predicate, object) pair counts over a dataset: counts[k][i].
std::vector<std::vector<int>> frequency_table(const Dataset& data, int num_predicates,
                                              int num_objects);

// FNV-1a 64-bit over a byte string, used for dataset manifests.
std::uint64_t fnv1a64(const std::string& bytes);

// Write-to-temp-then-rename so partial outputs are never observed.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace adglab
