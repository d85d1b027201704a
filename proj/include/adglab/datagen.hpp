#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adglab/data.hpp"

namespace adglab {

// Synthetic compositional dataset generator. The distributional structure
// mirrors the HOI setting: M object domains, K predicate classes, a sparse
// long-tailed (predicate, object) co-occurrence, and an object-invariant
// predicate signal corrupted by an object-dependent nuisance.
//
// Union features are R_obj * (signal_pred + noise), where R_obj is an
// object-specific orthogonal transform built from Givens rotations whose
// angles are scaled by nuisance_strength (0 = identity). Human and spatial
// features depend on the predicate and noise only, so those branches are
// object-invariant by construction. Boxes follow a per-predicate spatial
// archetype, and the leading spatial feature dimensions encode box-pair
// geometry.
//
// All randomness comes from counter-based streams keyed on (seed, label,
// index), so regeneration is bit-identical and independent of call order.
struct GeneratorConfig {
    int num_objects = 12;       // M
    int num_predicates = 10;    // K
    int pairs_per_predicate = 6;
    double zipf_exponent = 1.0;
    double noise_std = 0.1;
    double nuisance_strength = 0.8;
    int total_instances = 2400;
    std::uint64_t seed = 7;

    int union_dim = 16;
    int human_dim = 8;
    int spatial_dim = 12;  // first 6 dims are box-pair geometry
    int max_instances_per_image = 3;
    // Probability that an instance inherits its image's category instead of
    // drawing a fresh one. Images are topical, which is what makes an
    // image-disjoint novel split possible without shedding most instances.
    double image_category_concentration = 0.85;
    double human_signal_scale = 0.6;
    double spatial_signal_scale = 0.6;
    double human_noise_std = 0.35;
    double spatial_noise_std = 0.35;

    void validate() const;
};

struct GeneratedDataset {
    Dataset instances;
    // Ground-truth category counts, cooccurrence[k][i].
    std::vector<std::vector<int>> cooccurrence;
};

GeneratedDataset generate(const GeneratorConfig& cfg);

// Ground-truth mean of the union features for a (predicate, object) cell:
// R_obj * signal_pred. Each feature component then has std noise_std around
// this mean.
std::vector<double> expected_union_mean(const GeneratorConfig& cfg, int predicate_id,
                                        int object_id);

// Manifest describing a generated dataset file: config echo, counts and an
// FNV-1a checksum of the file body.
void write_dataset_manifest(const GeneratorConfig& cfg, const GeneratedDataset& data,
                            const std::string& dataset_path, const std::string& manifest_path);

}  // namespace adglab
