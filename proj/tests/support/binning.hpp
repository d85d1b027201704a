#pragma once

// Test-side helper: turn continuous union features into a discrete
// ConditionalFamily via a fixed random projection and per-predicate quantile
// bins, so divergences of generated data can be measured with the exact
// discrete oracles.

#include <algorithm>
#include <map>
#include <vector>

#include "adglab/data.hpp"
#include "adglab/divergence.hpp"
#include "adglab/rng.hpp"

namespace adglab::testsupport {

inline ConditionalFamily bin_union_features(const Dataset& data, int num_objects, int bins,
                                            std::uint64_t seed) {
    const std::size_t dim = data.front().features.union_box.size();
    CounterRng rng(seed, CounterRng::stream_key("binning"));
    std::vector<double> proj(dim);
    for (double& p : proj) p = rng.next_gaussian();

    auto project = [&](const Instance& x) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += proj[d] * x.features.union_box[d];
        return s;
    };

    // group (predicate -> object -> projected values)
    std::map<int, std::map<int, std::vector<double>>> groups;
    for (const Instance& x : data)
        for (int k : x.predicate_labels) groups[k][x.object_label].push_back(project(x));

    ConditionalFamily cfam;
    std::size_t total_pairs = 0;
    for (const auto& [k, per_obj] : groups)
        for (const auto& [o, vals] : per_obj) {
            (void)o;
            (void)k;
            total_pairs += vals.size();
        }

    for (const auto& [k, per_obj] : groups) {
        // per-predicate pooled quantile edges
        std::vector<double> all;
        for (const auto& [o, vals] : per_obj) {
            (void)o;
            all.insert(all.end(), vals.begin(), vals.end());
        }
        std::sort(all.begin(), all.end());
        std::vector<double> edges;
        for (int b = 1; b < bins; ++b)
            edges.push_back(all[all.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins)]);
        auto bin_of = [&](double v) {
            return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) -
                                    edges.begin());
        };

        ConditionalFamily::ClassEntry entry;
        entry.class_id = k;
        std::size_t class_count = 0;
        DiscreteDomainFamily fam;
        fam.bins = bins;
        for (const auto& [o, vals] : per_obj) {
            (void)o;
            std::vector<double> row(static_cast<std::size_t>(bins), 0.0);
            for (double v : vals) row[static_cast<std::size_t>(bin_of(v))] += 1.0;
            for (double& r : row) r /= static_cast<double>(vals.size());
            fam.cond.push_back(std::move(row));
            fam.weights.push_back(static_cast<double>(vals.size()));
            class_count += vals.size();
        }
        fam.domains = static_cast<int>(fam.cond.size());
        for (double& w : fam.weights) w /= static_cast<double>(class_count);
        entry.class_weight = static_cast<double>(class_count) / static_cast<double>(total_pairs);
        entry.family = std::move(fam);
        cfam.classes.push_back(std::move(entry));
        (void)num_objects;
    }
    cfam.validate();
    return cfam;
}

}  // namespace adglab::testsupport
