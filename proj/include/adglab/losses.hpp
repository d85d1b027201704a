#pragma once

#include <cstdint>
#include <vector>

#include "adglab/data.hpp"
#include "adglab/model.hpp"
#include "adglab/tape.hpp"

namespace adglab {

// Count family over the training set: N, N_i, N^(k), N_i^(k) and the
// derived alpha weights. Each instance contributes once to N and N_i; each
// (instance, positive predicate) pair contributes once to N^(k) and
// N_i^(k), so sum_k N^(k) >= N for multi-label data.
struct DomainStatistics {
    int num_objects = 0;
    int num_predicates = 0;
    long long total = 0;                          // N
    std::vector<long long> per_domain;            // N_i
    std::vector<long long> per_class;             // N^(k)
    std::vector<std::vector<long long>> joint;    // N_i^(k), [M][K]
    std::vector<double> alpha_domain;             // N_i / N
    std::vector<double> alpha_class;              // N^(k) / N
    std::vector<std::vector<double>> alpha_joint; // N_i^(k) / N^(k), 0 when N^(k)=0

    static DomainStatistics from_dataset(const Dataset& train, int num_objects,
                                         int num_predicates);
    void validate() const;
    // Domains with N_i^(k) > 0, ascending.
    std::vector<int> domains_with_class(int k) const;
};

// Per-step loss values. l_total = l_human + l_spatial + l_union +
// lambda * l_dg holds by construction.
struct LossReport {
    double l_human = 0.0;
    double l_spatial = 0.0;
    double l_union = 0.0;
    double l_dg = 0.0;
    double lambda = 0.0;
    double l_total = 0.0;
    double discriminator_objective = 0.0;
};

struct BaselineLossRefs {
    Ref l_human, l_spatial, l_union;
};

// Multi-label binary cross entropy per branch with 1:neg_ratio negative
// sampling: every positive class plus neg_ratio * #positives negatives
// drawn uniformly without replacement (all of them if fewer exist), each
// branch averaged per instance and then over the batch. Sampling streams
// are keyed on (seed, step, instance id), so draws are independent of
// variant and call order.
BaselineLossRefs baseline_loss(Tape& tape, PredicateModel& model,
                               const PredicateModel::Bound& bound, const Dataset& batch,
                               Ref union_features, int neg_ratio, std::uint64_t seed,
                               long long step);

// The variant's minimax scalar, averaged over batch instances (and over
// each instance's positive predicates). The extractor descends this value,
// the discriminator ascends it.
//
//  AdgKld:  ln D_obj(x)(F(x))
//  CadgKld: ln D_obj(x)(F(x); pred(x))
//  DeepC:   CadgKld with per-pair weight N / N_i^(k) instead of 1
//  CadgJsd: ln D(F(x), obj(x); pred(x))
//           + sum_{i: N_i^(k)>0} (N_i^(k)/N^(k)) ln(1 - D(F(x), obj_i; pred(x)))
//
// Classes with N^(k) = 0 are excluded from the conditional variants.
Ref dg_minimax_term(Tape& tape, PredicateModel& model, const PredicateModel::Bound& bound,
                    Ref union_features, const Dataset& batch, const DomainStatistics& stats);

}  // namespace adglab
