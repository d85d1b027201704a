#include "adglab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "adglab/common.hpp"
#include "adglab/rng.hpp"

namespace adglab {

DomainStatistics DomainStatistics::from_dataset(const Dataset& train, int num_objects,
                                                int num_predicates) {
    if (train.empty()) throw ValidationError("statistics: empty training set");
    DomainStatistics s;
    s.num_objects = num_objects;
    s.num_predicates = num_predicates;
    s.per_domain.assign(static_cast<std::size_t>(num_objects), 0);
    s.per_class.assign(static_cast<std::size_t>(num_predicates), 0);
    s.joint.assign(static_cast<std::size_t>(num_objects),
                   std::vector<long long>(static_cast<std::size_t>(num_predicates), 0));
    for (const Instance& x : train) {
        x.validate(num_objects, num_predicates);
        ++s.total;
        ++s.per_domain[static_cast<std::size_t>(x.object_label)];
        for (int k : x.predicate_labels) {
            ++s.per_class[static_cast<std::size_t>(k)];
            ++s.joint[static_cast<std::size_t>(x.object_label)][static_cast<std::size_t>(k)];
        }
    }
    s.alpha_domain.resize(static_cast<std::size_t>(num_objects));
    for (int i = 0; i < num_objects; ++i)
        s.alpha_domain[static_cast<std::size_t>(i)] =
            static_cast<double>(s.per_domain[static_cast<std::size_t>(i)]) / s.total;
    s.alpha_class.resize(static_cast<std::size_t>(num_predicates));
    s.alpha_joint.assign(static_cast<std::size_t>(num_objects),
                         std::vector<double>(static_cast<std::size_t>(num_predicates), 0.0));
    for (int k = 0; k < num_predicates; ++k) {
        const long long nk = s.per_class[static_cast<std::size_t>(k)];
        s.alpha_class[static_cast<std::size_t>(k)] = static_cast<double>(nk) / s.total;
        if (nk == 0) continue;
        for (int i = 0; i < num_objects; ++i)
            s.alpha_joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                static_cast<double>(s.joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) /
                nk;
    }
    s.validate();
    return s;
}

void DomainStatistics::validate() const {
    double asum = 0.0;
    for (double a : alpha_domain) asum += a;
    if (std::abs(asum - 1.0) > 1e-9)
        throw InvariantError("statistics: domain weights do not sum to 1");
    for (int k = 0; k < num_predicates; ++k) {
        if (per_class[static_cast<std::size_t>(k)] == 0) continue;
        double s = 0.0;
        long long joint_sum = 0;
        for (int i = 0; i < num_objects; ++i) {
            s += alpha_joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            joint_sum += joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
        if (std::abs(s - 1.0) > 1e-9)
            throw InvariantError("statistics: conditional weights of class " + std::to_string(k) +
                                 " do not sum to 1");
        if (joint_sum != per_class[static_cast<std::size_t>(k)])
            throw InvariantError("statistics: joint counts inconsistent for class " +
                                 std::to_string(k));
    }
}

std::vector<int> DomainStatistics::domains_with_class(int k) const {
    std::vector<int> out;
    for (int i = 0; i < num_objects; ++i)
        if (joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] > 0) out.push_back(i);
    return out;
}

namespace {

struct SampledClasses {
    std::vector<int> classes;   // positives then sampled negatives
    std::size_t positives = 0;
};

SampledClasses sample_classes(const Instance& x, int num_predicates, int neg_ratio,
                              std::uint64_t seed, long long step) {
    if (x.predicate_labels.empty())
        throw ValidationError("baseline_loss: instance " + std::to_string(x.instance_id) +
                              " has no positive label");
    SampledClasses s;
    s.classes = x.predicate_labels;
    s.positives = s.classes.size();

    std::vector<char> is_pos(static_cast<std::size_t>(num_predicates), 0);
    for (int k : x.predicate_labels) is_pos[static_cast<std::size_t>(k)] = 1;
    std::vector<int> pool;
    for (int k = 0; k < num_predicates; ++k)
        if (!is_pos[static_cast<std::size_t>(k)]) pool.push_back(k);

    std::size_t want = static_cast<std::size_t>(neg_ratio) * s.positives;
    want = std::min(want, pool.size());
    CounterRng rng(seed, CounterRng::stream_key(
                             "negsample", (static_cast<std::uint64_t>(step) << 32) ^
                                              static_cast<std::uint64_t>(x.instance_id)));
    // partial Fisher-Yates
    for (std::size_t j = 0; j < want; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.next_below(pool.size() - j));
        std::swap(pool[j], pool[pick]);
        s.classes.push_back(pool[j]);
    }
    return s;
}

}  // namespace

BaselineLossRefs baseline_loss(Tape& tape, PredicateModel& model,
                               const PredicateModel::Bound& bound, const Dataset& batch,
                               Ref union_features, int neg_ratio, std::uint64_t seed,
                               long long step) {
    if (batch.empty()) throw ValidationError("baseline_loss: empty batch");
    if (neg_ratio < 0) throw ValidationError("baseline_loss: neg_ratio must be >= 0");
    const int K = model.config().num_predicates;
    const int B = static_cast<int>(batch.size());

    // weight[r][k] = 1/(#sampled_r * B) on sampled classes, sign +1 for
    // positives and -1 for negatives; branch loss is
    // -sum(weight * logsigmoid(sign * logits)).
    Tensor weight(B, K);
    Tensor sign(B, K);
    for (int r = 0; r < B; ++r) {
        const auto sampled =
            sample_classes(batch[static_cast<std::size_t>(r)], K, neg_ratio, seed, step);
        const double w = 1.0 / (static_cast<double>(sampled.classes.size()) * B);
        for (std::size_t j = 0; j < sampled.classes.size(); ++j) {
            const int k = sampled.classes[j];
            weight.at(r, k) = w;
            sign.at(r, k) = j < sampled.positives ? 1.0 : -1.0;
        }
    }
    auto wref = tape.constant(std::move(weight));
    auto sref = tape.constant(std::move(sign));
    auto branch = [&](Ref logits) {
        return tape.neg(tape.sum_all(tape.mul(wref, tape.logsigmoid(tape.mul(sref, logits)))));
    };

    BaselineLossRefs out;
    out.l_human = branch(model.human_logits(tape, bound, tape.constant(human_matrix(batch))));
    out.l_spatial =
        branch(model.spatial_logits(tape, bound, tape.constant(spatial_matrix(batch))));
    out.l_union = branch(model.union_logits(tape, bound, union_features));
    return out;
}

namespace {

// Expansion of a batch into (instance, positive predicate) pairs, skipping
// classes with no training mass. Pair weight 1/|P_x| averages the
// conditional term over an instance's positives.
struct PairExpansion {
    std::vector<int> row;     // source row in the batch
    std::vector<int> pred;    // predicate id
    std::vector<int> obj;     // instance's object id
    std::vector<double> weight;
};

PairExpansion expand_pairs(const Dataset& batch, const DomainStatistics& stats) {
    PairExpansion e;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const Instance& x = batch[r];
        const double per = 1.0 / static_cast<double>(x.predicate_labels.size());
        for (int k : x.predicate_labels) {
            if (stats.per_class[static_cast<std::size_t>(k)] == 0) continue;
            e.row.push_back(static_cast<int>(r));
            e.pred.push_back(k);
            e.obj.push_back(x.object_label);
            e.weight.push_back(per);
        }
    }
    return e;
}

}  // namespace

Ref dg_minimax_term(Tape& tape, PredicateModel& model, const PredicateModel::Bound& bound,
                    Ref union_features, const Dataset& batch, const DomainStatistics& stats) {
    const DgVariant variant = model.config().variant;
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw ValidationError("dg term: empty batch");

    if (variant == DgVariant::None)
        throw ValidationError("dg term requested for variant none");

    if (variant == DgVariant::AdgKld) {
        auto logits = model.adg_discriminator_logits(tape, bound, union_features);
        auto lp = tape.log_softmax_rows(logits);
        std::vector<int> obj_ids;
        obj_ids.reserve(batch.size());
        for (const Instance& x : batch) obj_ids.push_back(x.object_label);
        return tape.mean_all(tape.gather_cols(lp, std::move(obj_ids)));
    }

    const PairExpansion pairs = expand_pairs(batch, stats);
    if (pairs.row.empty()) return tape.constant(Tensor::scalar(0.0));

    if (variant == DgVariant::CadgKld || variant == DgVariant::DeepC) {
        auto rows = tape.gather_rows(union_features, pairs.row);
        auto logits = model.cadg_discriminator_logits(tape, bound, rows, pairs.pred);
        auto lp = tape.log_softmax_rows(logits);
        auto picked = tape.gather_cols(lp, pairs.obj);
        Tensor w(static_cast<int>(pairs.row.size()), 1);
        for (std::size_t p = 0; p < pairs.row.size(); ++p) {
            double wp = pairs.weight[p] / B;
            if (variant == DgVariant::DeepC) {
                const long long nik = stats.joint[static_cast<std::size_t>(pairs.obj[p])]
                                                 [static_cast<std::size_t>(pairs.pred[p])];
                wp = nik > 0 ? wp * static_cast<double>(stats.total) / nik : 0.0;
            }
            w.at(static_cast<int>(p), 0) = wp;
        }
        return tape.sum_all(tape.mul(tape.constant(std::move(w)), picked));
    }

    // CadgJsd: positive term per pair plus the weighted pooled term over
    // every domain seen with that class.
    std::vector<int> neg_row, neg_obj, neg_pred;
    std::vector<double> neg_weight;
    for (std::size_t p = 0; p < pairs.row.size(); ++p) {
        const int k = pairs.pred[p];
        for (int i : stats.domains_with_class(k)) {
            neg_row.push_back(pairs.row[p]);
            neg_obj.push_back(i);
            neg_pred.push_back(k);
            neg_weight.push_back(pairs.weight[p] / B *
                                 stats.alpha_joint[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(k)]);
        }
    }
    auto pos_rows = tape.gather_rows(union_features, pairs.row);
    auto pos_logit = model.jsd_discriminator_logit(tape, bound, pos_rows, pairs.obj, pairs.pred);
    Tensor wpos(static_cast<int>(pairs.row.size()), 1);
    for (std::size_t p = 0; p < pairs.row.size(); ++p)
        wpos.at(static_cast<int>(p), 0) = pairs.weight[p] / B;
    auto pos_term = tape.sum_all(tape.mul(tape.constant(std::move(wpos)),
                                          tape.logsigmoid(pos_logit)));

    auto neg_rows = tape.gather_rows(union_features, neg_row);
    auto neg_logit = model.jsd_discriminator_logit(tape, bound, neg_rows, neg_obj, neg_pred);
    Tensor wneg(static_cast<int>(neg_row.size()), 1);
    for (std::size_t p = 0; p < neg_row.size(); ++p)
        wneg.at(static_cast<int>(p), 0) = neg_weight[p];
    // ln(1 - sigmoid(z)) = logsigmoid(-z)
    auto neg_term = tape.sum_all(
        tape.mul(tape.constant(std::move(wneg)), tape.logsigmoid(tape.neg(neg_logit))));
    return tape.add(pos_term, neg_term);
}

}  // namespace adglab
