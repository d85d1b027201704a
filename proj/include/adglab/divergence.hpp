#pragma once

#include <string>
#include <vector>

#include "adglab/rng.hpp"

namespace adglab {

// A family of discrete feature distributions, one row per domain, plus the
// mixture weights alpha. Everything in this module is exact brute-force
// arithmetic over bins; it is the ground truth that adversarially trained
// discriminators are validated against.
//
// Conventions: natural logarithm throughout, 0*ln(0) = 0, and bins with zero
// pooled mass are excluded from objectives.
struct DiscreteDomainFamily {
    int domains = 0;                         // M
    int bins = 0;                            // B
    std::vector<std::vector<double>> cond;   // cond[i][b] = P(f = b | domain i)
    std::vector<double> weights;             // alpha[i], sums to 1

    void validate() const;
};

// Per-class families with class weights: houses P(f|obj_i, pred_k),
// alpha_i^(k) (inside each family) and alpha^(k).
struct ConditionalFamily {
    struct ClassEntry {
        int class_id = 0;
        double class_weight = 0.0;  // alpha^(k)
        DiscreteDomainFamily family;
    };
    std::vector<ClassEntry> classes;

    void validate() const;
};

// P(f) = sum_i alpha_i P(f | domain i).
std::vector<double> pooled(const DiscreteDomainFamily& family);

// sum_i alpha_i KL(P(f|domain i) || P(f)).
double kld(const DiscreteDomainFamily& family);

// sum_k alpha^(k) sum_i alpha_i^(k) KL(P(f|i,k) || P(f|k)).
double ckld(const ConditionalFamily& cfam);

// Jensen-Shannon divergence with the standard 1/2,1/2 mixture.
double jsd(const std::vector<double>& p, const std::vector<double>& q);

// sum_k alpha^(k) sum_i alpha_i^(k) JSD(P(f|i,k) || P(f|k)).
double cjsd(const ConditionalFamily& cfam);

// Closed-form optimal multiclass discriminator D*_i(f) =
// alpha_i P(f|i) / P(f). Columns over domains sum to 1 on bins with pooled
// mass; zero-pooled bins are left all-zero (excluded).
std::vector<std::vector<double>> optimal_discriminator_kld(const DiscreteDomainFamily& family);

// The multiclass adversarial objective sum_i alpha_i E_{f~P(f|i)}[ln D_i(f)]
// evaluated for an arbitrary discriminator table D[i][b].
double multiclass_objective(const DiscreteDomainFamily& family,
                            const std::vector<std::vector<double>>& discriminator);

// Value of the multiclass objective at the optimum: kld + sum_i alpha_i ln alpha_i.
double optimal_multiclass_value(const DiscreteDomainFamily& family);

// Conditional version: sum_k alpha^(k) * multiclass objective of class k.
double conditional_multiclass_objective(
    const ConditionalFamily& cfam,
    const std::vector<std::vector<std::vector<double>>>& per_class_discriminator);

double optimal_conditional_multiclass_value(const ConditionalFamily& cfam);

// Binary JSD discriminator table D[k][i][b] giving P(sample is from the
// (i,k)-conditional rather than the class pool). Optimum is
// P_cond / (P_cond + P_pool), 0.5 where both vanish.
std::vector<std::vector<std::vector<double>>> optimal_discriminator_jsd(
    const ConditionalFamily& cfam);

// The binary adversarial objective: sum_k alpha^(k) sum_i alpha_i^(k)
// ( E_{f~P(f|i,k)}[ln D] + E_{f~P(f|k)}[ln(1-D)] ).
double binary_objective(const ConditionalFamily& cfam,
                        const std::vector<std::vector<std::vector<double>>>& discriminator);

// Maximum of the binary objective: 2*CJSD - ln(4) * sum_k alpha^(k).
double theorem3_value(const ConditionalFamily& cfam);

// Seeded random fixtures for identity tests.
DiscreteDomainFamily random_family(CounterRng& rng, int max_domains = 8, int max_bins = 16);
ConditionalFamily random_conditional_family(CounterRng& rng, int max_classes = 5,
                                            int max_domains = 8, int max_bins = 16);

// Fixture (de)serialisation; files are JSON descriptions of families.
DiscreteDomainFamily load_family(const std::string& path);
ConditionalFamily load_conditional_family(const std::string& path);
void save_family(const DiscreteDomainFamily& family, const std::string& path);
void save_conditional_family(const ConditionalFamily& cfam, const std::string& path);

}  // namespace adglab
