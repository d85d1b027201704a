#pragma once

#include <string>
#include <vector>

#include "adglab/data.hpp"

namespace adglab {

// Scores for one instance with its ground truth. Ranking is by descending
// score with ties broken by ascending predicate id, so results never depend
// on input order.
struct RankedPrediction {
    int instance_id = 0;
    int image_id = 0;
    std::vector<int> gt_predicates;
    std::vector<double> scores;

    std::vector<int> ranking() const;
};

struct MetricsReport {
    double predcls_r1 = 0.0;
    double predcls_r5 = 0.0;
    double preddet_r5 = 0.0;
    double preddet_r10 = 0.0;
    std::vector<double> per_class_r1;       // -1 for classes with no instance
    std::vector<long long> per_class_count;
    double mean_r1 = 0.0;   // unweighted over classes with >= 1 instance
    double overall_r1 = 0.0;
    std::size_t instances = 0;
    std::size_t images = 0;
};

struct MetricsOptions {
    // Default counts one hit opportunity per (instance, gt predicate) pair;
    // the alternative counts an instance as hit if any gt predicate lands
    // in the top k.
    bool per_instance_any_hit = false;
};

// Fraction of (instance, gt-predicate) pairs whose predicate appears in the
// instance's top-k ranking.
double predcls_recall(const std::vector<RankedPrediction>& preds, int k,
                      const MetricsOptions& opts = {});

// Per image, all (instance, predicate) candidates are ranked jointly by
// score; recall@k is the fraction of ground-truth triplets in the top k,
// micro-averaged over images by ground-truth count.
double preddet_recall(const std::vector<RankedPrediction>& preds, int k,
                      std::vector<std::string>* warnings = nullptr);

// Frequency prior scores for an object: count(k, object) normalised over
// predicates. Unseen objects give all-zero scores (ranking falls back to
// predicate-id order).
std::vector<double> frequency_scores(const std::vector<std::vector<int>>& table,
                                     int object_label);

MetricsReport full_report(const std::vector<RankedPrediction>& preds, int num_predicates,
                          const MetricsOptions& opts = {});

// Line-delimited (instance id, scores) records.
void save_predictions(const std::vector<RankedPrediction>& preds, const std::string& path);

std::string metrics_to_csv(const MetricsReport& report);
std::string metrics_to_text(const MetricsReport& report, const std::string& title);
void save_metrics(const MetricsReport& report, const std::string& title,
                  const std::string& csv_path, const std::string& text_path);
MetricsReport load_metrics_csv(const std::string& path);

}  // namespace adglab
