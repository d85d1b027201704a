#include "adglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "adglab/common.hpp"

namespace adglab {

std::vector<int> RankedPrediction::ranking() const {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        return a < b;
    });
    return order;
}

double predcls_recall(const std::vector<RankedPrediction>& preds, int k,
                      const MetricsOptions& opts) {
    if (preds.empty()) throw ValidationError("predcls_recall: no predictions");
    long long hits = 0, total = 0;
    for (const RankedPrediction& p : preds) {
        if (p.gt_predicates.empty())
            throw ValidationError("predcls_recall: instance " + std::to_string(p.instance_id) +
                                  " has no ground truth");
        const std::vector<int> order = p.ranking();
        const int top = std::min<int>(k, static_cast<int>(order.size()));
        if (opts.per_instance_any_hit) {
            bool hit = false;
            for (int r = 0; r < top && !hit; ++r)
                hit = std::find(p.gt_predicates.begin(), p.gt_predicates.end(), order[static_cast<std::size_t>(r)]) !=
                      p.gt_predicates.end();
            hits += hit ? 1 : 0;
            total += 1;
        } else {
            for (int gt : p.gt_predicates) {
                for (int r = 0; r < top; ++r)
                    if (order[static_cast<std::size_t>(r)] == gt) {
                        ++hits;
                        break;
                    }
                ++total;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double preddet_recall(const std::vector<RankedPrediction>& preds, int k,
                      std::vector<std::string>* warnings) {
    if (preds.empty()) throw ValidationError("preddet_recall: no predictions");
    std::map<int, std::vector<const RankedPrediction*>> by_image;
    for (const RankedPrediction& p : preds) by_image[p.image_id].push_back(&p);

    long long hits = 0, total = 0;
    for (const auto& [image, group] : by_image) {
        struct Candidate {
            double score;
            int instance_id;
            int predicate;
            bool is_gt;
        };
        std::vector<Candidate> cands;
        long long gt_count = 0;
        for (const RankedPrediction* p : group) {
            for (std::size_t c = 0; c < p->scores.size(); ++c) {
                const bool gt = std::find(p->gt_predicates.begin(), p->gt_predicates.end(),
                                          static_cast<int>(c)) != p->gt_predicates.end();
                cands.push_back({p->scores[c], p->instance_id, static_cast<int>(c), gt});
                if (gt) ++gt_count;
            }
        }
        if (gt_count == 0) {
            if (warnings)
                warnings->push_back("preddet: image " + std::to_string(image) +
                                    " has no ground-truth triplets, skipped");
            continue;
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
            return a.predicate < b.predicate;
        });
        const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), cands.size());
        for (std::size_t r = 0; r < top; ++r)
            if (cands[r].is_gt) ++hits;
        total += gt_count;
    }
    if (total == 0) throw ValidationError("preddet_recall: no ground-truth triplets at all");
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<double> frequency_scores(const std::vector<std::vector<int>>& table,
                                     int object_label) {
    std::vector<double> scores(table.size(), 0.0);
    long long total = 0;
    for (std::size_t k = 0; k < table.size(); ++k)
        total += table[k][static_cast<std::size_t>(object_label)];
    if (total == 0) return scores;  // unseen object
    for (std::size_t k = 0; k < table.size(); ++k)
        scores[k] =
            static_cast<double>(table[k][static_cast<std::size_t>(object_label)]) / total;
    return scores;
}

MetricsReport full_report(const std::vector<RankedPrediction>& preds, int num_predicates,
                          const MetricsOptions& opts) {
    MetricsReport rep;
    rep.predcls_r1 = predcls_recall(preds, 1, opts);
    rep.predcls_r5 = predcls_recall(preds, 5, opts);
    rep.preddet_r5 = preddet_recall(preds, 5);
    rep.preddet_r10 = preddet_recall(preds, 10);
    rep.overall_r1 = rep.predcls_r1;
    rep.instances = preds.size();
    std::map<int, char> images;
    for (const RankedPrediction& p : preds) images[p.image_id] = 1;
    rep.images = images.size();

    rep.per_class_r1.assign(static_cast<std::size_t>(num_predicates), -1.0);
    rep.per_class_count.assign(static_cast<std::size_t>(num_predicates), 0);
    std::vector<long long> hits(static_cast<std::size_t>(num_predicates), 0);
    for (const RankedPrediction& p : preds) {
        const std::vector<int> order = p.ranking();
        for (int gt : p.gt_predicates) {
            ++rep.per_class_count[static_cast<std::size_t>(gt)];
            if (!order.empty() && order[0] == gt) ++hits[static_cast<std::size_t>(gt)];
        }
    }
    double mean = 0.0;
    int with_instances = 0;
    for (int k = 0; k < num_predicates; ++k) {
        if (rep.per_class_count[static_cast<std::size_t>(k)] == 0) continue;
        rep.per_class_r1[static_cast<std::size_t>(k)] =
            static_cast<double>(hits[static_cast<std::size_t>(k)]) /
            static_cast<double>(rep.per_class_count[static_cast<std::size_t>(k)]);
        mean += rep.per_class_r1[static_cast<std::size_t>(k)];
        ++with_instances;
    }
    rep.mean_r1 = with_instances > 0 ? mean / with_instances : 0.0;
    return rep;
}

void save_predictions(const std::vector<RankedPrediction>& preds, const std::string& path) {
    std::ostringstream out;
    for (const RankedPrediction& p : preds)
        out << nlohmann::json{{"instance_id", p.instance_id},
                              {"image_id", p.image_id},
                              {"gt", p.gt_predicates},
                              {"scores", p.scores}}
                   .dump()
            << "\n";
    write_file_atomic(path, out.str());
}

std::string metrics_to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "metric,value\n";
    out << "predcls_r1," << report.predcls_r1 << "\n";
    out << "predcls_r5," << report.predcls_r5 << "\n";
    out << "preddet_r5," << report.preddet_r5 << "\n";
    out << "preddet_r10," << report.preddet_r10 << "\n";
    out << "mean_r1," << report.mean_r1 << "\n";
    out << "overall_r1," << report.overall_r1 << "\n";
    out << "instances," << report.instances << "\n";
    out << "images," << report.images << "\n";
    for (std::size_t k = 0; k < report.per_class_r1.size(); ++k)
        out << "class_" << k << "_r1," << report.per_class_r1[k] << "\n";
    for (std::size_t k = 0; k < report.per_class_count.size(); ++k)
        out << "class_" << k << "_count," << report.per_class_count[k] << "\n";
    return out.str();
}

std::string metrics_to_text(const MetricsReport& report, const std::string& title) {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    out << title << "\n";
    out << "  PredCls R@1 " << 100.0 * report.predcls_r1 << "  R@5 " << 100.0 * report.predcls_r5
        << "\n";
    out << "  PredDet R@5 " << 100.0 * report.preddet_r5 << "  R@10 "
        << 100.0 * report.preddet_r10 << "\n";
    out << "  mean R@1 " << 100.0 * report.mean_r1 << "  (per-class unweighted; PredDet is "
        << "micro-averaged over ground-truth triplets)\n";
    out << "  instances " << report.instances << "  images " << report.images << "\n";
    out << "  per-class R@1:";
    for (std::size_t k = 0; k < report.per_class_r1.size(); ++k) {
        if (report.per_class_r1[k] < 0.0)
            out << " class" << k << "=n/a";
        else
            out << " class" << k << "=" << 100.0 * report.per_class_r1[k];
    }
    out << "\n";
    return out.str();
}

void save_metrics(const MetricsReport& report, const std::string& title,
                  const std::string& csv_path, const std::string& text_path) {
    write_file_atomic(csv_path, metrics_to_csv(report));
    write_file_atomic(text_path, metrics_to_text(report, title));
}

MetricsReport load_metrics_csv(const std::string& path) {
    const std::string body = read_file(path);
    std::istringstream in(body);
    std::string line;
    std::getline(in, line);  // header
    MetricsReport rep;
    std::map<std::string, double> kv;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        kv[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }
    auto get = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError(path + ": missing metric " + key);
        return it->second;
    };
    rep.predcls_r1 = get("predcls_r1");
    rep.predcls_r5 = get("predcls_r5");
    rep.preddet_r5 = get("preddet_r5");
    rep.preddet_r10 = get("preddet_r10");
    rep.mean_r1 = get("mean_r1");
    rep.overall_r1 = get("overall_r1");
    rep.instances = static_cast<std::size_t>(get("instances"));
    rep.images = static_cast<std::size_t>(get("images"));
    for (std::size_t k = 0;; ++k) {
        auto it = kv.find("class_" + std::to_string(k) + "_r1");
        if (it == kv.end()) break;
        rep.per_class_r1.push_back(it->second);
        rep.per_class_count.push_back(
            static_cast<long long>(kv.at("class_" + std::to_string(k) + "_count")));
    }
    return rep;
}

}  // namespace adglab
