#include "adglab/divergence.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "adglab/common.hpp"

namespace adglab {

namespace {

constexpr double kRowTol = 1e-9;

// 0 * ln(0/q) = 0; p > 0 with q = 0 would be an absolute-continuity
// violation, which cannot happen against a pooled distribution that
// includes the row with positive weight.
double kl_term(double p, double q) {
    if (p <= 0.0) return 0.0;
    if (q <= 0.0) throw InvariantError("kl: absolute continuity violated (p>0, q=0)");
    return p * std::log(p / q);
}

}  // namespace

void DiscreteDomainFamily::validate() const {
    if (domains <= 0 || bins <= 0)
        throw ValidationError("family: domains and bins must be positive");
    if (static_cast<int>(cond.size()) != domains ||
        static_cast<int>(weights.size()) != domains)
        throw ValidationError("family: row/weight count does not match domains");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ValidationError("family: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > kRowTol)
        throw ValidationError("family: weights must sum to 1");
    for (const auto& row : cond) {
        if (static_cast<int>(row.size()) != bins)
            throw ValidationError("family: row length does not match bins");
        double s = 0.0;
        for (double p : row) {
            if (p < 0.0) throw ValidationError("family: negative probability");
            s += p;
        }
        if (std::abs(s - 1.0) > kRowTol)
            throw ValidationError("family: row does not sum to 1");
    }
}

void ConditionalFamily::validate() const {
    if (classes.empty()) throw ValidationError("conditional family: no classes");
    double s = 0.0;
    for (const auto& c : classes) {
        if (c.class_weight < 0.0)
            throw ValidationError("conditional family: negative class weight");
        s += c.class_weight;
        c.family.validate();
    }
    if (std::abs(s - 1.0) > kRowTol)
        throw ValidationError("conditional family: class weights must sum to 1");
}

std::vector<double> pooled(const DiscreteDomainFamily& family) {
    std::vector<double> p(static_cast<std::size_t>(family.bins), 0.0);
    for (int i = 0; i < family.domains; ++i)
        for (int b = 0; b < family.bins; ++b) p[b] += family.weights[i] * family.cond[i][b];
    return p;
}

double kld(const DiscreteDomainFamily& family) {
    const std::vector<double> pool = pooled(family);
    double total = 0.0;
    for (int i = 0; i < family.domains; ++i) {
        if (family.weights[i] == 0.0) continue;
        double kl = 0.0;
        for (int b = 0; b < family.bins; ++b) kl += kl_term(family.cond[i][b], pool[b]);
        total += family.weights[i] * kl;
    }
    return total;
}

double ckld(const ConditionalFamily& cfam) {
    double total = 0.0;
    for (const auto& c : cfam.classes) total += c.class_weight * kld(c.family);
    return total;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ValidationError("jsd: length mismatch");
    double d = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        const double m = 0.5 * (p[b] + q[b]);
        if (p[b] > 0.0) d += 0.5 * p[b] * std::log(p[b] / m);
        if (q[b] > 0.0) d += 0.5 * q[b] * std::log(q[b] / m);
    }
    return d;
}

double cjsd(const ConditionalFamily& cfam) {
    double total = 0.0;
    for (const auto& c : cfam.classes) {
        const std::vector<double> pool = pooled(c.family);
        double inner = 0.0;
        for (int i = 0; i < c.family.domains; ++i) {
            if (c.family.weights[i] == 0.0) continue;
            inner += c.family.weights[i] * jsd(c.family.cond[i], pool);
        }
        total += c.class_weight * inner;
    }
    return total;
}

std::vector<std::vector<double>> optimal_discriminator_kld(const DiscreteDomainFamily& family) {
    const std::vector<double> pool = pooled(family);
    std::vector<std::vector<double>> d(
        static_cast<std::size_t>(family.domains),
        std::vector<double>(static_cast<std::size_t>(family.bins), 0.0));
    for (int b = 0; b < family.bins; ++b) {
        if (pool[b] <= 0.0) continue;  // excluded bin
        for (int i = 0; i < family.domains; ++i)
            d[i][b] = family.weights[i] * family.cond[i][b] / pool[b];
    }
    return d;
}

double multiclass_objective(const DiscreteDomainFamily& family,
                            const std::vector<std::vector<double>>& discriminator) {
    double total = 0.0;
    for (int i = 0; i < family.domains; ++i) {
        if (family.weights[i] == 0.0) continue;
        double e = 0.0;
        for (int b = 0; b < family.bins; ++b) {
            const double p = family.cond[i][b];
            if (p <= 0.0) continue;
            const double d = discriminator[i][b];
            if (d <= 0.0) throw NumericError("multiclass_objective: ln of nonpositive D");
            e += p * std::log(d);
        }
        total += family.weights[i] * e;
    }
    return total;
}

double optimal_multiclass_value(const DiscreteDomainFamily& family) {
    double entropy_term = 0.0;
    for (double a : family.weights)
        if (a > 0.0) entropy_term += a * std::log(a);
    return kld(family) + entropy_term;
}

double conditional_multiclass_objective(
    const ConditionalFamily& cfam,
    const std::vector<std::vector<std::vector<double>>>& per_class_discriminator) {
    if (per_class_discriminator.size() != cfam.classes.size())
        throw ValidationError("conditional objective: discriminator count mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < cfam.classes.size(); ++k)
        total += cfam.classes[k].class_weight *
                 multiclass_objective(cfam.classes[k].family, per_class_discriminator[k]);
    return total;
}

double optimal_conditional_multiclass_value(const ConditionalFamily& cfam) {
    double total = 0.0;
    for (const auto& c : cfam.classes)
        total += c.class_weight * optimal_multiclass_value(c.family);
    return total;
}

std::vector<std::vector<std::vector<double>>> optimal_discriminator_jsd(
    const ConditionalFamily& cfam) {
    std::vector<std::vector<std::vector<double>>> d;
    d.reserve(cfam.classes.size());
    for (const auto& c : cfam.classes) {
        const std::vector<double> pool = pooled(c.family);
        std::vector<std::vector<double>> dk(
            static_cast<std::size_t>(c.family.domains),
            std::vector<double>(static_cast<std::size_t>(c.family.bins), 0.5));
        for (int i = 0; i < c.family.domains; ++i)
            for (int b = 0; b < c.family.bins; ++b) {
                const double pc = c.family.cond[i][b];
                const double pp = pool[b];
                if (pc + pp > 0.0) dk[i][b] = pc / (pc + pp);
            }
        d.push_back(std::move(dk));
    }
    return d;
}

double binary_objective(const ConditionalFamily& cfam,
                        const std::vector<std::vector<std::vector<double>>>& discriminator) {
    if (discriminator.size() != cfam.classes.size())
        throw ValidationError("binary objective: discriminator count mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < cfam.classes.size(); ++k) {
        const auto& fam = cfam.classes[k].family;
        const std::vector<double> pool = pooled(fam);
        double inner = 0.0;
        for (int i = 0; i < fam.domains; ++i) {
            if (fam.weights[i] == 0.0) continue;
            double e = 0.0;
            for (int b = 0; b < fam.bins; ++b) {
                const double d = discriminator[k][i][b];
                if (fam.cond[i][b] > 0.0) {
                    if (d <= 0.0) throw NumericError("binary_objective: ln of nonpositive D");
                    e += fam.cond[i][b] * std::log(d);
                }
                if (pool[b] > 0.0) {
                    if (d >= 1.0) throw NumericError("binary_objective: ln of nonpositive 1-D");
                    e += pool[b] * std::log(1.0 - d);
                }
            }
            inner += fam.weights[i] * e;
        }
        total += cfam.classes[k].class_weight * inner;
    }
    return total;
}

double theorem3_value(const ConditionalFamily& cfam) {
    double weight_sum = 0.0;
    for (const auto& c : cfam.classes) weight_sum += c.class_weight;
    return 2.0 * cjsd(cfam) - std::log(4.0) * weight_sum;
}

DiscreteDomainFamily random_family(CounterRng& rng, int max_domains, int max_bins) {
    DiscreteDomainFamily f;
    f.domains = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_domains - 1)));
    f.bins = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_bins - 1)));
    f.weights.resize(static_cast<std::size_t>(f.domains));
    double wsum = 0.0;
    for (double& w : f.weights) {
        w = 0.05 + rng.next_double();
        wsum += w;
    }
    for (double& w : f.weights) w /= wsum;
    f.cond.resize(static_cast<std::size_t>(f.domains));
    for (auto& row : f.cond) {
        row.resize(static_cast<std::size_t>(f.bins));
        double s = 0.0;
        for (double& p : row) {
            // Occasional hard zeros exercise the 0*ln(0) convention.
            p = rng.next_double() < 0.2 ? 0.0 : 0.01 + rng.next_double();
            s += p;
        }
        if (s == 0.0) {
            row[0] = 1.0;
            s = 1.0;
        }
        for (double& p : row) p /= s;
    }
    f.validate();
    return f;
}

ConditionalFamily random_conditional_family(CounterRng& rng, int max_classes, int max_domains,
                                            int max_bins) {
    ConditionalFamily cf;
    const int nclasses =
        1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_classes)));
    double wsum = 0.0;
    for (int k = 0; k < nclasses; ++k) {
        ConditionalFamily::ClassEntry e;
        e.class_id = k;
        e.class_weight = 0.05 + rng.next_double();
        wsum += e.class_weight;
        e.family = random_family(rng, max_domains, max_bins);
        cf.classes.push_back(std::move(e));
    }
    for (auto& e : cf.classes) e.class_weight /= wsum;
    cf.validate();
    return cf;
}

namespace {

nlohmann::json family_to_json(const DiscreteDomainFamily& f) {
    return nlohmann::json{
        {"domains", f.domains}, {"bins", f.bins}, {"weights", f.weights}, {"rows", f.cond}};
}

DiscreteDomainFamily family_from_json(const nlohmann::json& j) {
    DiscreteDomainFamily f;
    f.domains = j.at("domains").get<int>();
    f.bins = j.at("bins").get<int>();
    f.weights = j.at("weights").get<std::vector<double>>();
    f.cond = j.at("rows").get<std::vector<std::vector<double>>>();
    f.validate();
    return f;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open fixture file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write fixture file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace

DiscreteDomainFamily load_family(const std::string& path) {
    return family_from_json(load_json_file(path));
}

ConditionalFamily load_conditional_family(const std::string& path) {
    const nlohmann::json j = load_json_file(path);
    ConditionalFamily cf;
    for (const auto& cj : j.at("classes")) {
        ConditionalFamily::ClassEntry e;
        e.class_id = cj.at("class_id").get<int>();
        e.class_weight = cj.at("class_weight").get<double>();
        e.family = family_from_json(cj.at("family"));
        cf.classes.push_back(std::move(e));
    }
    cf.validate();
    return cf;
}

void save_family(const DiscreteDomainFamily& family, const std::string& path) {
    write_json_file(family_to_json(family), path);
}

void save_conditional_family(const ConditionalFamily& cfam, const std::string& path) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : cfam.classes)
        classes.push_back(nlohmann::json{{"class_id", c.class_id},
                                         {"class_weight", c.class_weight},
                                         {"family", family_to_json(c.family)}});
    write_json_file(nlohmann::json{{"classes", classes}}, path);
}

}  // namespace adglab
