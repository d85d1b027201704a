#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "adglab/common.hpp"
#include "adglab/divergence.hpp"

using namespace adglab;

namespace {

DiscreteDomainFamily two_bin_family(double p1a, double p2a, double w1) {
    DiscreteDomainFamily f;
    f.domains = 2;
    f.bins = 2;
    f.cond = {{p1a, 1.0 - p1a}, {p2a, 1.0 - p2a}};
    f.weights = {w1, 1.0 - w1};
    f.validate();
    return f;
}

}  // namespace

TEST_CASE("pooled distribution is the weighted mixture") {
    SUBCASE("identical rows pool to that row") {
        auto f = two_bin_family(0.3, 0.3, 0.6);
        auto p = pooled(f);
        CHECK(p[0] == doctest::Approx(0.3));
        CHECK(p[1] == doctest::Approx(0.7));
    }
    SUBCASE("disjoint rows with equal weight pool to a half-half mix") {
        auto f = two_bin_family(1.0, 0.0, 0.5);
        auto p = pooled(f);
        CHECK(p[0] == doctest::Approx(0.5));
        CHECK(p[1] == doctest::Approx(0.5));
    }
    SUBCASE("random family pools to per-bin summation and sums to 1") {
        CounterRng rng(11);
        auto f = random_family(rng, 3, 4);
        auto p = pooled(f);
        double total = 0.0;
        for (int b = 0; b < f.bins; ++b) {
            double direct = 0.0;
            for (int i = 0; i < f.domains; ++i) direct += f.weights[i] * f.cond[i][b];
            CHECK(p[b] == doctest::Approx(direct));
            total += p[b];
        }
        CHECK(total == doctest::Approx(1.0));
    }
}

TEST_CASE("kld basics") {
    CHECK(kld(two_bin_family(0.3, 0.3, 0.5)) == doctest::Approx(0.0));
    // disjoint supports: each KL(P_i || pooled) = ln 2
    CHECK(kld(two_bin_family(1.0, 0.0, 0.5)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("kld matches per-bin brute force on random families") {
    CounterRng rng(101);
    for (int trial = 0; trial < 30; ++trial) {
        auto f = random_family(rng);
        auto pool = pooled(f);
        double direct = 0.0;
        for (int i = 0; i < f.domains; ++i)
            for (int b = 0; b < f.bins; ++b) {
                const double p = f.cond[i][b];
                if (p > 0.0) direct += f.weights[i] * p * std::log(p / pool[b]);
            }
        CHECK(kld(f) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("ckld reduces to kld for one class and matches triple sum") {
    CounterRng rng(5);
    auto fam = random_family(rng);
    ConditionalFamily one;
    one.classes.push_back({0, 1.0, fam});
    CHECK(ckld(one) == doctest::Approx(kld(fam)).epsilon(1e-12));

    SUBCASE("identical rows per class give zero") {
        ConditionalFamily cf;
        cf.classes.push_back({0, 0.5, two_bin_family(0.4, 0.4, 0.3)});
        cf.classes.push_back({1, 0.5, two_bin_family(0.8, 0.8, 0.7)});
        CHECK(ckld(cf) == doctest::Approx(0.0));
        CHECK(cjsd(cf) == doctest::Approx(0.0));
    }
    SUBCASE("two-class fixture matches exhaustive (k,i,bin) sum") {
        auto cf = random_conditional_family(rng, 4);
        double direct = 0.0;
        for (const auto& c : cf.classes) {
            auto pool = pooled(c.family);
            for (int i = 0; i < c.family.domains; ++i)
                for (int b = 0; b < c.family.bins; ++b) {
                    const double p = c.family.cond[i][b];
                    if (p > 0.0)
                        direct += c.class_weight * c.family.weights[i] * p *
                                  std::log(p / pool[b]);
                }
        }
        CHECK(ckld(cf) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("cjsd: disjoint rows give ln 2 per weighted term") {
    ConditionalFamily cf;
    cf.classes.push_back({0, 1.0, two_bin_family(1.0, 0.0, 0.5)});
    // JSD(P_i || pooled) with pooled = (1/2,1/2): each term
    // = 0.5*KL(P||m) + 0.5*KL(pool||m), m = (3/4,1/4) vs ...; direct oracle:
    double direct = 0.0;
    {
        auto& fam = cf.classes[0].family;
        auto pool = pooled(fam);
        for (int i = 0; i < 2; ++i) direct += fam.weights[i] * jsd(fam.cond[i], pool);
    }
    CHECK(cjsd(cf) == doctest::Approx(direct).epsilon(1e-12));
    // and jsd of fully disjoint distributions is ln 2
    CHECK(jsd({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("optimal multiclass discriminator") {
    SUBCASE("single domain is the constant 1") {
        DiscreteDomainFamily f;
        f.domains = 1;
        f.bins = 3;
        f.cond = {{0.2, 0.5, 0.3}};
        f.weights = {1.0};
        auto d = optimal_discriminator_kld(f);
        for (int b = 0; b < 3; ++b) CHECK(d[0][b] == doctest::Approx(1.0));
    }
    SUBCASE("identical rows with equal weights give 0.5") {
        auto f = two_bin_family(0.4, 0.4, 0.5);
        auto d = optimal_discriminator_kld(f);
        for (int i = 0; i < 2; ++i)
            for (int b = 0; b < 2; ++b) CHECK(d[i][b] == doctest::Approx(0.5));
    }
    SUBCASE("0.75/0.25 cross example") {
        auto f = two_bin_family(0.75, 0.25, 0.5);
        auto d = optimal_discriminator_kld(f);
        CHECK(d[0][0] == doctest::Approx(0.75));
        CHECK(d[1][0] == doctest::Approx(0.25));
        const double expect = kld(f) + 2.0 * 0.5 * std::log(0.5);
        CHECK(multiclass_objective(f, d) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("theorem 1 identity on random families") {
    CounterRng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        auto f = random_family(rng);
        auto d = optimal_discriminator_kld(f);
        // columns sum to 1 on bins with pooled mass
        auto pool = pooled(f);
        for (int b = 0; b < f.bins; ++b) {
            if (pool[b] <= 0.0) continue;
            double col = 0.0;
            for (int i = 0; i < f.domains; ++i) col += d[i][b];
            CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(multiclass_objective(f, d) ==
              doctest::Approx(optimal_multiclass_value(f)).epsilon(1e-12));
    }
}

TEST_CASE("theorem 2 identity: conditional optimum is ckld plus weight entropy") {
    CounterRng rng(77);
    for (int trial = 0; trial < 15; ++trial) {
        auto cf = random_conditional_family(rng);
        std::vector<std::vector<std::vector<double>>> d;
        for (const auto& c : cf.classes) d.push_back(optimal_discriminator_kld(c.family));
        double expect = ckld(cf);
        for (const auto& c : cf.classes)
            for (std::size_t i = 0; i < c.family.weights.size(); ++i)
                if (c.family.weights[i] > 0.0)
                    expect += c.class_weight * c.family.weights[i] *
                              std::log(c.family.weights[i]);
        CHECK(conditional_multiclass_objective(cf, d) ==
              doctest::Approx(expect).epsilon(1e-12));
        CHECK(conditional_multiclass_objective(cf, d) ==
              doctest::Approx(optimal_conditional_multiclass_value(cf)).epsilon(1e-12));
    }
}

TEST_CASE("theorem 3 identity and binary optimum") {
    SUBCASE("identical rows: value is -ln4 * sum of class weights") {
        ConditionalFamily cf;
        cf.classes.push_back({0, 0.4, two_bin_family(0.3, 0.3, 0.5)});
        cf.classes.push_back({1, 0.6, two_bin_family(0.9, 0.9, 0.2)});
        CHECK(theorem3_value(cf) == doctest::Approx(-std::log(4.0)));
        auto d = optimal_discriminator_jsd(cf);
        CHECK(binary_objective(cf, d) == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
        // converged discriminator on identical distributions sits at 0.5
        CHECK(d[0][0][0] == doctest::Approx(0.5));
    }
    SUBCASE("single class single domain: -2 ln 2") {
        ConditionalFamily cf;
        DiscreteDomainFamily f;
        f.domains = 1;
        f.bins = 4;
        f.cond = {{0.1, 0.2, 0.3, 0.4}};
        f.weights = {1.0};
        cf.classes.push_back({0, 1.0, f});
        CHECK(theorem3_value(cf) == doctest::Approx(-2.0 * std::log(2.0)));
        auto d = optimal_discriminator_jsd(cf);
        CHECK(binary_objective(cf, d) ==
              doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("random families match within 1e-12") {
        CounterRng rng(31337);
        for (int trial = 0; trial < 25; ++trial) {
            auto cf = random_conditional_family(rng);
            auto d = optimal_discriminator_jsd(cf);
            CHECK(binary_objective(cf, d) ==
                  doctest::Approx(theorem3_value(cf)).epsilon(1e-11));
        }
    }
}

TEST_CASE("nonnegativity and jsd upper bound") {
    CounterRng rng(999);
    for (int trial = 0; trial < 20; ++trial) {
        auto f = random_family(rng);
        CHECK(kld(f) >= 0.0);
        auto cf = random_conditional_family(rng);
        CHECK(ckld(cf) >= 0.0);
        const double c = cjsd(cf);
        CHECK(c >= 0.0);
        CHECK(c <= std::log(2.0) + 1e-12);
    }
}

TEST_CASE("perturbing the optimal discriminator never improves the objective") {
    CounterRng rng(4242);
    for (int trial = 0; trial < 10; ++trial) {
        auto f = random_family(rng);
        auto d = optimal_discriminator_kld(f);
        const double best = multiclass_objective(f, d);
        for (int rep = 0; rep < 5; ++rep) {
            auto noisy = d;
            auto pool = pooled(f);
            for (int b = 0; b < f.bins; ++b) {
                if (pool[b] <= 0.0) continue;
                double col = 0.0;
                for (int i = 0; i < f.domains; ++i) {
                    noisy[i][b] = std::max(1e-9, noisy[i][b] + 0.2 * (rng.next_double() - 0.5));
                    col += noisy[i][b];
                }
                for (int i = 0; i < f.domains; ++i) noisy[i][b] /= col;
            }
            CHECK(multiclass_objective(f, noisy) <= best + 1e-12);
        }

        auto cf = random_conditional_family(rng);
        auto dj = optimal_discriminator_jsd(cf);
        const double best_j = binary_objective(cf, dj);
        auto noisy = dj;
        for (auto& per_class : noisy)
            for (auto& per_domain : per_class)
                for (double& x : per_domain)
                    x = std::min(1.0 - 1e-9,
                                 std::max(1e-9, x + 0.2 * (rng.next_double() - 0.5)));
        CHECK(binary_objective(cf, noisy) <= best_j + 1e-12);
    }
}

TEST_CASE("fixture files round-trip") {
    CounterRng rng(8);
    auto f = random_family(rng);
    const std::string path = "test_family_roundtrip.json";
    save_family(f, path);
    auto g = load_family(path);
    CHECK(g.domains == f.domains);
    CHECK(g.bins == f.bins);
    for (int i = 0; i < f.domains; ++i)
        for (int b = 0; b < f.bins; ++b) CHECK(g.cond[i][b] == f.cond[i][b]);

    auto cf = random_conditional_family(rng);
    const std::string cpath = "test_cfamily_roundtrip.json";
    save_conditional_family(cf, cpath);
    auto cg = load_conditional_family(cpath);
    CHECK(cg.classes.size() == cf.classes.size());
    CHECK(theorem3_value(cg) == doctest::Approx(theorem3_value(cf)).epsilon(1e-15));
    std::remove(path.c_str());
    std::remove(cpath.c_str());
}

TEST_CASE("family validation rejects bad input") {
    DiscreteDomainFamily f;
    f.domains = 2;
    f.bins = 2;
    f.cond = {{0.5, 0.5}, {0.9, 0.2}};  // second row sums to 1.1
    f.weights = {0.5, 0.5};
    CHECK_THROWS_AS(f.validate(), ValidationError);
}
