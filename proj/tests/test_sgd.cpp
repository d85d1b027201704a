#include <doctest.h>

#include <cmath>
#include <limits>

#include "adglab/sgd.hpp"

using namespace adglab;

TEST_CASE("zero gradient and zero decay leave params unchanged") {
    Param w("w", Tensor(1, 3, {1.0, -2.0, 0.5}));
    SgdConfig cfg;
    cfg.weight_decay = 0.0;
    std::vector<Param*> group{&w};
    sgd_step(group, cfg);
    CHECK(w.value.v == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("plain sgd arithmetic: w=1, g=2, lr=0.1 -> 0.8") {
    Param w("w", Tensor::scalar(1.0));
    w.grad = Tensor::scalar(2.0);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.gradient_clip = std::numeric_limits<double>::infinity();
    std::vector<Param*> group{&w};
    sgd_step(group, cfg);
    CHECK(w.value.item() == doctest::Approx(0.8));
}

TEST_CASE("global norm clipping bounds the applied update") {
    // gradient of norm 10 across two params, clip 1 -> update norm lr*1
    Param a("a", Tensor(1, 2, {0.0, 0.0}));
    Param b("b", Tensor(1, 2, {0.0, 0.0}));
    a.grad = Tensor(1, 2, {6.0, 0.0});
    b.grad = Tensor(1, 2, {0.0, 8.0});
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.gradient_clip = 1.0;
    std::vector<Param*> group{&a, &b};
    sgd_step(group, cfg);
    double update_sq = 0.0;
    for (double e : a.value.v) update_sq += e * e;
    for (double e : b.value.v) update_sq += e * e;
    CHECK(std::sqrt(update_sq) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("sign -1 ascends") {
    Param w("w", Tensor::scalar(1.0));
    w.grad = Tensor::scalar(0.5);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    std::vector<Param*> group{&w};
    sgd_step(group, cfg, -1.0);
    CHECK(w.value.item() == doctest::Approx(1.05));
}

TEST_CASE("momentum accumulates across steps") {
    Param w("w", Tensor::scalar(0.0));
    SgdConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.momentum = 0.5;
    cfg.weight_decay = 0.0;
    cfg.gradient_clip = std::numeric_limits<double>::infinity();
    std::vector<Param*> group{&w};
    w.grad = Tensor::scalar(1.0);
    sgd_step(group, cfg);  // buf=1, w=-1
    w.grad = Tensor::scalar(1.0);
    sgd_step(group, cfg);  // buf=1.5, w=-2.5
    CHECK(w.value.item() == doctest::Approx(-2.5));
}

TEST_CASE("config invariants are enforced") {
    SgdConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = SgdConfig{};
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = SgdConfig{};
    cfg.weight_decay = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
