#include <doctest.h>

#include <cmath>

#include "adglab/rng.hpp"
#include "adglab/tape.hpp"
#include "support/gradcheck.hpp"

using namespace adglab;
using namespace adglab::testsupport;

namespace {

Tensor random_tensor(CounterRng& rng, int r, int c, double scale = 1.0) {
    Tensor t(r, c);
    for (double& e : t.v) e = scale * (2.0 * rng.next_double() - 1.0);
    return t;
}

}  // namespace

TEST_CASE("matmul with identity is identity") {
    Tape tape;
    auto eye = tape.constant(Tensor(2, 2, {1, 0, 0, 1}));
    auto x = tape.constant(Tensor(2, 1, {3, 4}));
    auto y = tape.matmul(eye, x);
    CHECK(tape.value(y).at(0, 0) == doctest::Approx(3.0));
    CHECK(tape.value(y).at(1, 0) == doctest::Approx(4.0));
}

TEST_CASE("sigmoid(0) = 0.5 and softmax of uniform logits is uniform") {
    Tape tape;
    auto z = tape.sigmoid(tape.constant(Tensor::scalar(0.0)));
    CHECK(tape.value(z).item() == doctest::Approx(0.5));

    auto sm = tape.softmax_rows(tape.constant(Tensor(1, 3, {1, 1, 1})));
    for (int c = 0; c < 3; ++c)
        CHECK(tape.value(sm).at(0, c) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("shape mismatch names the primitive") {
    Tape tape;
    auto a = tape.constant(Tensor(2, 3));
    auto b = tape.constant(Tensor(2, 2));
    CHECK_THROWS_WITH_AS(tape.matmul(a, b),
                         doctest::Contains("matmul"), ValidationError);
    CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), ValidationError);
}

TEST_CASE("non-finite values raise instead of propagating") {
    Tape tape;
    auto z = tape.constant(Tensor::scalar(-1.0));
    CHECK_THROWS_AS(tape.log(z), NumericError);
}

TEST_CASE("d/dx (x*x) at 3 is 6") {
    Tape tape;
    auto x = tape.leaf(Tensor::scalar(3.0));
    tape.backward(tape.mul(x, x));
    CHECK(tape.grad(x).item() == doctest::Approx(6.0));
}

TEST_CASE("d/dx sigmoid at 0 is 0.25") {
    Tape tape;
    auto x = tape.leaf(Tensor::scalar(0.0));
    tape.backward(tape.sigmoid(x));
    CHECK(tape.grad(x).item() == doctest::Approx(0.25));
}

TEST_CASE("gradient of a constant stays zero") {
    Tape tape;
    auto c = tape.constant(Tensor::scalar(2.0));
    auto x = tape.leaf(Tensor::scalar(3.0));
    tape.backward(tape.mul(c, x));
    CHECK(tape.grad(c).item() == 0.0);
    CHECK(tape.grad(x).item() == doctest::Approx(2.0));
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    auto x = tape.leaf(Tensor(2, 2, {1, 2, 3, 4}));
    auto y = tape.scale(x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), ValidationError);
}

TEST_CASE("two-layer net gradients match central finite differences") {
    CounterRng rng(42);
    auto build = [](Tape& t, const std::vector<Tape::Ref>& in) {
        // in: x[4x6], W1[6x5], b1[1x5], W2[5x3], b2[1x3], target-ish weights
        auto h = t.sigmoid(t.add(t.matmul(in[0], in[1]), in[2]));
        auto out = t.add(t.matmul(h, in[3]), in[4]);
        auto probs = t.log_softmax_rows(out);
        return t.neg(t.mean_all(probs));
    };
    std::vector<Tensor> inputs = {
        random_tensor(rng, 4, 6), random_tensor(rng, 6, 5), random_tensor(rng, 1, 5),
        random_tensor(rng, 5, 3), random_tensor(rng, 1, 3)};
    auto res = grad_check(build, inputs);
    CHECK(res.checked == 4 * 6 + 6 * 5 + 5 + 5 * 3 + 3);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("gather, concat and logsigmoid gradients match finite differences") {
    CounterRng rng(7);
    auto build = [](Tape& t, const std::vector<Tape::Ref>& in) {
        auto emb = t.gather_rows(in[0], {2, 0, 1, 2});            // embedding lookup
        auto cat = t.concat_cols({emb, in[1]});                   // 4 x (3+2)
        auto lin = t.matmul(cat, in[2]);                          // 4 x 4
        auto picked = t.gather_cols(lin, {0, 3, 1, 2});           // 4 x 1
        auto act = t.logsigmoid(picked);
        return t.sum_all(act);
    };
    std::vector<Tensor> inputs = {random_tensor(rng, 3, 3), random_tensor(rng, 4, 2),
                                  random_tensor(rng, 5, 4)};
    auto res = grad_check(build, inputs);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("backward is linear in the loss") {
    CounterRng rng(3);
    const Tensor x0 = random_tensor(rng, 3, 3);
    const double a = 2.5, b = -1.25;

    auto grads_of = [&](double sa, double sb) {
        Tape t;
        auto x = t.leaf(x0);
        auto l1 = t.mean_all(t.sigmoid(x));
        auto l2 = t.sum_all(t.mul(x, x));
        auto combo = t.add(t.scale(l1, sa), t.scale(l2, sb));
        t.backward(combo);
        return t.grad(x);
    };
    // combined loss vs manual combination of separate backward passes
    const Tensor combined = grads_of(a, b);
    const Tensor g1 = grads_of(1.0, 0.0);
    const Tensor g2 = grads_of(0.0, 1.0);
    for (std::size_t e = 0; e < combined.size(); ++e)
        CHECK(combined.v[e] == doctest::Approx(a * g1.v[e] + b * g2.v[e]).epsilon(1e-12));
}

TEST_CASE("row and scalar broadcast in elementwise ops") {
    Tape tape;
    auto m = tape.leaf(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
    auto row = tape.leaf(Tensor(1, 3, {10, 20, 30}));
    auto s = tape.add(m, row);
    CHECK(tape.value(s).at(1, 2) == doctest::Approx(36.0));
    tape.backward(tape.sum_all(s));
    // row gradient sums over the broadcast dimension
    CHECK(tape.grad(row).at(0, 0) == doctest::Approx(2.0));

    Tape t2;
    auto m2 = t2.leaf(Tensor(2, 2, {1, 2, 3, 4}));
    auto sc = t2.constant(Tensor::scalar(2.0));
    auto p = t2.mul(m2, sc);
    CHECK(t2.value(p).at(1, 1) == doctest::Approx(8.0));
}
