#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "fairauction/diffcore.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fairauction::diff;
using testing::away_from_zero;
using testing::random_tensor;
using testing::worst_over_points;

namespace {

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.dim(1); ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  return out;
}

}  // namespace

TEST_CASE("forward values of the basic primitives") {
  Tape t;
  CHECK(softmax(t.constant(Tensor::vector({0.0, 0.0})), 0).value() == Tensor::vector({0.5, 0.5}));
  CHECK(relu(t.constant(Tensor::vector({-1.0, 2.0}))).value() == Tensor::vector({0.0, 2.0}));
  CHECK(sigmoid(t.constant(Tensor::scalar(0.0))).value().item() == 0.5);
  const Tensor sm = softmax(t.constant(Tensor::vector({0.0, std::log(2.0)})), 0).value();
  CHECK(sm[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(sm[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(minimum(t.constant(Tensor::vector({1.0, -2.0})), t.constant(Tensor::vector({0.5, 3.0}))).value() ==
        Tensor::vector({0.5, -2.0}));
  CHECK(abs_diff(t.constant(Tensor::vector({1.0, -2.0})), t.constant(Tensor::vector({0.5, 3.0}))).value() ==
        Tensor::vector({0.5, 5.0}));
  CHECK(scale(t.constant(Tensor::vector({1.0, -2.0})), 3.0).value() == Tensor::vector({3.0, -6.0}));
}

TEST_CASE("sigmoid stays finite and accurate at large magnitudes") {
  Tape t;
  const Tensor y = sigmoid(t.constant(Tensor::vector({-800.0, -30.0, 30.0, 800.0}))).value();
  CHECK(y.all_finite());
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(1.0 / (1.0 + std::exp(30.0))).epsilon(1e-12));
  CHECK(y[3] == 1.0);
}

TEST_CASE("tanh matches the library function") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xs = {0.0, -0.0, 1e-300, 0.019999, 0.02, 0.020001, -0.5, 20.0, -400.0};
  for (int k = 0; k < 20000; ++k) xs.push_back(std::ldexp(u(rng), -static_cast<int>(rng() % 30)) * (k % 3 ? 1.0 : 25.0));
  Tape t;
  const Tensor y = fairauction::diff::tanh(t.constant(Tensor::vector(xs))).value();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double ref = std::tanh(xs[i]);
    CHECK(std::abs(y[i] - ref) <= 4e-15 * std::max(std::abs(ref), 1e-300));
  }
}

TEST_CASE("matmul agrees with a triple loop") {
  std::mt19937_64 rng(5);
  for (auto [r, k, c] : {std::tuple{1, 1, 1}, {3, 7, 2}, {128, 100, 100}, {5, 1, 9}}) {
    const Tensor a = random_tensor(rng, {std::size_t(r), std::size_t(k)});
    const Tensor b = random_tensor(rng, {std::size_t(k), std::size_t(c)});
    Tape t;
    const Tensor got = matmul(t.constant(a), t.constant(b)).value();
    const Tensor want = naive_matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
  }
}

TEST_CASE("axis reductions, narrow, select and pairwise_diff follow their index definitions") {
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor(rng, {2, 3, 4});
  Tape t;
  const Var v = t.constant(x);

  const Tensor s1 = sum(v, 1).value();
  REQUIRE(s1.shape() == Shape{2, 4});
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(s1.at(a, c) == doctest::Approx(x.at(a, 0, c) + x.at(a, 1, c) + x.at(a, 2, c)).epsilon(1e-15));

  const Tensor m2 = mean(v, 2).value();
  REQUIRE(m2.shape() == Shape{2, 3});
  CHECK(m2.at(1, 2) == doctest::Approx((x.at(1, 2, 0) + x.at(1, 2, 1) + x.at(1, 2, 2) + x.at(1, 2, 3)) / 4.0));

  const Tensor nr = narrow(v, 2, 1, 2).value();
  REQUIRE(nr.shape() == Shape{2, 3, 2});
  CHECK(nr.at(1, 2, 0) == x.at(1, 2, 1));
  CHECK(nr.at(0, 1, 1) == x.at(0, 1, 2));

  const Tensor se = select(v, 1, {2, 0, 2}).value();
  REQUIRE(se.shape() == Shape{2, 3, 4});
  CHECK(se.at(1, 0, 3) == x.at(1, 2, 3));
  CHECK(se.at(1, 1, 3) == x.at(1, 0, 3));

  const Tensor pd = pairwise_diff(v, 2).value();
  REQUIRE(pd.shape() == Shape{2, 3, 4, 4});
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k) CHECK(pd.values()[((1 * 3 + 2) * 4 + j) * 4 + k] == x.at(1, 2, j) - x.at(1, 2, k));

  const Tensor sm = softmax(v, 1).value();
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t c = 0; c < 4; ++c) {
      double z = 0.0;
      for (std::size_t b = 0; b < 3; ++b) z += std::exp(x.at(a, b, c));
      CHECK(sm.at(a, 1, c) == doctest::Approx(std::exp(x.at(a, 1, c)) / z).epsilon(1e-14));
    }
}

TEST_CASE("leading-batch broadcasting only") {
  Tape t;
  const Var a = t.constant(Tensor({2, 3}, 1.0));
  const Var row = t.constant(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK(add(a, row).value() == Tensor::matrix(2, 3, {2, 3, 4, 2, 3, 4}));
  CHECK_THROWS_AS(add(row, a), ShapeError);
  CHECK_THROWS_AS(add(a, t.constant(Tensor::vector({1.0, 2.0}))), ShapeError);
  CHECK_THROWS_AS(mul(a, t.constant(Tensor({3, 2}))), ShapeError);
}

TEST_CASE("shape errors report both shapes") {
  Tape t;
  try {
    matmul(t.constant(Tensor({2, 3})), t.constant(Tensor({4, 5})));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[4, 5]") != std::string::npos);
  }
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("backward examples") {
  {
    Tape t;
    const Var x = t.leaf(Tensor::vector({3.0}));
    CHECK(backward(t, sum(square(x))).of(x) == Tensor::vector({6.0}));
  }
  {
    Tape t;
    const Var x = t.leaf(Tensor::vector({0.3, -1.2, 2.5, 0.0}));
    const Tensor g = backward(t, sum(softmax(x, 0))).of(x);
    for (double v : g.values()) CHECK(std::abs(v) < 1e-15);
  }
  {
    Tape t;
    const Var x = t.leaf(Tensor::vector({-1.0, 2.0}));
    CHECK(backward(t, sum(relu(x))).of(x) == Tensor::vector({0.0, 1.0}));
  }
  {
    Tape t;
    const Var x = t.leaf(Tensor::vector({0.0}));
    CHECK(backward(t, sum(relu(x))).of(x) == Tensor::vector({0.0}));
  }
  {
    // Ties in min send the gradient to the left operand.
    Tape t;
    const Var a = t.leaf(Tensor::vector({1.0}));
    const Var b = t.leaf(Tensor::vector({1.0}));
    const Gradients g = backward(t, sum(minimum(a, b)));
    CHECK(g.of(a)[0] == 1.0);
    CHECK(g.of(b)[0] == 0.0);
  }
}

TEST_CASE("backward rejects non-scalar outputs and skips constants") {
  Tape t;
  const Var x = t.leaf(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(backward(t, square(x)), ShapeError);
  const Var c = t.constant(Tensor::vector({1.0, 2.0}));
  const Gradients g = backward(t, sum(mul(x, c)));
  CHECK(g.has(x));
  CHECK_FALSE(g.has(c));
  CHECK(g.of(c) == Tensor::vector({0.0, 0.0}));
}

TEST_CASE("grad_check examples") {
  CHECK(grad_check([](Tape&, Var x) { return sum(square(x)); }, Tensor::vector({3.0}), 1e-5) <= 1e-6);
  CHECK(grad_check([](Tape&, Var x) { return sum(sigmoid(x)); }, Tensor::vector({0.0}), 1e-5) <= 1e-6);

  std::mt19937_64 rng(11);
  const Tensor w1 = random_tensor(rng, {4, 6});
  const Tensor b1 = random_tensor(rng, {6});
  const Tensor w2 = random_tensor(rng, {6, 3});
  const auto mlp = [&](Tape& t, Var x) {
    const Var h = fairauction::diff::tanh(add(matmul(x, t.constant(w1)), t.constant(b1)));
    return sum(fairauction::diff::tanh(matmul(h, t.constant(w2))));
  };
  CHECK(grad_check(mlp, random_tensor(rng, {5, 4}), 1e-5) <= 1e-4);
}

TEST_CASE("every primitive passes grad_check at 100 random smooth points") {
  for (const testing::GradCase& c : testing::primitive_grad_cases()) {
    INFO(c.name);
    CHECK(worst_over_points(c.f, c.point) <= 1e-4);
  }
}

TEST_CASE("gradients of independent subgraphs are the per-subgraph gradients") {
  std::mt19937_64 rng(31);
  const Tensor p = random_tensor(rng, {3, 2});
  const Tensor q = random_tensor(rng, {4});
  const auto f = [](Var x) { return sum(fairauction::diff::tanh(square(x))); };
  const auto g = [](Var y) { return sum(sigmoid(scale(y, 2.0))); };

  Tape joint;
  const Var x = joint.leaf(p);
  const Var y = joint.leaf(q);
  const Gradients both = backward(joint, add(f(x), g(y)));

  Tape tf;
  const Var xf = tf.leaf(p);
  Tape tg;
  const Var yg = tg.leaf(q);
  CHECK(both.of(x) == backward(tf, f(xf)).of(xf));
  CHECK(both.of(y) == backward(tg, g(yg)).of(yg));
}

TEST_CASE("replay reproduces values and gradients bit-exactly") {
  std::mt19937_64 rng(37);
  Tape t;
  const Var x = t.leaf(random_tensor(rng, {4, 3}));
  const Var w = t.leaf(random_tensor(rng, {3, 5}));
  const Var y = sum(mul(softmax(fairauction::diff::tanh(matmul(x, w)), 1), t.constant(random_tensor(rng, {4, 5}))));
  std::vector<Tensor> before;
  for (std::size_t id = 0; id < t.size(); ++id) before.push_back(t.node(id).value);
  const Gradients g1 = backward(t, y);
  t.replay();
  for (std::size_t id = 0; id < t.size(); ++id) CHECK(t.node(id).value == before[id]);
  const Gradients g2 = backward(t, y);
  CHECK(g1.of(x) == g2.of(x));
  CHECK(g1.of(w) == g2.of(w));
}
