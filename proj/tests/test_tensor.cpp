#include <gtest/gtest.h>

#include <cmath>

#include "bibleqa/autodiff.hpp"
#include "bibleqa/errors.hpp"
#include "support/op_cases.hpp"
#include "support/oracles.hpp"

using namespace bqa;

namespace {

Tensor eval1(UnaryKind k, Tensor t) {
  Graph g;
  return apply_unary(k, g.constant(std::move(t))).value();
}

}  // namespace

// ---- forward values ----------------------------------------------------------

TEST(Unary, SigmoidOfZeroIsHalf) { EXPECT_DOUBLE_EQ(eval1(UnaryKind::Sigmoid, Tensor::scalar(0.0)).item(), 0.5); }

TEST(Unary, ReluClipsNegatives) {
  EXPECT_EQ(eval1(UnaryKind::Relu, Tensor::vector({-1, 2})), Tensor::vector({0, 2}));
}

TEST(Unary, SoftmaxOfEqualLogitsIsUniform) {
  EXPECT_EQ(eval1(UnaryKind::Softmax, Tensor::vector({0, 0})), Tensor::vector({0.5, 0.5}));
}

TEST(Unary, EmptyTensorRejected) {
  EXPECT_THROW(eval1(UnaryKind::Sigmoid, Tensor(Shape{0})), ShapeError);
  EXPECT_THROW(eval1(UnaryKind::Softmax, Tensor(Shape{2, 0})), ShapeError);
}

TEST(Unary, SoftmaxRowsArePositiveAndSumToOne) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(8);
    const Tensor s = eval1(UnaryKind::Softmax, oracle::random_tensor(rng, {r, c}, -30, 30));
    for (std::size_t i = 0; i < r; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < c; ++j) {
        EXPECT_GT(s.at(i, j), 0.0);
        sum += s.at(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Unary, LargeLogitsStayFinite) {
  const Tensor s = eval1(UnaryKind::Softmax, Tensor::vector({1000, 0, -1000}));
  for (double v : s.values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(s[0], 1.0, 1e-12);
  const Tensor sg = eval1(UnaryKind::Sigmoid, Tensor::vector({-800, 800}));
  EXPECT_TRUE(std::isfinite(sg[0]));
  EXPECT_EQ(sg[1], 1.0);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Graph g;
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(g.constant(Tensor::matrix({{1, 0}, {0, 1}})), g.constant(m)).value(), m);
}

TEST(Matmul, HandProduct) {
  Graph g;
  Var r = matmul(g.constant(Tensor::matrix({{1, 2}, {3, 4}})), g.constant(Tensor::matrix({{1}, {1}})));
  EXPECT_EQ(r.value(), Tensor::matrix({{3}, {7}}));
}

TEST(Matmul, InnerMismatchNamesBothShapes) {
  Graph g;
  try {
    matmul(g.constant(Tensor(Shape{2, 3})), g.constant(Tensor(Shape{4, 2})));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4,2]"), std::string::npos) << msg;
  }
}

TEST(Reduce, Examples) {
  Graph g;
  EXPECT_EQ(reduce(ReduceKind::Max, g.constant(Tensor::vector({1, 5, 3})), 0).value().item(), 5.0);
  EXPECT_EQ(reduce(ReduceKind::Sum, g.constant(Tensor::matrix({{1, 2}, {3, 4}})), 0).value(), Tensor::vector({4, 6}));
  EXPECT_EQ(reduce(ReduceKind::Mean, g.constant(Tensor::vector({2, 2, 2})), 0).value().item(), 2.0);
}

TEST(Reduce, AxisOutOfRange) {
  Graph g;
  EXPECT_THROW(reduce(ReduceKind::Sum, g.constant(Tensor(Shape{2, 2})), 2), AxisError);
}

TEST(Reduce, MaxTieRoutesGradientToFirstIndex) {
  Graph g;
  Var x = g.variable(Tensor::vector({3, 1, 3, 3}));
  Var m = reduce(ReduceKind::Max, x, 0);
  g.backward(m);
  EXPECT_EQ(g.grad(x), Tensor::vector({1, 0, 0, 0}));
}

TEST(Concat, Examples) {
  Graph g;
  EXPECT_EQ(concat(g.constant(Tensor::vector({1})), g.constant(Tensor::vector({2})), 0).value(),
            Tensor::vector({1, 2}));
  EXPECT_EQ(concat(g.constant(Tensor(Shape{2, 3})), g.constant(Tensor(Shape{2, 5})), 1).shape(), (Shape{2, 8}));
  EXPECT_THROW(concat(g.constant(Tensor(Shape{2, 3})), g.constant(Tensor(Shape{3, 3})), 1), ShapeError);
}

TEST(Broadcast, OnlyScalarWithTensor) {
  Graph g;
  Var s = g.constant(Tensor::scalar(2));
  Var t = g.constant(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(mul(s, t).value(), Tensor::vector({2, 4, 6}));
  EXPECT_THROW(add(g.constant(Tensor(Shape{2, 3})), g.constant(Tensor(Shape{1, 3}))), ShapeError);
}

// ---- backward -----------------------------------------------------------------

TEST(Backward, SquareAtThree) {
  Graph g;
  Var x = g.variable(Tensor::scalar(3));
  g.backward(mul(x, x));
  EXPECT_DOUBLE_EQ(g.grad(x).item(), 6.0);
}

TEST(Backward, SigmoidSlopeAtZero) {
  Graph g;
  Var w = g.variable(Tensor::scalar(0));
  Var x = g.constant(Tensor::scalar(1));
  g.backward(sigmoid(mul(w, x)));
  EXPECT_DOUBLE_EQ(g.grad(w).item(), 0.25);
}

TEST(Backward, LossGradIsOne) {
  Graph g;
  Var x = g.variable(Tensor::scalar(2));
  Var y = affine(x, 3.0, 1.0);
  g.backward(y);
  EXPECT_EQ(g.grad(y).item(), 1.0);
}

TEST(Backward, NonScalarLossRejected) {
  Graph g;
  Var x = g.variable(Tensor::vector({1, 2}));
  EXPECT_THROW(g.backward(x), GraphError);
}

TEST(Backward, ForeignTensorRejected) {
  Graph a, b;
  Var x = a.variable(Tensor::scalar(1));
  Var y = b.variable(Tensor::scalar(1));
  EXPECT_THROW(b.backward(x), GraphError);
  EXPECT_THROW(add(x, y), GraphError);
}

TEST(Backward, GradientsAccumulateOverReuse) {
  // f = x*y + x  =>  df/dx = y + 1
  Graph g;
  Var x = g.variable(Tensor::scalar(2));
  Var y = g.variable(Tensor::scalar(5));
  g.backward(add(mul(x, y), x));
  EXPECT_EQ(g.grad(x).item(), 6.0);
  EXPECT_EQ(g.grad(y).item(), 2.0);
}

// A five-op chain on random inputs, checked against an independent
// value-only central-difference evaluation.
TEST(Backward, RandomChainMatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + rng.below(5), k = 1 + rng.below(5), n = 1 + rng.below(5);
    const Tensor a0 = oracle::random_tensor(rng, {m, k});
    const Tensor b0 = oracle::random_tensor(rng, {k, n});

    auto chain = [](Var a, Var b) {
      Var h = tanh(matmul(a, b));
      Var e = mul(softmax(h), sigmoid(h));
      return sum_all(e);
    };

    Graph g;
    Var a = g.variable(a0), b = g.variable(b0);
    g.backward(chain(a, b));
    std::vector<double> analytic(g.grad(a).data());
    const Tensor gb = g.grad(b);
    analytic.insert(analytic.end(), gb.data().begin(), gb.data().end());

    std::vector<double> x(a0.data());
    x.insert(x.end(), b0.data().begin(), b0.data().end());
    auto f = [&](const std::vector<double>& v) {
      Graph h;
      Tensor ta(a0.shape(), std::vector<double>(v.begin(), v.begin() + static_cast<long>(m * k)));
      Tensor tb(b0.shape(), std::vector<double>(v.begin() + static_cast<long>(m * k), v.end()));
      return chain(h.constant(ta), h.constant(tb)).value().item();
    };
    EXPECT_LT(oracle::max_rel_err(analytic, oracle::numeric_grad(f, x)), 1e-6);
  }
}

// Every differentiable op, random shapes up to extent 8.
TEST(Backward, PerOpGradCheck) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto cases = oracle::op_cases(rng);
    for (const auto& [name, f] : cases.ops) EXPECT_LT(grad_check(f, cases.params), 1e-6) << name;
  }
}

TEST(GradCheck, QuadraticBowlIsExact) {
  ParameterSet p;
  p.add("w", Tensor::vector({0.3, -1.2, 2.5}));
  const ScalarFn bowl = [](Graph&, const BoundParams& b) { return sum_all(mul(b.at("w"), b.at("w"))); };
  EXPECT_LT(grad_check(bowl, p), 1e-9);
}

TEST(GradCheck, NonScalarFunctionRejected) {
  ParameterSet p;
  p.add("w", Tensor::vector({1, 2}));
  EXPECT_THROW(grad_check([](Graph&, const BoundParams& b) { return b.at("w"); }, p), GraphError);
}

// ---- structural properties ------------------------------------------------------

TEST(Properties, ConcatThenSliceIsIdentityOnValuesAndGradients) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + rng.below(6), ca = 1 + rng.below(6), cb = 1 + rng.below(6);
    const Tensor a0 = oracle::random_tensor(rng, {r, ca});
    const Tensor b0 = oracle::random_tensor(rng, {r, cb});
    const Tensor wa = oracle::random_tensor(rng, {r, ca});
    const Tensor wb = oracle::random_tensor(rng, {r, cb});

    Graph g;
    Var a = g.variable(a0), b = g.variable(b0);
    Var joined = concat(a, b, 1);
    Var pa = slice(joined, 1, 0, ca), pb = slice(joined, 1, ca, ca + cb);
    EXPECT_EQ(pa.value(), a0);
    EXPECT_EQ(pb.value(), b0);
    g.backward(add(sum_all(mul(pa, g.constant(wa))), sum_all(mul(pb, g.constant(wb)))));
    EXPECT_EQ(g.grad(a), wa);
    EXPECT_EQ(g.grad(b), wb);
  }
}

TEST(Properties, ForwardIsBitwiseDeterministic) {
  Rng rng(9);
  const Tensor a = oracle::random_tensor(rng, {7, 8}), b = oracle::random_tensor(rng, {8, 5});
  auto run = [&] {
    Graph g;
    return softmax(tanh(matmul(g.constant(a), g.constant(b)))).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(Properties, GradShapeMatchesValueShape) {
  Graph g;
  Var x = g.variable(Tensor(Shape{3, 4}));
  Var unused = g.variable(Tensor(Shape{2, 2}));
  g.backward(sum_all(sigmoid(x)));
  EXPECT_EQ(g.grad(x).shape(), (Shape{3, 4}));
  EXPECT_EQ(g.grad(unused), Tensor::zeros({2, 2}));
}

TEST(Tensor, ValueCountMustMatchShape) {
  EXPECT_THROW(Tensor(Shape{3, 3}, std::vector<double>(8)), ShapeError);
  EXPECT_EQ(Tensor(Shape{2, 3}).numel(), 6u);
}

TEST(ParameterSet, NamesAreUniqueNonEmptyAsciiAndSorted) {
  ParameterSet p;
  p.add("zeta", Tensor::scalar(1));
  p.add("alpha", Tensor::scalar(2));
  EXPECT_THROW(p.add("alpha", Tensor::scalar(3)), ValidationError);
  EXPECT_THROW(p.add("", Tensor::scalar(3)), ValidationError);
  EXPECT_THROW(p.add("caf\xc3\xa9", Tensor::scalar(3)), ValidationError);
  EXPECT_EQ(p.names(), (std::vector<std::string>{"alpha", "zeta"}));
}
