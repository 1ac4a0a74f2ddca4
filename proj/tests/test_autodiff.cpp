#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sir/autodiff.hpp"
#include "sir/error.hpp"
#include "support.hpp"

using namespace sir;
using sir::testing::random_vector;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return Tensor::matrix(r, c, random_vector(r * c, rng));
}

double max_fd_error(const LossBuilder& fn, ParameterSet& params) {
  GradientCheckOptions opts;
  opts.max_coordinates = 1000;
  return gradient_check(fn, params, opts).max_relative_error;
}

}  // namespace

TEST(Affine, IdentityWeight) {
  Tape t;
  auto y = t.affine(t.constant(Tensor::matrix(1, 2, {1, 2})), t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
                    t.constant(Tensor::vector({0, 0})));
  EXPECT_EQ(t.value(y), Tensor::matrix(1, 2, {1, 2}));
}

TEST(Affine, AllOnesSum) {
  Tape t;
  auto y = t.affine(t.constant(Tensor::matrix(1, 2, {1, 1})), t.constant(Tensor::matrix(2, 1, {1, 1})),
                    t.constant(Tensor::vector({1})));
  EXPECT_EQ(t.value(y), Tensor::matrix(1, 1, {3}));
}

TEST(Affine, MatchesDoubleLoop) {
  std::mt19937_64 rng(1);
  Tensor x = random_matrix(3, 4, rng), w = random_matrix(4, 2, rng);
  Tensor b = Tensor::vector(random_vector(2, rng));
  Tape t;
  const Tensor& y = t.value(t.affine(t.constant(x), t.constant(w), t.constant(b)));
  ASSERT_EQ(y.shape, (Shape{3, 2}));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = b.values[o];
      for (std::size_t i = 0; i < 4; ++i) acc += x.at(r, i) * w.at(i, o);
      EXPECT_NEAR(y.at(r, o), acc, 1e-12);
    }
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
  Tape t;
  try {
    t.affine(t.constant(Tensor::matrix(1, 3, {1, 2, 3})), t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
             t.constant(Tensor::vector({0, 0})));
    FAIL();
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[1x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2x2]"), std::string::npos) << msg;
  }
}

TEST(Relu, SignCases) {
  Tape t;
  EXPECT_EQ(t.value(t.relu(t.constant(Tensor::vector({-1, 0, 2})))), Tensor::vector({0, 0, 2}));
  EXPECT_EQ(t.value(t.relu(t.constant(Tensor::vector({-3, -0.5, -1e-9})))), Tensor::vector({0, 0, 0}));
}

TEST(Relu, Elementwise) {
  std::mt19937_64 rng(2);
  auto v = random_vector(50, rng);
  Tape t;
  const Tensor& y = t.value(t.relu(t.constant(Tensor::vector(v))));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(y.values[i], v[i] > 0 ? v[i] : 0.0);
}

TEST(Softmax, Cases) {
  Tape t;
  const Tensor& u = t.value(t.softmax(t.constant(Tensor::vector({0, 0, 0}))));
  for (double p : u.values) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(t.value(t.softmax(t.constant(Tensor::vector({42.0})))).values[0], 1.0);
  const Tensor& big = t.value(t.softmax(t.constant(Tensor::vector({1000, 1001}))));
  ASSERT_TRUE(big.all_finite());
  double e = std::exp(1.0);
  EXPECT_NEAR(big.values[0], 1.0 / (1.0 + e), 1e-12);
  EXPECT_NEAR(big.values[1], e / (1.0 + e), 1e-12);
  EXPECT_NEAR(big.values[0], 0.2689, 1e-4);
}

TEST(Softmax, EmptyIsDomainError) {
  Tape t;
  EXPECT_THROW(t.softmax(t.constant(Tensor::vector({}))), DomainError);
}

TEST(Softmax, ProbabilityVectorAndArgmax) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    auto v = random_vector(1 + rep % 8, rng, -20, 20);
    Tape t;
    const Tensor& p = t.value(t.softmax(t.constant(Tensor::vector(v))));
    double s = 0;
    for (double x : p.values) {
      EXPECT_GE(x, 0.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_EQ(std::max_element(p.values.begin(), p.values.end()) - p.values.begin(),
              std::max_element(v.begin(), v.end()) - v.begin());
  }
}

TEST(Embedding, OneHotRows) {
  Tape t;
  Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(t.value(t.embedding(t.constant(eye), 2, "city")).values, (std::vector<double>{0, 0, 1}));
}

TEST(Embedding, GradientIsSparse) {
  ParameterSet ps;
  std::mt19937_64 rng(4);
  ps.add("table", random_matrix(4, 3, rng));
  Tape t;
  auto loss = t.sum(t.embedding(t.parameter(ps, "table"), 1, "city"));
  t.backward(loss, ps);
  const Tensor& g = ps.get("table").grad;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(g.at(r, c), r == 1 ? 1.0 : 0.0);
}

TEST(Embedding, MatchesSlice) {
  std::mt19937_64 rng(5);
  Tensor table = random_matrix(6, 4, rng);
  Tape t;
  for (std::size_t i = 0; i < 6; ++i) {
    const Tensor& row = t.value(t.embedding(t.constant(table), i, "x"));
    EXPECT_EQ(row.values, std::vector<double>(table.values.begin() + i * 4, table.values.begin() + (i + 1) * 4));
  }
}

TEST(Embedding, OutOfRangeNamesFeature) {
  Tape t;
  try {
    t.embedding(t.constant(Tensor::matrix(2, 1, {1, 2})), 2, "device");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("device"), std::string::npos);
  }
}

TEST(Backward, LinearGradient) {
  ParameterSet ps;
  ps.add("w", Tensor::vector({0.3, -2, 5}));
  ps.add("unused", Tensor::vector({1, 2}));
  Tensor x = Tensor::vector({1.5, -4, 0.25});
  Tape t;
  t.backward(t.dot(t.parameter(ps, "w"), t.constant(x)), ps);
  EXPECT_EQ(ps.get("w").grad, x);
  EXPECT_EQ(ps.get("unused").grad, Tensor(Shape{2}, 0.0));
}

TEST(Backward, NonScalarIsContractError) {
  ParameterSet ps;
  ps.add("w", Tensor::vector({1, 2}));
  Tape t;
  auto y = t.relu(t.parameter(ps, "w"));
  EXPECT_THROW(t.backward(y, ps), ContractError);
}

TEST(Backward, RepeatableAfterZeroing) {
  std::mt19937_64 rng(6);
  ParameterSet ps;
  ps.add("w", random_matrix(3, 2, rng));
  ps.add("b", Tensor::vector(random_vector(2, rng)));
  Tensor x = random_matrix(4, 3, rng);
  auto run = [&] {
    Tape t;
    t.backward(t.sum(t.relu(t.affine(t.constant(x), t.parameter(ps, "w"), t.parameter(ps, "b")))), ps);
    Tensor g = ps.get("w").grad;
    ps.zero_grad();
    return g;
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, TwoLayerMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  ParameterSet ps;
  ps.add("w1", random_matrix(5, 4, rng));
  ps.add("b1", Tensor::vector(random_vector(4, rng)));
  ps.add("w2", random_matrix(4, 1, rng));
  ps.add("b2", Tensor::vector(random_vector(1, rng)));
  Tensor x = random_matrix(3, 5, rng);
  LossBuilder fn = [&](Tape& t, const ParameterSet& p) {
    auto h = t.relu(t.affine(t.constant(x), t.parameter(p, "w1"), t.parameter(p, "b1")));
    return t.sum(t.affine(h, t.parameter(p, "w2"), t.parameter(p, "b2")));
  };
  EXPECT_LT(max_fd_error(fn, ps), 1e-4);
}

TEST(Backward, Additive) {
  std::mt19937_64 rng(8);
  ParameterSet ps;
  ps.add("w", Tensor::vector(random_vector(4, rng, 0.5, 2)));
  Tensor a = Tensor::vector(random_vector(4, rng)), b = Tensor::vector(random_vector(4, rng));
  auto grad = [&](int which) {
    Tape t;
    auto w = t.parameter(ps, "w");
    auto la = t.dot(t.log(w), t.constant(a));
    auto lb = t.dot(t.softmax(t.add(w, t.constant(b))), t.constant(a));
    Var loss = which == 0 ? la : which == 1 ? lb : t.add(la, lb);
    t.backward(loss, ps);
    Tensor g = ps.get("w").grad;
    ps.zero_grad();
    return g;
  };
  Tensor ga = grad(0), gb = grad(1), gab = grad(2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(gab.values[i], ga.values[i] + gb.values[i], 1e-14);
}

TEST(Operations, FiniteDifferencesOnRandomTensors) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int rep = 0; rep < 10; ++rep) {
    std::size_t r = dim(rng), c = dim(rng), o = dim(rng), l = dim(rng);
    ParameterSet ps;
    ps.add("x", random_matrix(r, c, rng));
    ps.add("w", random_matrix(c, o, rng));
    ps.add("b", Tensor::vector(random_vector(o, rng)));
    ps.add("pos", random_matrix(r, c, rng));
    for (auto& v : ps.get("pos").value.values) v = std::abs(v) + 0.5;
    ps.add("table", random_matrix(3, c, rng));
    ps.add("comp", Tensor::vector(random_vector(l, rng)));
    ps.add("kw", Tensor::vector(random_vector(l * c, rng)));
    Tensor mix = Tensor::vector(random_vector(r * o, rng));
    LossBuilder fn = [&](Tape& t, const ParameterSet& p) {
      auto x = t.parameter(p, "x");
      auto a = t.relu(t.affine(x, t.parameter(p, "w"), t.parameter(p, "b")));
      auto s = t.softmax(t.reshape(a, Shape{r * o}));
      auto emb = t.embedding(t.parameter(p, "table"), 1, "cat");
      auto rows = t.repeat_rows(emb, r);
      auto lg = t.log(t.parameter(p, "pos"));
      auto k = t.kron_inner(t.parameter(p, "comp"), t.add(lg, rows), t.parameter(p, "kw"));
      Var both[] = {x, lg};
      auto wide = t.concat_cols(both);
      Var vs[] = {s, k};
      auto joined = t.concat(vs);
      return t.add(t.add(t.dot(s, t.constant(mix)), t.sum(joined)), t.sum(t.relu(wide)));
    };
    EXPECT_LT(max_fd_error(fn, ps), 1e-4) << "rep " << rep;
  }
}

TEST(Operations, ForwardIsPure) {
  std::mt19937_64 rng(10);
  Tensor x = random_matrix(3, 4, rng), w = random_matrix(4, 5, rng);
  Tensor b = Tensor::vector(random_vector(5, rng));
  auto run = [&] {
    Tape t;
    return t.value(t.softmax(t.reshape(t.relu(t.affine(t.constant(x), t.constant(w), t.constant(b))), Shape{15})));
  };
  EXPECT_EQ(run(), run());
}

TEST(GradientCheck, Quadratic) {
  ParameterSet ps;
  ps.add("theta", Tensor::vector({3.0}));
  LossBuilder fn = [](Tape& t, const ParameterSet& p) {
    auto th = t.parameter(p, "theta");
    return t.dot(th, th);
  };
  auto r = gradient_check(fn, ps);
  EXPECT_EQ(r.coordinates, 1u);
  EXPECT_LT(r.max_relative_error, 1e-8);
  Tape t;
  t.backward(fn(t, ps), ps);
  EXPECT_EQ(ps.get("theta").grad.values[0], 6.0);
}

TEST(GradientCheck, ConstantLoss) {
  ParameterSet ps;
  ps.add("theta", Tensor::vector({1, 2}));
  LossBuilder fn = [](Tape& t, const ParameterSet&) { return t.constant(Tensor::scalar(4.0)); };
  EXPECT_EQ(gradient_check(fn, ps).max_relative_error, 0.0);
}

TEST(GradientCheck, NonDeterministicLossRejected) {
  ParameterSet ps;
  ps.add("theta", Tensor::vector({1}));
  int calls = 0;
  LossBuilder fn = [&](Tape& t, const ParameterSet& p) {
    ++calls;
    return t.add(t.sum(t.parameter(p, "theta")), t.constant(Tensor::scalar(calls)));
  };
  EXPECT_THROW(gradient_check(fn, ps), ContractError);
}

TEST(Sgd, SingleStep) {
  ParameterSet ps;
  ps.add("theta", Tensor::vector({1.0}));
  ps.get("theta").grad.values[0] = 2.0;
  sgd_step(ps, 0.1);
  EXPECT_DOUBLE_EQ(ps.get("theta").value.values[0], 0.8);
  EXPECT_EQ(ps.get("theta").grad.values[0], 0.0);
}

TEST(Sgd, ZeroRateLeavesParameters) {
  ParameterSet ps;
  ps.add("theta", Tensor::vector({1.0, -2.0}));
  ps.get("theta").grad = Tensor::vector({5, 7});
  ParameterSet before = ps;
  sgd_step(ps, 0.0);
  EXPECT_TRUE(ps == before);
}

TEST(Sgd, ConvergesOnQuadratic) {
  ParameterSet ps;
  ps.add("theta", Tensor::vector({10.0, -4.0}));
  const std::vector<double> target{1.5, 2.5};
  for (int step = 0; step < 100; ++step) {
    Tape t;
    auto d = t.add(t.parameter(ps, "theta"), t.constant(Tensor::vector({-target[0], -target[1]})));
    t.backward(t.dot(d, d), ps);
    sgd_step(ps, 0.1);
  }
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(ps.get("theta").value.values[i], target[i], 1e-3);
}

TEST(Sgd, NonFiniteGradientNamesParameter) {
  ParameterSet ps;
  ps.add("ok", Tensor::vector({1.0}));
  ps.add("deep.head.bias", Tensor::vector({1.0}));
  ps.get("deep.head.bias").grad.values[0] = std::nan("");
  try {
    sgd_step(ps, 0.1);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("deep.head.bias"), std::string::npos);
  }
  EXPECT_EQ(ps.get("ok").value.values[0], 1.0);
}

TEST(Init, GlorotBounds) {
  std::mt19937_64 rng(11);
  Tensor w = glorot_uniform(30, 10, rng);
  double limit = std::sqrt(6.0 / 40.0);
  EXPECT_EQ(w.shape, (Shape{30, 10}));
  for (double v : w.values) EXPECT_LE(std::abs(v), limit);
}
