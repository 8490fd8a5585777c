#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sdg/errors.hpp"
#include "sdg/mlp.hpp"
#include "sdg/rng.hpp"
#include "test_support.hpp"

using namespace sdg;
using sdg::testing::random_batch;
using sdg::testing::random_model;
using sdg::testing::rel_error;

TEST_CASE("parameter count and layout") {
  MlpModel m({3, 5, 4, 2}, LossKind::kSoftmaxCrossEntropy);
  CHECK(m.num_params() == 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
  CHECK(m.feature_dim() == 4);
  CHECK_THROWS_AS(MlpModel({3}, LossKind::kSquaredError), DimensionError);
  CHECK_THROWS_AS(m.set_params(ParamVector(3)), DimensionError);
}

TEST_CASE("forward shapes and caches") {
  Rng rng(1);
  MlpModel m = random_model(rng, {3, 6, 2}, LossKind::kSquaredError);
  const Matrix x(7, 3, 0.5);
  const ForwardCache cache = m.forward(x);
  CHECK(cache.activations.size() == 3);
  CHECK(cache.outputs().rows() == 7);
  CHECK(cache.outputs().cols() == 2);
  CHECK(cache.features().cols() == 6);
  CHECK_THROWS_AS(m.forward(Matrix(2, 4)), DimensionError);
}

TEST_CASE("zero parameters give zero outputs") {
  MlpModel m({4, 3, 2}, LossKind::kSquaredError);
  Rng rng(2);
  Matrix x(5, 4);
  for (double& v : x.data()) v = rng.normal();
  const ForwardResult r = forward(m, x);
  for (double v : r.outputs.data()) CHECK(v == 0.0);
}

TEST_CASE("identity linear layer passes inputs through") {
  MlpModel m({3, 3}, LossKind::kSquaredError);
  ParamVector theta(m.num_params());
  for (std::size_t i = 0; i < 3; ++i) theta[i * 3 + i] = 1.0;
  m.set_params(theta);
  const Matrix x{{1, -2, 3}, {0.5, 0, -1}};
  const ForwardResult r = forward(m, x);
  CHECK(r.outputs == x);
  CHECK(r.features == x);  // no hidden layer: the features are the inputs
}

TEST_CASE("one hidden unit matches a hand evaluation") {
  // out = w2 * relu(w1 . x + b1) + b2
  MlpModel m({2, 1, 1}, LossKind::kSquaredError);
  const double w1a = 0.7, w1b = -1.2, b1 = 0.3, w2 = 2.5, b2 = -0.4;
  m.set_params(ParamVector{w1a, w1b, b1, w2, b2});
  const Matrix x{{1.0, 0.5}, {-1.0, 1.0}};
  const ForwardResult r = forward(m, x);
  const double h0 = std::max(0.0, w1a * 1.0 + w1b * 0.5 + b1);
  const double h1 = std::max(0.0, w1a * -1.0 + w1b * 1.0 + b1);
  CHECK(r.outputs(0, 0) == doctest::Approx(w2 * h0 + b2).epsilon(1e-15));
  CHECK(r.outputs(1, 0) == doctest::Approx(w2 * h1 + b2).epsilon(1e-15));
  CHECK(r.features(0, 0) == doctest::Approx(h0));
  CHECK(r.features(1, 0) == 0.0);
}

TEST_CASE("loss values") {
  MlpModel m({2, 1}, LossKind::kSquaredError);
  DomainBatch b;
  b.inputs = Matrix{{1.0, 2.0}};
  b.targets = Matrix{{1.0}};
  CHECK(domain_loss(m, b) == 0.5);  // prediction 0, target 1

  m.set_params(ParamVector{0.0, 0.5, 0.0});  // prediction 1
  CHECK(domain_loss(m, b) == 0.0);

  for (std::size_t k : {2u, 3u, 7u}) {
    MlpModel ce({2, k}, LossKind::kSoftmaxCrossEntropy);
    DomainBatch cb;
    cb.inputs = Matrix{{0.3, -0.1}, {1.0, 2.0}};
    cb.labels = {0, k - 1};
    CHECK(domain_loss(ce, cb) == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-14));
  }
}

TEST_CASE("losses are non-negative and stable for large logits") {
  Rng rng(3);
  for (LossKind kind : {LossKind::kSquaredError, LossKind::kSoftmaxCrossEntropy}) {
    MlpModel m = random_model(rng, {4, 8, 3}, kind);
    ParamVector theta = m.params();
    for (double& t : theta) t *= 300.0;
    m.set_params(theta);
    const DomainBatch b = random_batch(rng, 10, 4, 3, kind);
    const double l = domain_loss(m, b);
    CHECK(std::isfinite(l));
    CHECK(l >= 0.0);
  }
}

TEST_CASE("gradient examples") {
  MlpModel m({1, 1}, LossKind::kSquaredError);
  DomainBatch b;
  b.inputs = Matrix{{1.0}};
  b.targets = Matrix{{1.0}};
  const ParamVector g = domain_grad(m, b);  // 1/2 (w x + c - y)^2 at w = c = 0
  CHECK(g[0] == -1.0);
  CHECK(g[1] == -1.0);

  m.set_params(ParamVector{1.0, 0.0});
  const ParamVector zero = domain_grad(m, b);
  CHECK(zero == ParamVector{0.0, 0.0});
}

TEST_CASE("gradients match finite differences") {
  Rng rng(4);
  const std::vector<std::vector<std::size_t>> shapes = {{3, 2}, {4, 6, 2}, {3, 5, 4, 3}, {5, 8, 1}};
  int checked = 0;
  for (LossKind kind : {LossKind::kSquaredError, LossKind::kSoftmaxCrossEntropy}) {
    for (int trial = 0; trial < 12; ++trial) {
      auto dims = shapes[static_cast<std::size_t>(trial) % shapes.size()];
      if (kind == LossKind::kSoftmaxCrossEntropy && dims.back() < 2) dims.back() = 2;
      MlpModel m = random_model(rng, dims, kind);
      const DomainBatch b = random_batch(rng, 3 + rng.index(6), dims.front(), dims.back(), kind);
      const ParamVector analytic = domain_grad(m, b);
      const ParamVector numeric = finite_diff_grad(
          [&](const ParamVector& t) {
            MlpModel probe = m;
            probe.set_params(t);
            return domain_loss(probe, b);
          },
          m.params());
      CHECK(rel_error(analytic, numeric) <= 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("feature-gradient injection matches finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    MlpModel m = random_model(rng, {3, 6, 4, 2}, LossKind::kSquaredError);
    Matrix x(5, 3);
    for (double& v : x.data()) v = rng.normal();
    Matrix weights(5, 4);
    for (double& v : weights.data()) v = rng.normal();
    // Scalar: sum of weights .* features.
    auto scalar = [&](const MlpModel& model) {
      const ForwardResult r = forward(model, x);
      double s = 0.0;
      for (std::size_t i = 0; i < weights.data().size(); ++i) s += weights.data()[i] * r.features.data()[i];
      return s;
    };
    const ForwardCache cache = m.forward(x);
    const ParamVector analytic = m.backward(cache, nullptr, &weights);
    const ParamVector numeric = finite_diff_grad(
        [&](const ParamVector& t) {
          MlpModel probe = m;
          probe.set_params(t);
          return scalar(probe);
        },
        m.params());
    CHECK(rel_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("loss is exactly invariant to row order") {
  Rng rng(6);
  for (LossKind kind : {LossKind::kSquaredError, LossKind::kSoftmaxCrossEntropy}) {
    for (int trial = 0; trial < 10; ++trial) {
      MlpModel m = random_model(rng, {4, 7, 3}, kind);
      const DomainBatch b = random_batch(rng, 25, 4, 3, kind);
      const DomainBatch shuffled = select_rows(b, rng.permutation(b.size()));
      CHECK(domain_loss(m, b) == domain_loss(m, shuffled));
    }
  }
}

TEST_CASE("forward of stacked batches is the stack of forwards") {
  Rng rng(7);
  MlpModel m = random_model(rng, {3, 5, 4, 2}, LossKind::kSoftmaxCrossEntropy);
  Matrix a(4, 3), b(6, 3);
  for (double& v : a.data()) v = rng.normal();
  for (double& v : b.data()) v = rng.normal();
  const ForwardResult joint = forward(m, vstack(a, b));
  CHECK(joint.outputs == vstack(forward(m, a).outputs, forward(m, b).outputs));
  CHECK(joint.features == vstack(forward(m, a).features, forward(m, b).features));
}

TEST_CASE("initialization stays inside the fan-in range and is seeded") {
  MlpModel a({10, 4, 2}, LossKind::kSquaredError), b({10, 4, 2}, LossKind::kSquaredError);
  Rng ra(8), rb(8);
  a.initialize(ra);
  b.initialize(rb);
  CHECK(a.params() == b.params());
  // First layer: fan-in 10.
  for (std::size_t p = 0; p < 44; ++p) CHECK(std::abs(a.params()[p]) <= 1.0 / std::sqrt(10.0));
  for (std::size_t p = 44; p < a.num_params(); ++p) CHECK(std::abs(a.params()[p]) <= 0.5);
}

TEST_CASE("accuracy and batch checks") {
  MlpModel m({2, 2}, LossKind::kSoftmaxCrossEntropy);
  m.set_params(ParamVector{1, 0, 0, 1, 0, 0});  // logits = inputs
  DomainBatch b;
  b.inputs = Matrix{{2, 1}, {0, 3}, {5, 1}};
  b.labels = {0, 1, 1};
  CHECK(m.accuracy(m.forward(b.inputs).outputs(), b) == doctest::Approx(2.0 / 3.0));

  DomainBatch bad;
  bad.inputs = Matrix{{1, 2}};
  bad.labels = {2};
  CHECK_THROWS_AS(domain_loss(m, bad), DimensionError);
  CHECK(parse_loss_kind("cross_entropy") == LossKind::kSoftmaxCrossEntropy);
  CHECK(to_string(LossKind::kSquaredError) == "squared_error");
  CHECK_THROWS(parse_loss_kind("hinge"));
}
