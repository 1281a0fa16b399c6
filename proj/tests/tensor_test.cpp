#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "snntcl/rng.hpp"
#include "snntcl/tensor.hpp"

using namespace snntcl;

TEST_CASE("tensor basics") {
  Tensor t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t[4] == 5.0);
  CHECK(Tensor::scalar(3.5).value() == 3.5);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1.0}), ShapeError);

  Tensor shallow = t;
  shallow.at(0) = 9.0;
  CHECK(t[0] == 9.0);  // copies share the payload
  Tensor deep = t.clone();
  deep.at(0) = 1.0;
  CHECK(t[0] == 9.0);
}

TEST_CASE("elementwise forward values") {
  Tensor a(Shape{3}, {1, -2, 3});
  Tensor b(Shape{3}, {4, 5, -6});
  CHECK(add(a, b)[1] == 3.0);
  CHECK(sub(a, b)[2] == 9.0);
  CHECK(mul(a, b)[0] == 4.0);
  CHECK(scalar_mul(a, 2.0)[2] == 6.0);
  CHECK(add_scalar(a, 1.0)[1] == -1.0);
  CHECK(relu(a)[1] == 0.0);
  CHECK(relu(a)[2] == 3.0);
  CHECK(snntcl::exp(Tensor(Shape{1}, {0.0}))[0] == 1.0);
  CHECK(snntcl::log(Tensor(Shape{1}, {1.0}))[0] == 0.0);
  CHECK_THROWS_AS(add(a, Tensor(Shape{2}, {1, 2})), ShapeError);
}

TEST_CASE("matmul example") {
  Tensor a(Shape{2, 2}, {1, 2, 3, 4});
  Tensor b(Shape{2, 2}, {5, 6, 7, 8});
  Tensor c = matmul(a, b);
  CHECK(c[0] == 19.0);
  CHECK(c[1] == 22.0);
  CHECK(c[2] == 43.0);
  CHECK(c[3] == 50.0);
}

TEST_CASE("reductions and reshape") {
  Tensor a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(sum(a).value() == 21.0);
  Tensor s0 = sum_axis(a, 0);
  CHECK(s0.shape() == Shape{3});
  CHECK(s0[0] == 5.0);
  Tensor m1 = mean_axis(a, 1);
  CHECK(m1[0] == doctest::Approx(2.0));
  CHECK(m1[1] == doctest::Approx(5.0));
  CHECK(reshape(a, {3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeError);
  Tensor c = concat({a, a}, 0);
  CHECK(c.shape() == Shape{4, 3});
  CHECK(c[6] == 1.0);
  Tensor c1 = concat({a, a}, 1);
  CHECK(c1.shape() == Shape{2, 6});
  CHECK(c1[3] == 1.0);
}

TEST_CASE("backward through a small graph") {
  Graph g;
  Tensor x(Shape{2}, {3.0, -1.0});
  g.watch(x);
  // f = sum((x + x) * x) = 2*sum(x^2); df/dx = 4x
  Tensor loss = sum(mul(add(x, x), x));
  g.backward(loss);
  Tensor gx = g.grad(x);
  CHECK(gx[0] == doctest::Approx(12.0));
  CHECK(gx[1] == doctest::Approx(-4.0));
}

TEST_CASE("backward requires a scalar in-graph loss") {
  Graph g;
  Tensor x(Shape{2}, {1.0, 2.0});
  g.watch(x);
  Tensor y = add(x, x);
  CHECK_THROWS_AS(g.backward(y), ValidationError);
  Tensor untracked = Tensor::scalar(1.0);
  CHECK_THROWS_AS(g.backward(untracked), ValidationError);
}

TEST_CASE("gradient of unused leaf is zero") {
  Graph g;
  Tensor x(Shape{2}, {1.0, 2.0});
  Tensor y(Shape{2}, {1.0, 1.0});
  g.watch(x);
  g.watch(y);
  g.backward(sum(x));
  Tensor gy = g.grad(y);
  CHECK(gy[0] == 0.0);
  CHECK(gy[1] == 0.0);
}

TEST_CASE("softmax cross-entropy value and gradient identity") {
  Tensor logits(Shape{1, 2}, {0.0, 0.0});
  CHECK(softmax_cross_entropy(logits, {0}).value() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Graph g;
  Tensor l(Shape{2, 3}, {0.5, -1.0, 2.0, 0.0, 0.3, -0.7});
  g.watch(l);
  std::vector<int> labels{2, 0};
  g.backward(softmax_cross_entropy(l, labels));
  Tensor gl = g.grad(l);
  // grad = (softmax - onehot) / B
  for (std::size_t b = 0; b < 2; ++b) {
    double denom = 0.0;
    for (std::size_t c = 0; c < 3; ++c) denom += std::exp(l[b * 3 + c]);
    for (std::size_t c = 0; c < 3; ++c) {
      const double p = std::exp(l[b * 3 + c]) / denom;
      const double expect = (p - (labels[b] == static_cast<int>(c) ? 1.0 : 0.0)) / 2.0;
      CHECK(gl[b * 3 + c] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(softmax_cross_entropy(l, {0, 5}), ValidationError);
}

TEST_CASE("finite differences agree on a composite") {
  RngStream rng(7, "test/fd");
  Tensor x(Shape{2, 3});
  for (auto& v : x.data()) v = rng.uniform(0.3, 1.5);
  auto f = [](const Tensor& t) {
    return sum(mul(snntcl::log(t), snntcl::exp(scalar_mul(t, 0.5)))).value();
  };
  Tensor analytic;
  {
    Graph g;
    Tensor xt = x.clone();
    g.watch(xt);
    g.backward(sum(mul(snntcl::log(xt), snntcl::exp(scalar_mul(xt, 0.5)))));
    analytic = g.grad(xt);
  }
  Tensor numeric = finite_diff_gradient(f, x, 1e-6);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(analytic[i] == doctest::Approx(numeric[i]).epsilon(1e-6));
}

TEST_CASE("l2_normalize_rows") {
  Tensor x(Shape{2, 2}, {3.0, 4.0, 0.0, 0.0});
  Tensor y = l2_normalize_rows(x);
  CHECK(y[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(y[2] == 0.0);  // zero rows pass through
  CHECK_THROWS_AS(l2_normalize_rows(x, true), NumericError);
}

TEST_CASE("conv and pooling shapes") {
  Tensor x = Tensor::full({1, 1, 4, 4}, 1.0);
  Tensor w = Tensor::full({2, 1, 3, 3}, 1.0);
  Tensor y = conv2d(x, w, Tensor(), 1, 1);
  CHECK(y.shape() == Shape{1, 2, 4, 4});
  CHECK(y[5] == 9.0);  // interior position sees the full kernel
  Tensor ys = conv2d(x, w, Tensor(), 2, 1);
  CHECK(ys.shape() == Shape{1, 2, 2, 2});
  Tensor p = avgpool2d(x, 2, 2);
  CHECK(p.shape() == Shape{1, 1, 2, 2});
  CHECK(p[0] == 1.0);
  Tensor gp = global_avg_pool(y);
  CHECK(gp.shape() == Shape{1, 2});
}

TEST_CASE("deterministic op results across repeated evaluation") {
  RngStream rng(11, "test/det");
  Tensor x(Shape{2, 3, 5, 5});
  for (auto& v : x.data()) v = rng.normal(0.0, 1.0);
  Tensor w(Shape{4, 3, 3, 3});
  for (auto& v : w.data()) v = rng.normal(0.0, 0.2);
  Tensor a = conv2d(x, w, Tensor(), 1, 1);
  Tensor b = conv2d(x, w, Tensor(), 1, 1);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("named rng streams are independent and reproducible") {
  RngStream a1(5, "alpha"), a2(5, "alpha"), b(5, "beta");
  const double v1 = a1.uniform(0, 1), v2 = a2.uniform(0, 1);
  CHECK(v1 == v2);
  CHECK(b.uniform(0, 1) != v1);
}
