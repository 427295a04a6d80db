#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modcodec/ops.hpp"
#include "modcodec/optim.hpp"
#include "modcodec/transforms.hpp"
#include "support/test_support.hpp"

using namespace modcodec;
using testsup::random_tensor;
using testsup::rel_err;

TEST_CASE("tensor shape and data invariants") {
  CHECK_THROWS_AS(Tensor::from_vector(Shape{1, 1, 2, 2}, {1.0, 2.0}),
                  ConfigError);
  Tensor t = Tensor::full(Shape{2, 3, 4, 5}, 1.5);
  CHECK(t.numel() == 120);
  CHECK(t.at(1, 2, 3, 4) == 1.5);
  // non-finite values are hard errors
  Tensor bad = Tensor::scalar(std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(bad.check_finite("bad"), NumericError);
}

TEST_CASE("conv2d box sums with zero padding") {
  Graph g = Graph::inference();
  Tensor x = Tensor::full(Shape{1, 1, 4, 4}, 1.0);
  Tensor w = Tensor::full(Shape{1, 1, 3, 3}, 1.0);
  Tensor out = ops::conv2d(g, x, w, Tensor{}, 1, 1);
  const double expected[16] = {4, 6, 6, 4, 6, 9, 9, 6, 6, 9, 9, 6, 4, 6, 6, 4};
  for (size_t i = 0; i < 16; ++i) CHECK(out.values()[i] == expected[i]);
}

TEST_CASE("conv2d reflect padding matches an explicit mirror pad") {
  // independent oracle: materialize the mirror-padded image, then run the
  // zero-padding path on it with padding 0
  Graph g = Graph::inference();
  Rng rng(41);
  Tensor x = random_tensor(Shape{1, 2, 4, 5}, rng);
  auto fold = [](long i, long n) {
    const long period = 2 * (n - 1);
    long m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
  };
  Tensor padded = Tensor::zeros(Shape{1, 2, 6, 7});
  for (size_t c = 0; c < 2; ++c) {
    for (long y = -1; y <= 4; ++y) {
      for (long xx = -1; xx <= 5; ++xx) {
        padded.at(0, c, static_cast<size_t>(y + 1), static_cast<size_t>(xx + 1)) =
            x.at(0, c, static_cast<size_t>(fold(y, 4)),
                 static_cast<size_t>(fold(xx, 5)));
      }
    }
  }
  Tensor w = random_tensor(Shape{3, 2, 3, 3}, rng);
  Tensor direct = ops::conv2d(g, x, w, Tensor{}, 1, 1, ops::PadMode::reflect);
  Tensor oracle = ops::conv2d(g, padded, w, Tensor{}, 1, 0);
  REQUIRE(direct.shape() == oracle.shape());
  for (size_t i = 0; i < direct.numel(); ++i) {
    CHECK(direct.values()[i] == oracle.values()[i]);
  }

  // gradients flow correctly through the folded indices
  Tensor xg = random_tensor(Shape{1, 2, 4, 4}, rng, -1, 1, true);
  Tensor wg = random_tensor(Shape{2, 2, 3, 3}, rng, -0.5, 0.5, true);
  auto loss_fn = [&](Graph& gg) {
    return ops::sum_all(
        gg, ops::square(gg, ops::conv2d(gg, xg, wg, Tensor{}, 1, 1,
                                        ops::PadMode::reflect)));
  };
  CHECK(testsup::fd_check_all(loss_fn, {xg, wg}) < 1e-4);
}

TEST_CASE("conv_transpose2d adjoint holds under reflect padding") {
  Graph g = Graph::inference();
  Rng rng(43);
  Tensor x = random_tensor(Shape{1, 2, 8, 8}, rng);
  Tensor w = random_tensor(Shape{3, 2, 3, 3}, rng);
  Tensor cx = ops::conv2d(g, x, w, Tensor{}, 2, 1, ops::PadMode::reflect);
  Tensor y = random_tensor(cx.shape(), rng);
  Tensor ty =
      ops::conv_transpose2d(g, y, w, Tensor{}, 2, 1, 1, ops::PadMode::reflect);
  REQUIRE(ty.shape() == x.shape());
  double lhs = 0.0, rhs = 0.0;
  for (size_t i = 0; i < cx.numel(); ++i) lhs += cx.values()[i] * y.values()[i];
  for (size_t i = 0; i < x.numel(); ++i) rhs += x.values()[i] * ty.values()[i];
  CHECK(rel_err(lhs, rhs) < 1e-10);
}

TEST_CASE("conv2d identity kernel") {
  Graph g = Graph::inference();
  Rng rng(7);
  Tensor x = random_tensor(Shape{2, 1, 5, 6}, rng);
  Tensor dirac = Tensor::zeros(Shape{1, 1, 3, 3});
  dirac.values()[4] = 1.0;
  Tensor y = ops::conv2d(g, x, dirac, Tensor{}, 1, 1);
  REQUIRE(y.shape() == x.shape());
  for (size_t i = 0; i < x.numel(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("conv2d stride-2 chain 256 -> 16") {
  Graph g = Graph::inference();
  Rng rng(11);
  Tensor x = random_tensor(Shape{1, 3, 256, 256}, rng, 0.0, 1.0);
  const size_t chans[5] = {3, 2, 2, 2, 4};
  for (int k = 0; k < 4; ++k) {
    Tensor w = random_tensor(Shape{chans[k + 1], chans[k], 5, 5}, rng, -0.1, 0.1);
    x = ops::conv2d(g, x, w, Tensor{}, 2, 2);
  }
  CHECK(x.shape() == Shape{1, 4, 16, 16});
}

TEST_CASE("conv_transpose2d is the exact adjoint of conv2d") {
  Rng rng(23);
  Graph g = Graph::inference();
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = random_tensor(Shape{1, 3, 8, 8}, rng);
    Tensor w = random_tensor(Shape{4, 3, 5, 5}, rng);
    Tensor cx = ops::conv2d(g, x, w, Tensor{}, 2, 2);
    Tensor y = random_tensor(cx.shape(), rng);
    Tensor ty = ops::conv_transpose2d(g, y, w, Tensor{}, 2, 2, 1);
    REQUIRE(ty.shape() == x.shape());
    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < cx.numel(); ++i) lhs += cx.values()[i] * y.values()[i];
    for (size_t i = 0; i < x.numel(); ++i) rhs += x.values()[i] * ty.values()[i];
    CHECK(rel_err(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("conv_transpose2d shapes and Dirac identity") {
  Graph g = Graph::inference();
  Rng rng(31);
  SUBCASE("16 -> 256 chain") {
    Tensor x = random_tensor(Shape{1, 4, 16, 16}, rng);
    const size_t chans[5] = {4, 2, 2, 2, 3};
    for (int k = 0; k < 4; ++k) {
      Tensor w = random_tensor(Shape{chans[k], chans[k + 1], 5, 5}, rng, -0.1, 0.1);
      x = ops::conv_transpose2d(g, x, w, Tensor{}, 2, 2, 1);
    }
    CHECK(x.shape() == Shape{1, 3, 256, 256});
  }
  SUBCASE("Dirac stride 1") {
    Tensor x = random_tensor(Shape{1, 1, 6, 5}, rng);
    Tensor dirac = Tensor::zeros(Shape{1, 1, 3, 3});
    dirac.values()[4] = 1.0;
    Tensor y = ops::conv_transpose2d(g, x, dirac, Tensor{}, 1, 1, 0);
    REQUIRE(y.shape() == x.shape());
    for (size_t i = 0; i < x.numel(); ++i)
      CHECK(y.values()[i] == x.values()[i]);
  }
}

TEST_CASE("dense_channelwise identity, zero map, parameter count") {
  Graph g = Graph::inference();
  Rng rng(5);
  Tensor x = random_tensor(Shape{2, 3, 4, 4}, rng);
  Tensor eye = Tensor::zeros(Shape{3, 3, 1, 1});
  for (int i = 0; i < 3; ++i) eye.values()[i * 3 + i] = 1.0;
  Tensor y = ops::dense_channelwise(g, x, eye, Tensor{});
  for (size_t i = 0; i < x.numel(); ++i) CHECK(y.values()[i] == x.values()[i]);

  Tensor zero_w = Tensor::zeros(Shape{3, 3, 1, 1});
  Tensor b = Tensor::zeros(Shape{1, 3, 1, 1});
  b.values()[0] = 1.0;
  b.values()[1] = -2.0;
  b.values()[2] = 0.5;
  Tensor yb = ops::dense_channelwise(g, x, zero_w, b);
  for (size_t c = 0; c < 3; ++c) {
    for (size_t i = 0; i < 16; ++i) {
      CHECK(yb.at(0, c, i / 4, i % 4) == b.values()[c]);
    }
  }

  // a 192-channel mixing map carries 192^2 + 192 learnable scalars
  const size_t c192 = 192;
  CHECK(c192 * c192 + c192 == 37056);
}

TEST_CASE("elementwise values and derivatives") {
  Graph g = Graph::inference();
  Tensor zero = Tensor::scalar(0.0);
  CHECK(ops::cos(g, zero).item() == 1.0);
  CHECK(ops::tanh(g, zero).item() == 0.0);
  Tensor big = Tensor::from_vector(Shape{1, 1, 1, 2}, {50.0, -50.0});
  CHECK(std::fabs(ops::tanh(g, big).values()[0] - 1.0) < 1e-12);
  CHECK(std::fabs(ops::tanh(g, big).values()[1] + 1.0) < 1e-12);

  // d/dx cos at pi/2 = -1
  Graph gr;
  Tensor x = Tensor::scalar(kPi / 2.0);
  x.set_requires_grad(true);
  Tensor loss = ops::sum_all(gr, ops::cos(gr, x));
  gr.backward(loss);
  CHECK(rel_err(x.grad()[0], -1.0) < 1e-12);

  Graph g2;
  auto loss_fn = [&](Graph& gg) { return ops::sum_all(gg, ops::cos(gg, x)); };
  CHECK(testsup::fd_check_all(loss_fn, {x}) < 1e-6);
}

TEST_CASE("elementwise domain errors") {
  Graph g = Graph::inference();
  Tensor neg = Tensor::scalar(-1.0);
  Tensor zero = Tensor::scalar(0.0);
  CHECK_THROWS_AS(ops::sqrt(g, neg), NumericError);
  CHECK_THROWS_AS(ops::log(g, zero), NumericError);
  CHECK_THROWS_AS(ops::reciprocal(g, zero), NumericError);
  CHECK_THROWS_AS(ops::pow_scalar(g, neg, 0.5), NumericError);
}

TEST_CASE("backward basics") {
  SUBCASE("sum gives ones") {
    Graph g;
    Rng rng(3);
    Tensor x = random_tensor(Shape{1, 2, 3, 3}, rng, -1, 1, true);
    Tensor loss = ops::sum_all(g, x);
    g.backward(loss);
    for (double v : x.grad()) CHECK(v == 1.0);
  }
  SUBCASE("sum of squares") {
    Graph g;
    Tensor x = Tensor::from_vector(Shape{1, 1, 1, 3}, {1.0, 2.0, 3.0}, true);
    Tensor loss = ops::sum_all(g, ops::square(g, x));
    g.backward(loss);
    CHECK(x.grad()[0] == 2.0);
    CHECK(x.grad()[1] == 4.0);
    CHECK(x.grad()[2] == 6.0);
  }
  SUBCASE("repeated backward rejected") {
    Graph g;
    Tensor x = Tensor::from_vector(Shape{1, 1, 1, 1}, {2.0}, true);
    Tensor loss = ops::sum_all(g, x);
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), ConfigError);
    g.reset();
  }
  SUBCASE("non-scalar loss rejected") {
    Graph g;
    Tensor x = Tensor::from_vector(Shape{1, 1, 1, 2}, {1.0, 2.0}, true);
    Tensor y = ops::square(g, x);
    CHECK_THROWS_AS(g.backward(y), ConfigError);
  }
}

TEST_CASE("composite conv + gdn + cos gradient matches finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor x = random_tensor(Shape{1, 2, 4, 4}, rng, -1, 1, true);
    Tensor w = random_tensor(Shape{3, 2, 3, 3}, rng, -0.5, 0.5, true);
    Tensor b = random_tensor(Shape{1, 3, 1, 1}, rng, -0.2, 0.2, true);
    GdnParams gdn = GdnParams::make(3, false);
    for (double& v : gdn.gamma_raw.values()) v = rng.uniform(0.05, 0.5);

    auto loss_fn = [&](Graph& g) {
      Tensor h = ops::conv2d(g, x, w, b, 1, 1);
      h = gdn_forward(g, h, gdn);
      return ops::sum_all(g, ops::cos(g, h));
    };
    std::vector<Tensor> all = {x, w, b, gdn.beta_raw, gdn.gamma_raw};
    CHECK(testsup::fd_check_all(loss_fn, all) < 1e-4);
  }
}

TEST_CASE("broadcast binary ops and their reduction gradients") {
  Rng rng(55);
  Tensor x = random_tensor(Shape{2, 3, 2, 2}, rng, -1, 1, true);
  Tensor v = random_tensor(Shape{1, 3, 1, 1}, rng, -1, 1, true);
  Graph g = Graph::inference();
  Tensor y = ops::add(g, x, v);
  for (size_t b = 0; b < 2; ++b)
    for (size_t c = 0; c < 3; ++c)
      for (size_t i = 0; i < 4; ++i)
        CHECK(y.at(b, c, i / 2, i % 2) ==
              x.at(b, c, i / 2, i % 2) + v.values()[c]);

  auto loss_fn = [&](Graph& gg) {
    return ops::sum_all(gg, ops::square(gg, ops::mul(gg, x, v)));
  };
  CHECK(testsup::fd_check_all(loss_fn, {x, v}) < 1e-4);
  CHECK_THROWS_AS(ops::add(g, x, random_tensor(Shape{1, 2, 1, 1}, rng)),
                  ConfigError);
}

TEST_CASE("adam steps") {
  SUBCASE("first step moves by about lr") {
    Tensor p = Tensor::from_vector(Shape{1, 1, 1, 1}, {1.0}, true);
    p.grad_mut()[0] = 1.0;
    AdamState adam({p});
    adam.step({p}, 1e-4);
    CHECK(rel_err(p.values()[0], 1.0 - 1e-4) < 1e-6);
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from_vector(Shape{1, 1, 1, 1}, {0.7}, true);
    p.grad_mut()[0] = 0.0;
    AdamState adam({p});
    adam.step({p}, 1e-2);
    CHECK(p.values()[0] == 0.7);
  }
  SUBCASE("constant gradient gives monotone motion") {
    Tensor p = Tensor::from_vector(Shape{1, 1, 1, 1}, {0.0}, true);
    AdamState adam({p});
    double prev = 0.0;
    for (int i = 0; i < 2; ++i) {
      p.zero_grad();
      p.grad_mut()[0] = 2.5;
      adam.step({p}, 1e-3);
      CHECK(p.values()[0] < prev);
      prev = p.values()[0];
    }
  }
}

TEST_CASE("global norm clipping") {
  SUBCASE("below threshold unchanged") {
    Tensor p = Tensor::from_vector(Shape{1, 1, 1, 2}, {0.0, 0.0}, true);
    p.grad_mut()[0] = 0.3;
    p.grad_mut()[1] = 0.4;
    const double norm = clip_global_norm({p}, 1.0);
    CHECK(norm == doctest::Approx(0.5));
    CHECK(p.grad()[0] == 0.3);
    CHECK(p.grad()[1] == 0.4);
  }
  SUBCASE("scaled exactly to the threshold") {
    Tensor p = Tensor::from_vector(Shape{1, 1, 1, 2}, {0.0, 0.0}, true);
    p.grad_mut()[0] = 3.0;
    p.grad_mut()[1] = 4.0;
    Tensor q = Tensor::from_vector(Shape{1, 1, 1, 1}, {0.0}, true);
    q.grad_mut()[0] = 4.0;  // global norm sqrt(9+16+16) = sqrt(41) > 1
    const double pre = clip_global_norm({p, q}, 1.0);
    CHECK(pre == doctest::Approx(std::sqrt(41.0)));
    double post = 0.0;
    for (double v : p.grad()) post += v * v;
    for (double v : q.grad()) post += v * v;
    CHECK(std::fabs(std::sqrt(post) - 1.0) < 1e-12);
  }
  SUBCASE("[3,4] at threshold 1 becomes [0.6,0.8]") {
    Tensor p = Tensor::from_vector(Shape{1, 1, 1, 2}, {0.0, 0.0}, true);
    p.grad_mut()[0] = 3.0;
    p.grad_mut()[1] = 4.0;
    clip_global_norm({p}, 1.0);
    CHECK(rel_err(p.grad()[0], 0.6) < 1e-12);
    CHECK(rel_err(p.grad()[1], 0.8) < 1e-12);
  }
}

TEST_CASE("deterministic forward and backward under a fixed seed") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Tensor x = random_tensor(Shape{2, 3, 8, 8}, rng, -1, 1, true);
    Tensor w = random_tensor(Shape{4, 3, 3, 3}, rng, -0.5, 0.5, true);
    Graph g;
    Tensor loss = ops::sum_all(g, ops::tanh(g, ops::conv2d(g, x, w, Tensor{}, 2, 1)));
    g.backward(loss);
    std::vector<double> out(w.grad().begin(), w.grad().end());
    out.push_back(loss.item());
    return out;
  };
  CHECK(run(99) == run(99));
  CHECK(run(99) != run(100));
}
