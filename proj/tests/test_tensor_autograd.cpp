// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>

#include "doctest.h"
#include "artflow/nn/ops.hpp"
#include "artflow/rng.hpp"

using namespace artflow;
using namespace artflow::nn;

namespace {

Tensor<double> randn(std::vector<int> shape, std::uint64_t seed, double s = 1.0) {
  Rng rng(seed);
  Tensor<double> t(std::move(shape));
  for (double& v : t.values()) v = s * rng.normal();
  return t;
}

// Central differences against the tape on every coordinate of every input.
void check_grad(const std::function<Var<double>(const std::vector<Var<double>>&)>& f,
                const std::vector<Tensor<double>>& inputs, double tol = 1e-6) {
  std::vector<Var<double>> leaves;
  for (const auto& t : inputs) leaves.push_back(Var<double>::leaf(t));
  backward(f(leaves));
  const double h = 1e-6;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double d) {
        std::vector<Var<double>> xs;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          Tensor<double> t = inputs[j];
          if (j == k) t[i] += d;
          xs.push_back(Var<double>::constant(t));
        }
        return f(xs).value()[0];
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      const double g = leaves[k].grad()[i];
      CHECK(std::abs(g - fd) <= tol * std::max(1.0, std::abs(fd)));
    }
  }
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor<float> t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(t.reshaped({4, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>{1, 2, 3}), std::invalid_argument);
  CHECK(reinterpret_cast<std::uintptr_t>(t.data()) % 64 == 0);
}

TEST_CASE("elementwise and reduction gradients") {
  const auto a = randn({2, 5}, 1), b = randn({2, 5}, 2);
  check_grad([](const auto& x) { return sum(mul(x[0], x[1])); }, {a, b});
  check_grad([](const auto& x) { return mean(tanh(sub(x[0], x[1]))); }, {a, b});
  check_grad([](const auto& x) { return sum(leaky_relu(x[0], 0.2)); }, {a});
  check_grad([](const auto& x) { return sum(exp(scale(x[0], 0.5))); }, {a});
  check_grad([](const auto& x) { return l1_loss(x[0], x[1]); }, {a, b});
  check_grad([](const auto& x) { return kl_divergence(x[0], x[1]); }, {a, b});
  check_grad([](const auto& x) { return add(hinge_real(x[0]), hinge_fake(x[1])); }, {a, b});
  check_grad([](const auto& x) { return sum(mul(slice_cols(x[0], 1, 3), slice_cols(x[1], 2, 3))); }, {a, b});
}

TEST_CASE("convolution and linear gradients") {
  const auto x = randn({2, 3, 6, 6}, 3);
  const auto w = randn({4, 3, 3, 3}, 4, 0.3);
  const auto bias = randn({4}, 5);
  for (int stride : {1, 2}) {
    check_grad([stride](const auto& v) { return sum(tanh(conv2d(v[0], v[1], v[2], stride, 1))); }, {x, w, bias});
  }
  const auto xl = randn({3, 5}, 6), wl = randn({4, 5}, 7), bl = randn({4}, 8);
  check_grad([](const auto& v) { return sum(tanh(linear(v[0], v[1], v[2]))); }, {xl, wl, bl});
}

TEST_CASE("normalization, resampling and pooling gradients") {
  const auto x = randn({2, 3, 4, 4}, 9);
  const auto p = randn({2, 6}, 10);
  const auto w = randn({2, 3, 4, 4}, 11);
  check_grad([&](const auto& v) { return sum(mul(instance_norm(v[0]), Var<double>::constant(w))); }, {x});
  check_grad([&](const auto& v) { return sum(mul(adain(v[0], v[1], 0), Var<double>::constant(w))); }, {x, p});
  check_grad([](const auto& v) { return sum(tanh(upsample_nearest2x(v[0]))); }, {x});
  check_grad([](const auto& v) { return sum(tanh(avg_pool2x(v[0]))); }, {x});
  check_grad([](const auto& v) { return sum(tanh(global_avg_pool(v[0]))); }, {x});
  check_grad([](const auto& v) { return sum(tanh(concat_channels(v[0], v[1]))); }, {x, w});
}

TEST_CASE("gradients accumulate across shared uses") {
  auto a = Var<double>::leaf(Tensor<double>({1}, 3.0));
  backward(add(mul(a, a), a));
  CHECK(a.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("constants receive no gradient") {
  auto a = Var<double>::leaf(Tensor<double>({2}, 1.0));
  auto c = Var<double>::constant(Tensor<double>({2}, 2.0));
  auto loss = sum(mul(a, c));
  CHECK(loss.requires_grad());
  CHECK_FALSE(c.requires_grad());
  backward(loss);
  CHECK(a.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("KL divergence matches the diagonal Gaussian closed form") {
  Tensor<double> mu({1, 4}, 0.0), logvar({1, 4}, 0.0);
  mu[0] = 1.0;
  CHECK(kl_divergence(Var<double>::constant(mu), Var<double>::constant(logvar)).item() == doctest::Approx(0.5));
  const auto m = randn({3, 5}, 12), lv = randn({3, 5}, 13, 0.5);
  double expected = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) expected += 0.5 * (m[i] * m[i] + std::exp(lv[i]) - lv[i] - 1.0);
  CHECK(kl_divergence(Var<double>::constant(m), Var<double>::constant(lv)).item() ==
        doctest::Approx(expected / 3.0).epsilon(1e-6));
}
