// Copyright 2026 The scorekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gradcheck.hpp"
#include "scorekit/error.hpp"
#include "scorekit/mdn.hpp"
#include "scorekit/oracle.hpp"

using namespace scorekit;

namespace {

// Direct product-of-densities summation, no log-space tricks.
double naive_nll(const MdnParams& p, const std::vector<double>& y) {
  double z = 0.0;
  for (double l : p.logits) z += std::exp(l);
  double total = 0.0;
  for (std::size_t i = 0; i < p.k; ++i) {
    double dens = std::exp(p.logits[i]) / z;
    for (std::size_t j = 0; j < p.d; ++j) {
      const double s = std::exp(p.log_scales[i * p.d + j]);
      const double u = (y[j] - p.means[i * p.d + j]) / s;
      dens *= std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * std::numbers::pi));
    }
    total += dens;
  }
  return -std::log(total);
}

MdnParams one_component(double m, double log_s) {
  MdnParams p(1, 1);
  p.means[0] = m;
  p.log_scales[0] = log_s;
  return p;
}

}  // namespace

TEST_CASE("standard normal at its mode") {
  const auto p = one_component(0.4, 0.0);
  CHECK(mdn_nll(p, std::vector<double>{0.4}) == doctest::Approx(0.918938533204672742).epsilon(1e-15));
}

TEST_CASE("log-space NLL matches naive summation") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::random_mdn(rng, 3, 2);
    std::vector<double> y{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const double ref = naive_nll(p, y);
    CHECK(std::abs(mdn_nll(p, y) - ref) / std::abs(ref) < 1e-10);
  }
}

TEST_CASE("log-space NLL stays finite where the naive sum underflows") {
  auto p = one_component(0.0, std::log(1e-3));
  const std::vector<double> y{1.0};
  CHECK(std::isinf(naive_nll(p, y)));
  const double nll = mdn_nll(p, y);
  CHECK(nll == doctest::Approx(0.5e6 + std::log(1e-3) + 0.918938533204672742));
}

TEST_CASE("splitting a component in two halves leaves the NLL unchanged") {
  Rng rng(2);
  auto p = testing::random_mdn(rng, 2, 2);
  MdnParams q(3, 2);
  q.logits = {p.logits[0], p.logits[1] - std::log(2.0), p.logits[1] - std::log(2.0)};
  q.means = {p.means[0], p.means[1], p.means[2], p.means[3], p.means[2], p.means[3]};
  q.log_scales = {p.log_scales[0], p.log_scales[1], p.log_scales[2], p.log_scales[3], p.log_scales[2],
                  p.log_scales[3]};
  const std::vector<double> y{0.3, -1.1};
  CHECK(mdn_nll(q, y) == doctest::Approx(mdn_nll(p, y)).epsilon(1e-13));
}

TEST_CASE("NLL is invariant under component permutation") {
  Rng rng(3);
  const auto p = testing::random_mdn(rng, 3, 2);
  MdnParams q(3, 2);
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 3; ++i) {
    q.logits[i] = p.logits[perm[i]];
    for (std::size_t j = 0; j < 2; ++j) {
      q.means[i * 2 + j] = p.means[perm[i] * 2 + j];
      q.log_scales[i * 2 + j] = p.log_scales[perm[i] * 2 + j];
    }
  }
  const std::vector<double> y{-0.5, 0.8};
  CHECK(mdn_nll(q, y) == doctest::Approx(mdn_nll(p, y)).epsilon(1e-14));
}

TEST_CASE("weights sum to one and scales are positive") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testing::random_mdn(rng, 4, 3);
    p.logits[0] = 700.0;
    p.log_scales[1] = -50.0;
    double sum = 0.0;
    for (double a : p.weights()) sum += a;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 3; ++j) CHECK(p.scale(i, j) > 0.0);
    }
  }
}

TEST_CASE("NLL gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = testing::check_mdn_gradient(seed);
    INFO("seed " << seed << " " << r.description);
    CHECK(r.worst < 1e-4);
  }
}

TEST_CASE("dimension mismatches are config errors") {
  MdnParams p(2, 2);
  CHECK_THROWS_AS(mdn_nll(p, std::vector<double>{1.0}), ConfigError);
  p.means.pop_back();
  CHECK_THROWS_AS(mdn_nll(p, std::vector<double>{1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(mdn_nll(MdnParams(0, 1), std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("mixture mean") {
  const auto single = one_component(1.7, 0.3);
  CHECK(mdn_mean(single)[0] == 1.7);
  MdnParams sym(2, 1);
  sym.means = {-1.3, 1.3};
  CHECK(mdn_mean(sym)[0] == doctest::Approx(0.0).scale(1.0));

  Rng rng(5);
  const auto p = testing::random_mdn(rng, 3, 1);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = mdn_sample(p, rng)[0];
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - mdn_mean(p)[0]) < 3.0 * se);
}

TEST_CASE("sampling follows the mixture weights and scales") {
  Rng rng(6);
  MdnParams hot(3, 1);
  hot.logits = {-800.0, 0.0, -800.0};
  hot.means = {-10.0, 4.0, 10.0};
  hot.log_scales = {0.0, std::log(0.1), 0.0};
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(mdn_sample(hot, rng)[0] - 4.0) < 1.0);

  MdnParams p(3, 1);
  p.logits = {std::log(0.2), std::log(0.5), std::log(0.3)};
  p.means = {-20.0, 0.0, 20.0};
  const int n = 10000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const double v = mdn_sample(p, rng)[0];
    ++counts[v < -10.0 ? 0 : (v > 10.0 ? 2 : 1)];
  }
  const double alpha[3] = {0.2, 0.5, 0.3};
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(counts[i] - n * alpha[i]) < 3.0 * std::sqrt(n * alpha[i] * (1.0 - alpha[i])));
  }

  const auto single = one_component(0.0, std::log(1.5));
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = mdn_sample(single, rng)[0];
    s2 += v * v;
  }
  // chi-square variance of the sample second moment: 2 s^4 / n
  CHECK(std::abs(s2 / n - 2.25) < 3.0 * std::sqrt(2.0 * 2.25 * 2.25 / n));
}

TEST_CASE("group loss averages frames and totals add up") {
  TargetGroup g{"mel", 1, {0.5}, {one_component(0.0, 0.2)}};
  CHECK(group_loss(g) == mdn_nll(g.params[0], std::vector<double>{0.5}));
  TargetGroup twice{"mel", 1, {0.5, 0.5}, {one_component(0.0, 0.2), one_component(0.0, 0.2)}};
  CHECK(group_loss(twice) == doctest::Approx(group_loss(g)).epsilon(1e-15));

  double prev = 1e300;
  for (double s : {1.0, 0.1, 0.01, 1e-3}) {
    TargetGroup sharp{"loudness", 1, {2.0}, {one_component(2.0, std::log(s))}};
    const double nll = group_loss(sharp);
    CHECK(nll < prev);
    prev = nll;
  }
  CHECK(prev < 0.0);

  const std::vector<TargetGroup> features{g, twice};
  CHECK(total_auxiliary_loss(g, features) == doctest::Approx(3.0 * group_loss(g)));
  CHECK(total_objective(1.25, 2.0) == 3.25);

  TargetGroup mismatch{"vad", 1, {0.5, 1.0}, {one_component(0.0, 0.0)}};
  CHECK_THROWS_AS(group_loss(mismatch), ConfigError);
  TargetGroup empty{"vad", 1, {}, {}};
  CHECK_THROWS_AS(group_loss(empty), ConfigError);
}

TEST_CASE("three-component fit recovers a two-component density") {
  const auto truth = GmmPrior::scalar({0.4, 0.6}, {-1.5, 1.0}, {0.25, 0.49});
  Rng rng(7);
  std::vector<double> data(4000);
  for (auto& v : data) truth.sample(rng, std::span<double>(&v, 1));
  const auto fit = fit_mdn(data, 1, 3);
  double err = 0.0;
  const double lo = -5.0, hi = 5.0;
  const int points = 2001;
  const double h = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double x = lo + h * i;
    const double p = std::exp(truth.log_density(std::span<const double>(&x, 1), 0.0));
    err += std::abs(mdn_density(fit, std::vector<double>{x}) - p) * h;
  }
  MESSAGE("integrated absolute density error " << err);
  CHECK(err < 0.05);
}
