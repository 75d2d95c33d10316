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

#include "scorekit/error.hpp"
#include "scorekit/oracle.hpp"
#include "scorekit/rng.hpp"

using namespace scorekit;

namespace {

// Plain-sum log density in long double, independent of the log-sum-exp path.
long double naive_log_density(const std::vector<double>& w, const std::vector<double>& m, const std::vector<double>& v,
                              std::size_t d, const std::vector<double>& x, double sigma) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) {
    long double log_term = std::log(static_cast<long double>(w[i]));
    for (std::size_t j = 0; j < d; ++j) {
      const long double var = static_cast<long double>(v[i * d + j]) + static_cast<long double>(sigma) * sigma;
      const long double r = x[j] - m[i * d + j];
      log_term += -0.5L * std::log(2.0L * std::numbers::pi_v<long double> * var) - 0.5L * r * r / var;
    }
    total += std::exp(log_term);
  }
  return std::log(total);
}

GmmPrior three_component() { return GmmPrior::scalar({0.2, 0.5, 0.3}, {-3.0, 0.5, 2.0}, {0.4, 0.1, 1.5}); }

}  // namespace

TEST_CASE("single Gaussian score is -x / (s^2 + sigma^2)") {
  const auto g = GmmPrior::gaussian(0.0, 2.0);
  for (double sigma : {0.0, 0.1, 1.0, 5.0}) {
    for (double x : {-3.0, -0.5, 0.0, 1.7}) {
      const std::vector<double> xv{x};
      CHECK(g.perturbed_score(xv, sigma)[0] == doctest::Approx(-x / (2.0 + sigma * sigma)).epsilon(1e-14));
    }
  }
}

TEST_CASE("symmetric mixture has zero score at the origin") {
  const auto g = GmmPrior::scalar({0.5, 0.5}, {-1.5, 1.5}, {0.3, 0.3});
  const std::vector<double> zero{0.0};
  for (double sigma : {1e-3, 0.05, 1.0, 5.0}) CHECK(std::abs(g.perturbed_score(zero, sigma)[0]) < 1e-15);
}

TEST_CASE("log density matches closed forms") {
  const auto std_normal = GmmPrior::gaussian(0.0, 1.0);
  const std::vector<double> zero{0.0}, two{2.0};
  CHECK(std_normal.log_density(zero, 0.0) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  const double expect = -0.5 * std::log(2.0 * std::numbers::pi * 4.0) - 0.5 * 4.0 / 4.0;
  CHECK(std_normal.log_density(two, std::sqrt(3.0)) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("log density agrees with naive summation") {
  const std::vector<double> w{0.2, 0.5, 0.3}, m{-3.0, 0.5, 2.0}, v{0.4, 0.1, 1.5};
  const auto g = three_component();
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{rng.uniform(-5.0, 5.0)};
    const double sigma = std::exp(rng.uniform(std::log(5e-4), std::log(5.0)));
    const auto ref = static_cast<double>(naive_log_density(w, m, v, 1, x, sigma));
    CHECK(g.log_density(x, sigma) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("mixture density integrates to one") {
  const auto g = three_component();
  for (double sigma : {0.0, 0.3, 2.0}) {
    const double lo = -30.0, hi = 30.0;
    const int n = 200000;
    const double h = (hi - lo) / n;
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
      const std::vector<double> x{lo + h * i};
      total += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(g.log_density(x, sigma));
    }
    CHECK(std::abs(total * h - 1.0) < 1e-4);
  }
}

TEST_CASE("score is the gradient of the log density") {
  const auto g = three_component();
  Rng rng(5);
  for (double sigma : {5e-4, 0.05, 1.0, 5.0}) {
    for (int i = 0; i < 100; ++i) {
      const double x = rng.uniform(-4.0, 4.0);
      const double h = 1e-5 * std::max(1.0, std::sqrt(0.1 + sigma * sigma));
      const std::vector<double> xp{x + h}, xm{x - h}, x0{x};
      const double fd = (g.log_density(xp, sigma) - g.log_density(xm, sigma)) / (2.0 * h);
      const double s = g.perturbed_score(x0, sigma)[0];
      CHECK(std::abs(s - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("multivariate diagonal mixture score matches finite differences") {
  const std::vector<double> w{0.6, 0.4}, m{1.0, -1.0, 0.0, -2.0, 0.5, 1.0}, v{0.2, 0.5, 1.0, 0.3, 0.3, 0.7};
  const GmmPrior g(w, m, v, 3);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double sigma = 0.2;
    const auto s = g.perturbed_score(x, sigma);
    for (std::size_t j = 0; j < 3; ++j) {
      auto xp = x, xm = x;
      xp[j] += 1e-5;
      xm[j] -= 1e-5;
      const double fd = (g.log_density(xp, sigma) - g.log_density(xm, sigma)) / 2e-5;
      CHECK(s[j] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    CHECK(g.log_density(x, sigma) == doctest::Approx(static_cast<double>(naive_log_density(w, m, v, 3, x, sigma))).epsilon(1e-12));
  }
}

TEST_CASE("large sigma score approaches -x / sigma^2") {
  const auto g = three_component();
  const double sigma = 1e3 * 5.0;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-sigma, sigma)};
    const double s = g.perturbed_score(x, sigma)[0];
    // The residual is the mixture mean over sigma^2, bounded by max |mean|.
    CHECK(std::abs(s * sigma * sigma + x[0]) < 3.0 + 1e-6);
  }
}

TEST_CASE("shifting the means shifts the score field") {
  const auto g = three_component();
  const std::vector<double> delta{1.25};
  const auto shifted = g.shifted(delta);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform(-4.0, 4.0);
    const std::vector<double> xs{x}, back{x - delta[0]};
    CHECK(shifted.perturbed_score(xs, 0.3)[0] == doctest::Approx(g.perturbed_score(back, 0.3)[0]).epsilon(1e-12));
  }
}

TEST_CASE("responsibilities are a probability vector") {
  const auto g = three_component();
  const std::vector<double> x{0.7};
  const auto r = g.responsibilities(x, 0.1);
  double sum = 0.0;
  for (double v : r) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("invalid priors are rejected") {
  CHECK_THROWS_AS(GmmPrior::scalar({}, {}, {}), ConfigError);
  CHECK_THROWS_AS(GmmPrior::scalar({0.5, 0.4}, {0.0, 1.0}, {1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(GmmPrior::scalar({1.0}, {0.0}, {0.0}), ConfigError);
  CHECK_THROWS_AS(GmmPrior::scalar({1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}), ConfigError);
}

TEST_CASE("sampling reproduces the mixture moments") {
  const auto g = three_component();
  Rng rng(99);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> x(1);
  for (int i = 0; i < n; ++i) {
    g.sample(rng, x);
    s1 += x[0];
    s2 += x[0] * x[0];
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  const double se = std::sqrt(g.overall_variance(0) / n);
  CHECK(std::abs(mean - g.overall_mean(0)) < 4.0 * se);
  CHECK(var == doctest::Approx(g.overall_variance(0)).epsilon(0.02));
}

TEST_CASE("posterior given a noisy observation is Bayes' rule per component") {
  const auto prior = GmmPrior::scalar({0.3, 0.7}, {-2.0, 2.0}, {0.1, 0.1});
  const double y = 0.4, tau = 0.8;
  const auto post = posterior_given_observation(prior, y, tau);
  // Unnormalized posterior density p(x) N(y; x, tau^2) on a grid against the closed form.
  const std::vector<double> ys{y};
  for (double x = -4.0; x <= 4.0; x += 0.25) {
    const std::vector<double> xv{x};
    const double lik = -0.5 * std::log(2.0 * std::numbers::pi * tau * tau) - 0.5 * (y - x) * (y - x) / (tau * tau);
    const double evidence = prior.log_density(ys, tau);
    CHECK(post.log_density(xv, 0.0) == doctest::Approx(prior.log_density(xv, 0.0) + lik - evidence).epsilon(1e-10));
  }
}
