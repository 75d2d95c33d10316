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

#include "scorekit/error.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/schedule.hpp"

using namespace scorekit;

TEST_CASE("sigma endpoints are exact and the schedule is geometric") {
  const NoiseSchedule s;
  CHECK(s.sigma_at(0.0) == kDefaultSigmaMin);
  CHECK(s.sigma_at(1.0) == kDefaultSigmaMax);
  // Midpoint of a geometric schedule is the geometric mean.
  CHECK(s.sigma_at(0.5) == doctest::Approx(std::sqrt(kDefaultSigmaMin * kDefaultSigmaMax)).epsilon(1e-14));
  const NoiseSchedule unit(0.5, 8.0);
  CHECK(unit.sigma_at(0.25) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sigma is strictly increasing and log-linear in t") {
  const NoiseSchedule s;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    if (a == b) continue;
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(s.sigma_at(lo) < s.sigma_at(hi));
    const long double expect =
        std::exp((1.0L - lo) * std::log(static_cast<long double>(kDefaultSigmaMin)) +
                 lo * std::log(static_cast<long double>(kDefaultSigmaMax)));
    CHECK(s.sigma_at(lo) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-13));
  }
}

TEST_CASE("sigma_at rejects t outside [0, 1]") {
  const NoiseSchedule s;
  CHECK_THROWS_AS(s.sigma_at(-1e-9), DomainError);
  CHECK_THROWS_AS(s.sigma_at(1.0 + 1e-9), DomainError);
  CHECK_THROWS_AS(s.sigma_at(std::nan("")), DomainError);
}

TEST_CASE("invalid schedules are rejected") {
  CHECK_THROWS_AS(NoiseSchedule(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule(2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule(1.0, 1.0), ConfigError);
}

TEST_CASE("gamma^(N-1) spans the schedule") {
  const NoiseSchedule s;
  for (int n : {2, 8, 64, 1000}) {
    const auto plan = make_plan(s, n, kDefaultEpsilon);
    const double ratio = std::pow(plan.gamma, n - 1);
    CHECK(std::abs(ratio / (kDefaultSigmaMin / kDefaultSigmaMax) - 1.0) < 1e-12);
    CHECK(plan.sigma(1) == kDefaultSigmaMin);
    CHECK(plan.sigma(n) == kDefaultSigmaMax);
    for (int k = 1; k < n; ++k) CHECK(plan.sigma(k) / plan.sigma(k + 1) == doctest::Approx(plan.gamma).epsilon(1e-12));
  }
}

TEST_CASE("epsilon = 1 gives deterministic annealing") {
  const auto plan = make_plan(NoiseSchedule(), 64, 1.0);
  CHECK(plan.beta == 0.0);
  CHECK(plan.eta == doctest::Approx(1.0 - plan.gamma).epsilon(1e-15));
}

TEST_CASE("step constants keep the noise level on schedule") {
  // For a Gaussian iterate the variance after one step is
  // (1 - eta)^2 sigma_n^2 + beta^2 sigma_{n-1}^2, which must equal sigma_{n-1}^2.
  for (double eps : {1.0, 1.5, 2.3, 3.0, 10.0}) {
    const auto plan = make_plan(NoiseSchedule(), 16, eps);
    CHECK(plan.eta == doctest::Approx(1.0 - std::pow(plan.gamma, eps)).epsilon(1e-14));
    for (int n = 16; n >= 2; --n) {
      const double sn = plan.sigma(n), sm = plan.sigma(n - 1);
      const double var = std::pow(1.0 - plan.eta, 2) * sn * sn + plan.beta * plan.beta * sm * sm;
      CHECK(var == doctest::Approx(sm * sm).epsilon(1e-12));
    }
  }
}

TEST_CASE("plan arguments are validated") {
  CHECK_THROWS_AS(make_plan(NoiseSchedule(), 1, 2.3), ConfigError);
  CHECK_THROWS_AS(make_plan(NoiseSchedule(), 8, 0.99), ConfigError);
  const auto one = single_step_plan(NoiseSchedule());
  CHECK(one.n_steps == 1);
  CHECK(one.sigma(1) == kDefaultSigmaMax);
}

TEST_CASE("scale check flags badly scaled data") {
  const NoiseSchedule s;
  CHECK_FALSE(s.scale_warning(0.01).has_value());
  CHECK(s.scale_warning(1.0).has_value());
  CHECK(s.scale_warning(1e-8).has_value());
  CHECK(s.scale_warning(100.0).has_value());
}

TEST_CASE("data-scaled schedule satisfies the scale constraint") {
  for (double var : {1e-3, 0.05, 1.0, 3.46, 400.0}) {
    const auto s = NoiseSchedule::for_data(var);
    CHECK_FALSE(s.scale_warning(var).has_value());
    CHECK(s.sigma_min() <= kDefaultSigmaMin);
    CHECK(s.sigma_max() >= kDefaultSigmaMax);
  }
  // Waveform-scale data keeps the default constants.
  const auto speech = NoiseSchedule::for_data(0.01);
  CHECK(speech.sigma_min() == kDefaultSigmaMin);
  CHECK(speech.sigma_max() == kDefaultSigmaMax);
  CHECK(NoiseSchedule::for_data(4.0).sigma_max() == doctest::Approx(20.0).epsilon(1e-15));
  CHECK_THROWS_AS(NoiseSchedule::for_data(0.0), ConfigError);
}
