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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scorekit/rng.hpp"
#include "scorekit/schedule.hpp"

namespace scorekit {

/// Estimate of grad_x log p_sigma(x | c). Implementations must be safe to call
/// concurrently from several threads.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;

  /// Writes S(x, c, sigma) into `out` (same length as x). `c` may be empty.
  virtual void evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                        std::span<double> out) const = 0;

  std::vector<double> operator()(std::span<const double> x, std::span<const double> c, double sigma) const {
    std::vector<double> out(x.size());
    evaluate(x, c, sigma, out);
    return out;
  }
};

/// Adapts a callable to ScoreFunction.
class LambdaScore final : public ScoreFunction {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<const double>, double, std::span<double>)>;
  explicit LambdaScore(Fn fn) : fn_(std::move(fn)) {}
  void evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                std::span<double> out) const override {
    fn_(x, c, sigma, out);
  }

 private:
  Fn fn_;
};

struct Perturbation {
  std::vector<double> x_t;
  std::vector<double> z;
};

/// x_t = x0 + sigma z with z ~ N(0, I).
Perturbation perturb(std::span<const double> x0, double sigma, Rng& rng);

/// The random draws behind one term of the score-matching expectation.
struct DsmDraw {
  double t = 0.0;
  double sigma = 0.0;
  std::vector<double> z;
};

/// t ~ U(0, 1), sigma = sigma(t), z ~ N(0, I) of length `dim`.
DsmDraw draw_dsm(std::size_t dim, const NoiseSchedule& schedule, Rng& rng);

/// 0.5 * || sigma S(x0 + sigma z, c, sigma) + z ||^2 for a fixed draw.
double dsm_loss_at(const ScoreFunction& score, std::span<const double> x0, std::span<const double> c,
                   const DsmDraw& draw);

/// Single-sample estimator of the denoising score-matching loss with lambda_t = sigma_t^2.
/// Batch averaging is left to the caller.
double dsm_loss(const ScoreFunction& score, std::span<const double> x0, std::span<const double> c,
                const NoiseSchedule& schedule, Rng& rng);

/// Empirically denoised sample: x + sigma0^2 S(x, c, sigma0).
std::vector<double> denoise_final(const ScoreFunction& score, std::span<const double> x,
                                  std::span<const double> c, double sigma0);

/// Consistent annealed Langevin sampling.
///
/// x_{t_N} = sigma_{t_N} z, then for n = N..2
///   x_{t_{n-1}} = x_{t_n} + eta sigma_{t_n}^2 S(x_{t_n}, c, sigma_{t_n}) + beta sigma_{t_{n-1}} z,
/// followed by denoise_final at sigma_{t_1}. Throws NumericError on a non-finite iterate.
std::vector<double> langevin_sample(const ScoreFunction& score, std::span<const double> c,
                                    const SamplingPlan& plan, std::size_t dim, Rng& rng);

/// Average of `n_realizations` samples sharing `c`; realization i uses rng.split(i).
std::vector<double> enhance_expectation(const ScoreFunction& score, std::span<const double> c,
                                        const SamplingPlan& plan, std::size_t dim, int n_realizations,
                                        const Rng& rng);

inline constexpr int kDefaultRealizations = 10;

}  // namespace scorekit
