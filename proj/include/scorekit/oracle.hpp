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

#include <span>
#include <vector>

#include "scorekit/diffusion.hpp"
#include "scorekit/rng.hpp"

namespace scorekit {

/// Diagonal Gaussian mixture used as a data distribution with known perturbed score.
///
/// means and variances are stored component-major: entry (i, j) at i * dim + j.
class GmmPrior {
 public:
  GmmPrior(std::vector<double> weights, std::vector<double> means, std::vector<double> variances,
           std::size_t dim);

  /// One-dimensional mixture.
  static GmmPrior scalar(std::vector<double> weights, std::vector<double> means, std::vector<double> variances);
  static GmmPrior gaussian(double mean, double variance) { return scalar({1.0}, {mean}, {variance}); }

  std::size_t components() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& weights() const { return weights_; }
  double mean(std::size_t i, std::size_t j) const { return means_[i * dim_ + j]; }
  double variance(std::size_t i, std::size_t j) const { return variances_[i * dim_ + j]; }

  /// log p_sigma(x), where p_sigma is the mixture convolved with N(0, sigma^2 I).
  double log_density(std::span<const double> x, double sigma) const;

  /// grad_x log p_sigma(x), via log-sum-exp responsibilities.
  void perturbed_score(std::span<const double> x, double sigma, std::span<double> out) const;
  std::vector<double> perturbed_score(std::span<const double> x, double sigma) const;

  /// Posterior responsibilities of each component for x under p_sigma.
  std::vector<double> responsibilities(std::span<const double> x, double sigma) const;

  void sample(Rng& rng, std::span<double> out) const;

  /// Mixture mean and per-dimension variance (averaged over dimensions).
  double overall_mean(std::size_t j) const;
  double overall_variance(std::size_t j) const;
  /// E[x_j^2] averaged over dimensions.
  double overall_mean_square() const;

  GmmPrior shifted(std::span<const double> delta) const;
  GmmPrior scaled(double a) const;

 private:
  void component_log_terms(std::span<const double> x, double sigma2, std::span<double> out) const;

  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> means_;
  std::vector<double> variances_;
  std::size_t dim_;
};

/// Unconditional analytic score of a GmmPrior (ignores c).
class GmmScore final : public ScoreFunction {
 public:
  explicit GmmScore(GmmPrior prior) : prior_(std::move(prior)) {}
  void evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                std::span<double> out) const override;
  const GmmPrior& prior() const { return prior_; }

 private:
  GmmPrior prior_;
};

/// Posterior of a scalar mixture prior after observing y = x + N(0, noise_std^2).
GmmPrior posterior_given_observation(const GmmPrior& scalar_prior, double y, double noise_std);

/// Analytic conditional score for the toy denoising task: each coordinate of x is
/// drawn i.i.d. from `scalar_prior`, and c = x + noise_std * n.
class PosteriorScore final : public ScoreFunction {
 public:
  PosteriorScore(GmmPrior scalar_prior, double noise_std);
  void evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                std::span<double> out) const override;

 private:
  GmmPrior prior_;
  double noise_std_;
};

}  // namespace scorekit
