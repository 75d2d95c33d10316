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

#include "scorekit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double a : v) acc += std::exp(a - m);
  return m + std::log(acc);
}

}  // namespace

GmmPrior::GmmPrior(std::vector<double> weights, std::vector<double> means, std::vector<double> variances,
                   std::size_t dim)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)), dim_(dim) {
  if (weights_.empty()) throw ConfigError("GMM prior needs at least one component");
  if (dim_ == 0) throw ConfigError("GMM prior dimension must be >= 1");
  const std::size_t k = weights_.size();
  if (means_.size() != k * dim_ || variances_.size() != k * dim_) {
    throw ConfigError("GMM prior: means/variances must have components * dim entries");
  }
  for (double w : weights_) {
    if (!(w > 0.0)) throw ConfigError("GMM prior: weights must be positive");
  }
  for (double v : variances_) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("GMM prior: variances must be positive");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("GMM prior: weights must sum to 1");
  for (double& w : weights_) w /= total;
  log_weights_.resize(k);
  std::transform(weights_.begin(), weights_.end(), log_weights_.begin(), [](double w) { return std::log(w); });
}

GmmPrior GmmPrior::scalar(std::vector<double> weights, std::vector<double> means, std::vector<double> variances) {
  return GmmPrior(std::move(weights), std::move(means), std::move(variances), 1);
}

void GmmPrior::component_log_terms(std::span<const double> x, double sigma2, std::span<double> out) const {
  if (x.size() != dim_) throw ConfigError("GMM prior: dimension mismatch");
  for (std::size_t i = 0; i < components(); ++i) {
    double acc = log_weights_[i];
    for (std::size_t j = 0; j < dim_; ++j) {
      const double var = variances_[i * dim_ + j] + sigma2;
      const double d = x[j] - means_[i * dim_ + j];
      acc -= 0.5 * (kLog2Pi + std::log(var) + d * d / var);
    }
    out[i] = acc;
  }
}

double GmmPrior::log_density(std::span<const double> x, double sigma) const {
  if (!(sigma >= 0.0)) throw DomainError("log_density: sigma must be >= 0");
  std::vector<double> terms(components());
  component_log_terms(x, sigma * sigma, terms);
  return log_sum_exp(terms);
}

std::vector<double> GmmPrior::responsibilities(std::span<const double> x, double sigma) const {
  std::vector<double> r(components());
  component_log_terms(x, sigma * sigma, r);
  const double lse = log_sum_exp(r);
  for (double& v : r) v = std::exp(v - lse);
  return r;
}

void GmmPrior::perturbed_score(std::span<const double> x, double sigma, std::span<double> out) const {
  if (!(sigma >= 0.0)) throw DomainError("perturbed_score: sigma must be >= 0");
  const double sigma2 = sigma * sigma;
  const auto r = responsibilities(x, sigma);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < components(); ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      const double var = variances_[i * dim_ + j] + sigma2;
      out[j] -= r[i] * (x[j] - means_[i * dim_ + j]) / var;
    }
  }
}

std::vector<double> GmmPrior::perturbed_score(std::span<const double> x, double sigma) const {
  std::vector<double> out(dim_);
  perturbed_score(x, sigma, out);
  return out;
}

void GmmPrior::sample(Rng& rng, std::span<double> out) const {
  const std::size_t i = rng.categorical(weights_);
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] = means_[i * dim_ + j] + std::sqrt(variances_[i * dim_ + j]) * rng.normal();
  }
}

double GmmPrior::overall_mean(std::size_t j) const {
  double m = 0.0;
  for (std::size_t i = 0; i < components(); ++i) m += weights_[i] * means_[i * dim_ + j];
  return m;
}

double GmmPrior::overall_variance(std::size_t j) const {
  const double m = overall_mean(j);
  double v = 0.0;
  for (std::size_t i = 0; i < components(); ++i) {
    const double d = means_[i * dim_ + j] - m;
    v += weights_[i] * (variances_[i * dim_ + j] + d * d);
  }
  return v;
}

double GmmPrior::overall_mean_square() const {
  double total = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double m = overall_mean(j);
    total += overall_variance(j) + m * m;
  }
  return total / static_cast<double>(dim_);
}

GmmPrior GmmPrior::shifted(std::span<const double> delta) const {
  if (delta.size() != dim_) throw ConfigError("GMM prior: shift dimension mismatch");
  auto means = means_;
  for (std::size_t i = 0; i < components(); ++i) {
    for (std::size_t j = 0; j < dim_; ++j) means[i * dim_ + j] += delta[j];
  }
  return GmmPrior(weights_, std::move(means), variances_, dim_);
}

GmmPrior GmmPrior::scaled(double a) const {
  if (!(a > 0.0)) throw ConfigError("GMM prior: scale must be positive");
  auto means = means_;
  auto vars = variances_;
  for (double& m : means) m *= a;
  for (double& v : vars) v *= a * a;
  return GmmPrior(weights_, std::move(means), std::move(vars), dim_);
}

void GmmScore::evaluate(std::span<const double> x, std::span<const double>, double sigma,
                        std::span<double> out) const {
  prior_.perturbed_score(x, sigma, out);
}

GmmPrior posterior_given_observation(const GmmPrior& scalar_prior, double y, double noise_std) {
  if (scalar_prior.dim() != 1) throw ConfigError("posterior_given_observation expects a scalar prior");
  if (!(noise_std > 0.0)) throw ConfigError("posterior_given_observation: noise_std must be positive");
  const std::size_t k = scalar_prior.components();
  const double tau2 = noise_std * noise_std;
  std::vector<double> log_w(k), means(k), vars(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double v = scalar_prior.variance(i, 0);
    const double m = scalar_prior.mean(i, 0);
    const double marg = v + tau2;
    const double d = y - m;
    log_w[i] = std::log(scalar_prior.weights()[i]) - 0.5 * (std::log(marg) + d * d / marg);
    means[i] = (m * tau2 + y * v) / marg;
    vars[i] = v * tau2 / marg;
  }
  const double lse = log_sum_exp(log_w);
  std::vector<double> weights(k);
  for (std::size_t i = 0; i < k; ++i) weights[i] = std::exp(log_w[i] - lse);
  // Components with vanishing posterior weight are dropped; the constructor
  // requires strictly positive weights.
  std::vector<double> w2, m2, v2;
  for (std::size_t i = 0; i < k; ++i) {
    if (weights[i] > 0.0) {
      w2.push_back(weights[i]);
      m2.push_back(means[i]);
      v2.push_back(vars[i]);
    }
  }
  return GmmPrior::scalar(std::move(w2), std::move(m2), std::move(v2));
}

PosteriorScore::PosteriorScore(GmmPrior scalar_prior, double noise_std)
    : prior_(std::move(scalar_prior)), noise_std_(noise_std) {
  if (prior_.dim() != 1) throw ConfigError("PosteriorScore expects a scalar prior");
  if (!(noise_std > 0.0)) throw ConfigError("PosteriorScore: noise_std must be positive");
}

void PosteriorScore::evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                              std::span<double> out) const {
  if (c.size() != x.size()) throw ConfigError("PosteriorScore: conditioning must match x in length");
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto post = posterior_given_observation(prior_, c[j], noise_std_);
    double s = 0.0;
    post.perturbed_score(std::span<const double>(&x[j], 1), sigma, std::span<double>(&s, 1));
    out[j] = s;
  }
}

}  // namespace scorekit
