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

#include "scorekit/schedule.hpp"

#include <cmath>
#include <sstream>

#include "scorekit/error.hpp"

namespace scorekit {

NoiseSchedule::NoiseSchedule(double sigma_min, double sigma_max)
    : sigma_min_(sigma_min), sigma_max_(sigma_max) {
  if (!(sigma_min > 0.0) || !std::isfinite(sigma_max) || !(sigma_min < sigma_max)) {
    throw ConfigError("noise schedule requires 0 < sigma_min < sigma_max");
  }
  log_min_ = std::log(sigma_min);
  log_max_ = std::log(sigma_max);
}

double NoiseSchedule::sigma_at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("sigma_at: t must lie in [0, 1]");
  }
  if (t == 0.0) return sigma_min_;
  if (t == 1.0) return sigma_max_;
  return std::exp((1.0 - t) * log_min_ + t * log_max_);
}

std::optional<std::string> NoiseSchedule::scale_warning(double mean_square) const {
  constexpr double kMargin = kScaleMargin;
  std::ostringstream msg;
  if (sigma_min_ * sigma_min_ * kMargin > mean_square) {
    msg << "sigma_min^2 = " << sigma_min_ * sigma_min_ << " is not negligible against data mean square "
        << mean_square;
    return msg.str();
  }
  if (mean_square * kMargin > sigma_max_ * sigma_max_) {
    msg << "sigma_max^2 = " << sigma_max_ * sigma_max_ << " does not dominate data mean square "
        << mean_square;
    return msg.str();
  }
  return std::nullopt;
}

NoiseSchedule NoiseSchedule::for_data(double mean_square) {
  if (!(mean_square > 0.0) || !std::isfinite(mean_square)) {
    throw ConfigError("for_data: data variance must be positive and finite");
  }
  const double lo = std::min(kDefaultSigmaMin, std::sqrt(mean_square / kScaleMargin));
  const double hi = std::max(kDefaultSigmaMax, std::sqrt(mean_square * kScaleMargin));
  return NoiseSchedule(lo, hi);
}

SamplingPlan make_plan(const NoiseSchedule& schedule, int n_steps, double epsilon) {
  if (n_steps < 2) throw ConfigError("sampling plan needs n_steps >= 2");
  if (!(epsilon >= 1.0) || !std::isfinite(epsilon)) throw ConfigError("sampling plan needs epsilon >= 1");

  SamplingPlan plan;
  plan.n_steps = n_steps;
  plan.epsilon = epsilon;
  plan.sigmas.resize(static_cast<std::size_t>(n_steps));
  const double denom = static_cast<double>(n_steps - 1);
  for (int n = 1; n <= n_steps; ++n) {
    plan.sigmas[static_cast<std::size_t>(n - 1)] = schedule.sigma_at(static_cast<double>(n - 1) / denom);
  }
  const double log_gamma = (std::log(schedule.sigma_min()) - std::log(schedule.sigma_max())) / denom;
  plan.gamma = std::exp(log_gamma);
  plan.eta = 1.0 - std::exp(epsilon * log_gamma);
  // (1 - eta) / gamma == gamma^(epsilon - 1); evaluating it directly keeps beta
  // exactly zero at epsilon == 1.
  const double ratio = std::exp((epsilon - 1.0) * log_gamma);
  plan.beta = std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
  return plan;
}

SamplingPlan single_step_plan(const NoiseSchedule& schedule) {
  SamplingPlan plan;
  plan.n_steps = 1;
  plan.epsilon = 1.0;
  plan.gamma = 1.0;
  plan.eta = 0.0;
  plan.beta = 0.0;
  plan.sigmas = {schedule.sigma_max()};
  return plan;
}

}  // namespace scorekit
