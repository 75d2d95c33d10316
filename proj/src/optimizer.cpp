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

#include "scorekit/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "scorekit/error.hpp"

namespace scorekit {

double LrSchedule::at(std::size_t step) const {
  if (step < warmup_steps) {
    const double frac = static_cast<double>(step) / static_cast<double>(warmup_steps);
    return start_lr + (peak_lr - start_lr) * frac;
  }
  if (total_steps <= warmup_steps) return peak_lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps));
  return 0.5 * peak_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

LrSchedule LrSchedule::with_fraction(double peak_lr, double start_lr, double warmup_fraction,
                                     std::size_t total_steps) {
  if (!(peak_lr > 0.0) || start_lr < 0.0) throw ConfigError("learning rates must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw ConfigError("warm-up fraction must be in [0, 1]");
  LrSchedule s;
  s.peak_lr = peak_lr;
  s.start_lr = start_lr;
  s.total_steps = total_steps;
  s.warmup_steps = static_cast<std::size_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
  return s;
}

Adam::Adam(AdamConfig config, std::vector<std::uint8_t> decay_mask)
    : config_(config), mask_(std::move(decay_mask)), m_(mask_.size(), 0.0), v_(mask_.size(), 0.0) {}

void Adam::update(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw ConfigError("Adam: parameter size mismatch");
  const double lr = config_.lr.at(step_);
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double decay = lr * config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / corr1;
    const double v_hat = v_[i] / corr2;
    double p = params[i];
    if (mask_[i] != 0) p -= decay * p;
    params[i] = p - lr * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

void Adam::restore(std::size_t step, std::vector<double> m, std::vector<double> v) {
  if (m.size() != mask_.size() || v.size() != mask_.size()) throw ConfigError("Adam: restored state size mismatch");
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace scorekit
