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
#include <span>
#include <vector>

namespace scorekit {

/// Linear warm-up from start_lr to peak_lr over warmup_steps, then cosine decay
/// to zero at total_steps.
struct LrSchedule {
  double peak_lr = 2e-4;
  double start_lr = 1.6e-6;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  double at(std::size_t step) const;

  /// Warm-up spans `warmup_fraction` of `total_steps` (rounded to nearest).
  static LrSchedule with_fraction(double peak_lr, double start_lr, double warmup_fraction, std::size_t total_steps);
};

struct AdamConfig {
  LrSchedule lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled ("manual") weight decay restricted by a mask.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, std::vector<std::uint8_t> decay_mask);

  /// One update: p -= lr * (m_hat / (sqrt(v_hat) + eps)) and, where the mask is set,
  /// p -= lr * weight_decay * p.
  void update(std::span<double> params, std::span<const double> grad);

  double current_lr() const { return config_.lr.at(step_); }
  std::size_t step() const { return step_; }

  const AdamConfig& config() const { return config_; }
  AdamConfig& config() { return config_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  const std::vector<std::uint8_t>& decay_mask() const { return mask_; }

  /// Restores accumulated state (checkpoint reload).
  void restore(std::size_t step, std::vector<double> m, std::vector<double> v);

 private:
  AdamConfig config_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t step_ = 0;
};

}  // namespace scorekit
