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

#include <optional>
#include <string>
#include <vector>

namespace scorekit {

inline constexpr double kDefaultSigmaMin = 5e-4;
inline constexpr double kDefaultSigmaMax = 5.0;
inline constexpr int kDefaultSteps = 64;
inline constexpr double kDefaultEpsilon = 2.3;

/// "Much less than" in sigma_min^2 << E[x0^2] << sigma_max^2, as a ratio of squares.
/// The data scale is the per-coordinate mean square about the origin, because the
/// sampler starts from N(0, sigma_max^2); for zero-mean audio it is the variance.
inline constexpr double kScaleMargin = 100.0;

/// Geometric noise schedule sigma(t) = sigma_min * (sigma_max / sigma_min)^t, t in [0, 1].
class NoiseSchedule {
 public:
  NoiseSchedule() : NoiseSchedule(kDefaultSigmaMin, kDefaultSigmaMax) {}
  NoiseSchedule(double sigma_min, double sigma_max);

  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

  /// Evaluated in log space. Endpoints are returned exactly.
  double sigma_at(double t) const;

  /// Warning text when sigma_min^2 << mean_square << sigma_max^2 does not hold.
  std::optional<std::string> scale_warning(double mean_square) const;

  /// Default schedule widened just enough to satisfy the scale constraint for data
  /// with the given per-coordinate mean square.
  static NoiseSchedule for_data(double mean_square);

 private:
  double sigma_min_;
  double sigma_max_;
  double log_min_;
  double log_max_;
};

/// Discretized schedule plus the consistent-annealing step constants.
///
/// `sigmas[n - 1]` is sigma(t_n) with t_n = (n - 1) / (N - 1), so the vector is
/// ascending in n; the sampler walks it from n = N down to n = 1.
struct SamplingPlan {
  int n_steps = 0;
  double epsilon = 1.0;
  double gamma = 0.0;  // sigma(t_n) / sigma(t_{n+1})
  double eta = 0.0;    // 1 - gamma^epsilon
  double beta = 0.0;   // sqrt(1 - ((1 - eta) / gamma)^2)
  std::vector<double> sigmas;

  double sigma(int n) const { return sigmas.at(static_cast<std::size_t>(n - 1)); }
};

SamplingPlan make_plan(const NoiseSchedule& schedule, int n_steps, double epsilon);

/// One-step plan: start at sigma_max and apply only the final denoising correction.
/// Used by speed sweeps for N = 1, which the geometric discretization does not define.
SamplingPlan single_step_plan(const NoiseSchedule& schedule);

}  // namespace scorekit
