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
#include <string>
#include <vector>

#include "scorekit/rng.hpp"

namespace scorekit {

inline constexpr std::size_t kDefaultMdnComponents = 3;

/// Diagonal Gaussian mixture parameters for one frame.
///
/// Mixing weights are softmax(logits); scales are exp(log_scales). means and
/// log_scales are component-major (k x d).
struct MdnParams {
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> logits;
  std::vector<double> means;
  std::vector<double> log_scales;

  MdnParams() = default;
  MdnParams(std::size_t components, std::size_t dim)
      : k(components), d(dim), logits(components, 0.0), means(components * dim, 0.0),
        log_scales(components * dim, 0.0) {}

  std::vector<double> weights() const;
  double mean(std::size_t i, std::size_t j) const { return means[i * d + j]; }
  double scale(std::size_t i, std::size_t j) const;
  void validate() const;
};

/// Gradient of the NLL with respect to each parameter array.
struct MdnGrad {
  std::vector<double> logits;
  std::vector<double> means;
  std::vector<double> log_scales;
};

/// -ln sum_i alpha_i N(y; m_i, diag(s_i^2)), evaluated with log-sum-exp.
double mdn_nll(const MdnParams& params, std::span<const double> y);

/// NLL together with its analytic gradient.
double mdn_nll_grad(const MdnParams& params, std::span<const double> y, MdnGrad& grad);

/// sum_i alpha_i m_i.
std::vector<double> mdn_mean(const MdnParams& params);

/// Categorical draw over alpha followed by a diagonal Gaussian draw.
std::vector<double> mdn_sample(const MdnParams& params, Rng& rng);

/// Mixture density at y (not log).
double mdn_density(const MdnParams& params, std::span<const double> y);

/// One target type: frames x d matrix with one MdnParams per frame.
struct MdnFitOptions {
  std::size_t iterations = 3000;
  double learning_rate = 0.02;
};

/// Fits an unconditional mixture to rows of `data` (n x d) by full-batch Adam on the mean NLL.
/// Means start at evenly spaced per-dimension quantiles, scales at the data spread.
MdnParams fit_mdn(std::span<const double> data, std::size_t d, std::size_t k, const MdnFitOptions& options = {});

struct TargetGroup {
  std::string name;
  std::size_t d = 0;
  std::vector<double> targets;  // frames x d, row-major
  std::vector<MdnParams> params;

  std::size_t frames() const { return d == 0 ? 0 : targets.size() / d; }
};

/// Mean per-frame NLL over the group.
double group_loss(const TargetGroup& group);

/// Auxiliary objective: waveform-group NLL plus the sum of the feature-group NLLs.
double total_auxiliary_loss(const TargetGroup& waveform, std::span<const TargetGroup> feature_groups);

/// Score-matching loss plus the auxiliary MDN terms.
inline double total_objective(double score_matching_loss, double auxiliary_loss) {
  return score_matching_loss + auxiliary_loss;
}

}  // namespace scorekit
