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

// Data-parallel kernels. Each kernel has a plain serial reference in
// kernels::serial and an OpenMP version in kernels::omp. The OpenMP versions
// produce results that do not depend on the thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "scorekit/diffusion.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/schedule.hpp"

namespace scorekit {

class ScoreNet;

/// One term of a score-matching batch with its draws fixed.
struct DsmExample {
  std::vector<double> x0;
  std::vector<double> c;
  std::vector<double> z;
  double sigma = 1.0;
};

namespace kernels {

/// Examples per partial sum in the parallel gradient reduction.
inline constexpr std::size_t kGradientChunk = 8;

namespace serial {

/// Draws `count` samples; sample i uses rng.split(i) and conditioning row i of
/// `conds` (count x cond_dim, or empty when cond_dim == 0). Row-major output.
std::vector<double> sample_many(const ScoreFunction& score, std::span<const double> conds, std::size_t cond_dim,
                                const SamplingPlan& plan, std::size_t dim, std::size_t count, const Rng& rng);

/// Mean loss over the batch; writes the mean parameter gradient into `grad`.
/// Examples are accumulated one after another in batch order.
double batch_dsm_gradient(const ScoreNet& net, std::span<const DsmExample> batch, std::span<double> grad);

}  // namespace serial

namespace omp {

std::vector<double> sample_many(const ScoreFunction& score, std::span<const double> conds, std::size_t cond_dim,
                                const SamplingPlan& plan, std::size_t dim, std::size_t count, const Rng& rng);

/// Same contract as the serial version. Gradients are summed within fixed
/// chunks of kGradientChunk examples, then across chunks in order.
double batch_dsm_gradient(const ScoreNet& net, std::span<const DsmExample> batch, std::span<double> grad);

}  // namespace omp

/// Sets the OpenMP thread count used by the omp kernels (<= 0 keeps the default).
void set_jobs(int jobs);
int max_jobs();

}  // namespace kernels
}  // namespace scorekit
