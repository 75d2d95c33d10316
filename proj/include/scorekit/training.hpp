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

#include "scorekit/kernels.hpp"
#include "scorekit/optimizer.hpp"
#include "scorekit/oracle.hpp"
#include "scorekit/schedule.hpp"
#include "scorekit/scorenet.hpp"

namespace scorekit {

/// Source of (clean, conditioning) training pairs.
class TrainingData {
 public:
  virtual ~TrainingData() = default;
  virtual std::size_t x_dim() const = 0;
  virtual std::size_t c_dim() const = 0;
  virtual void draw(Rng& rng, std::span<double> x0, std::span<double> c) const = 0;
  /// Per-coordinate mean square of x0, for the schedule scale check.
  virtual double data_mean_square() const = 0;
};

/// Unconditional samples from a mixture prior.
class GmmData final : public TrainingData {
 public:
  explicit GmmData(GmmPrior prior) : prior_(std::move(prior)) {}
  std::size_t x_dim() const override { return prior_.dim(); }
  std::size_t c_dim() const override { return 0; }
  void draw(Rng& rng, std::span<double> x0, std::span<double>) const override { prior_.sample(rng, x0); }
  double data_mean_square() const override { return prior_.overall_mean_square(); }
  const GmmPrior& prior() const { return prior_; }

 private:
  GmmPrior prior_;
};

/// Toy conditional denoising: x0 has i.i.d. coordinates from a scalar mixture,
/// and the conditioning is c = x0 + noise_std * n.
class DenoisingTask final : public TrainingData {
 public:
  DenoisingTask(GmmPrior scalar_prior, std::size_t dim, double noise_std);
  std::size_t x_dim() const override { return dim_; }
  std::size_t c_dim() const override { return dim_; }
  void draw(Rng& rng, std::span<double> x0, std::span<double> c) const override;
  double data_mean_square() const override { return prior_.overall_mean_square(); }

  const GmmPrior& prior() const { return prior_; }
  double noise_std() const { return noise_std_; }
  PosteriorScore oracle() const { return PosteriorScore(prior_, noise_std_); }

 private:
  GmmPrior prior_;
  std::size_t dim_;
  double noise_std_;
};

/// Fixed set of (clean, conditioning) frame pairs, e.g. cut from paired recordings.
class FramePairData final : public TrainingData {
 public:
  FramePairData(std::size_t dim, std::vector<double> clean, std::vector<double> cond);
  std::size_t x_dim() const override { return dim_; }
  std::size_t c_dim() const override { return dim_; }
  void draw(Rng& rng, std::span<double> x0, std::span<double> c) const override;
  double data_mean_square() const override { return mean_square_; }
  std::size_t frames() const { return clean_.size() / dim_; }

 private:
  std::size_t dim_;
  std::vector<double> clean_;
  std::vector<double> cond_;
  double mean_square_ = 1.0;
};

struct TrainOptions {
  std::size_t iterations = 1000;
  std::size_t batch = 128;
  std::uint64_t seed = 0;
  bool parallel = true;
  /// Called after each update with (step, batch loss, learning rate).
  std::function<void(std::size_t, double, double)> on_step;
};

/// Draws the batch for optimizer step `step`; a pure function of (seed, step).
std::vector<DsmExample> draw_batch(const TrainingData& data, const NoiseSchedule& schedule, std::size_t batch,
                                   std::uint64_t seed, std::size_t step);

/// Runs `options.iterations` Adam updates starting at `optimizer.step()`.
/// Returns the per-step mean batch loss. Throws NumericError naming the step on a NaN loss.
std::vector<double> train(ScoreNet& net, Adam& optimizer, const TrainingData& data, const NoiseSchedule& schedule,
                          const TrainOptions& options);

/// Density-weighted relative squared score error of `model` against a scalar
/// mixture prior over a uniform grid on [lo, hi], at noise level sigma.
double relative_score_error(const ScoreFunction& model, const GmmPrior& prior, double sigma, double lo, double hi,
                            std::size_t points);

}  // namespace scorekit
