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

#include "scorekit/training.hpp"

#include <cmath>
#include <string>

#include "scorekit/error.hpp"

namespace scorekit {

DenoisingTask::DenoisingTask(GmmPrior scalar_prior, std::size_t dim, double noise_std)
    : prior_(std::move(scalar_prior)), dim_(dim), noise_std_(noise_std) {
  if (prior_.dim() != 1) throw ConfigError("denoising task expects a scalar prior");
  if (dim_ == 0) throw ConfigError("denoising task dimension must be positive");
  if (!(noise_std_ > 0.0)) throw ConfigError("denoising task noise_std must be positive");
}

void DenoisingTask::draw(Rng& rng, std::span<double> x0, std::span<double> c) const {
  for (std::size_t j = 0; j < dim_; ++j) {
    prior_.sample(rng, x0.subspan(j, 1));
    c[j] = x0[j] + noise_std_ * rng.normal();
  }
}

FramePairData::FramePairData(std::size_t dim, std::vector<double> clean, std::vector<double> cond)
    : dim_(dim), clean_(std::move(clean)), cond_(std::move(cond)) {
  if (dim_ == 0 || clean_.empty() || clean_.size() % dim_ != 0 || cond_.size() != clean_.size()) {
    throw ConfigError("frame pair data: clean/conditioning frames must be non-empty multiples of dim");
  }
  double sq = 0.0;
  for (double v : clean_) sq += v * v;
  mean_square_ = sq / static_cast<double>(clean_.size());
}

void FramePairData::draw(Rng& rng, std::span<double> x0, std::span<double> c) const {
  const auto f = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(frames()) - 1));
  std::copy_n(clean_.begin() + static_cast<std::ptrdiff_t>(f * dim_), dim_, x0.begin());
  std::copy_n(cond_.begin() + static_cast<std::ptrdiff_t>(f * dim_), dim_, c.begin());
}

std::vector<DsmExample> draw_batch(const TrainingData& data, const NoiseSchedule& schedule, std::size_t batch,
                                   std::uint64_t seed, std::size_t step) {
  Rng rng = Rng(seed).split(step);
  std::vector<DsmExample> out(batch);
  for (auto& ex : out) {
    ex.x0.resize(data.x_dim());
    ex.c.resize(data.c_dim());
    data.draw(rng, ex.x0, ex.c);
    auto d = draw_dsm(data.x_dim(), schedule, rng);
    ex.sigma = d.sigma;
    ex.z = std::move(d.z);
  }
  return out;
}

std::vector<double> train(ScoreNet& net, Adam& optimizer, const TrainingData& data, const NoiseSchedule& schedule,
                          const TrainOptions& options) {
  if (data.x_dim() != net.config().x_dim || data.c_dim() != net.config().c_dim) {
    throw ConfigError("train: data dimensions do not match the network config");
  }
  if (options.batch == 0) throw ConfigError("train: batch must be positive");
  if (auto w = schedule.scale_warning(data.data_mean_square())) warn(*w);

  std::vector<double> trace;
  trace.reserve(options.iterations);
  std::vector<double> grad(net.param_count());
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const std::size_t step = optimizer.step();
    const auto batch = draw_batch(data, schedule, options.batch, options.seed, step);
    double loss = 0.0;
    try {
      loss = options.parallel ? kernels::omp::batch_dsm_gradient(net, batch, grad)
                              : kernels::serial::batch_dsm_gradient(net, batch, grad);
    } catch (const NumericError& e) {
      throw NumericError("train: iteration " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(loss)) throw NumericError("train: non-finite loss at iteration " + std::to_string(step));
    const double lr = optimizer.current_lr();
    optimizer.update(net.params(), grad);
    trace.push_back(loss);
    if (options.on_step) options.on_step(step, loss, lr);
  }
  return trace;
}

double relative_score_error(const ScoreFunction& model, const GmmPrior& prior, double sigma, double lo, double hi,
                            std::size_t points) {
  if (prior.dim() != 1 || points < 2) throw ConfigError("relative_score_error expects a scalar prior and >= 2 points");
  double num = 0.0;
  double den = 0.0;
  const double h = (hi - lo) / static_cast<double>(points - 1);
  std::vector<double> s(1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + h * static_cast<double>(i);
    const double w = std::exp(prior.log_density(std::span<const double>(&x, 1), sigma));
    const double truth = prior.perturbed_score(std::span<const double>(&x, 1), sigma)[0];
    model.evaluate(std::span<const double>(&x, 1), {}, sigma, s);
    num += w * (s[0] - truth) * (s[0] - truth);
    den += w * truth * truth;
  }
  return num / den;
}

}  // namespace scorekit
