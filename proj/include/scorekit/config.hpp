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
#include <string>
#include <vector>

#include <json.hpp>

#include "scorekit/distort.hpp"
#include "scorekit/metrics.hpp"
#include "scorekit/optimizer.hpp"
#include "scorekit/oracle.hpp"
#include "scorekit/schedule.hpp"
#include "scorekit/scorenet.hpp"

namespace scorekit {

/// Every tunable of the toolkit. The text form is one `key = value` per line, `#`
/// starts a comment, lists are comma separated, and unknown keys are rejected. Keys:
///
///   seed
///   schedule.sigma_min, schedule.sigma_max, schedule.fit_data (true: sigma_max from the data scale)
///   sampling.steps, sampling.epsilon, sampling.realizations
///   model.hidden, model.embed_dim, model.n_pairs, model.data_std
///   optimizer.peak_lr, optimizer.start_lr, optimizer.warmup_fraction, optimizer.weight_decay,
///   optimizer.beta1, optimizer.beta2, optimizer.eps
///   train.iterations, train.batch
///   task.kind (gmm | denoise), task.weights, task.means, task.variances, task.dim, task.noise_std
///   distort.count_probabilities, distort.noise, distort.rir,
///   distort.weight.<type>, distort.bound.<type>.<param> = lo, hi, linear|log|int
///   metrics.resolutions = frame:hop, ...
struct ToolkitConfig {
  std::uint64_t seed = 0;

  double sigma_min = kDefaultSigmaMin;
  double sigma_max = kDefaultSigmaMax;
  bool fit_schedule = false;

  int steps = kDefaultSteps;
  double epsilon = kDefaultEpsilon;
  int realizations = 10;

  ScoreNetConfig model;

  double peak_lr = 2e-4;
  double start_lr = 1.6e-6;
  double warmup_fraction = 0.05;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  std::size_t iterations = 2000;
  std::size_t batch = 128;

  // Toy task: scalar GMM prior ("gmm"), or its i.i.d. coordinates observed in
  // Gaussian noise ("denoise").
  std::string task_kind = "gmm";
  std::vector<double> task_weights{0.3, 0.7};
  std::vector<double> task_means{-2.0, 2.0};
  std::vector<double> task_variances{0.1, 0.1};
  std::size_t task_dim = 1;
  double task_noise_std = 1.0;

  // distort.noise / distort.rir fill distortion.noise_pool / rir_pool with file paths.
  ChainConfig distortion = ChainConfig::defaults();

  std::vector<Resolution> resolutions = kDefaultResolutions;

  static ToolkitConfig parse(const std::string& text);
  static ToolkitConfig load(const std::string& path);

  /// Applies one `key = value` assignment.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  nlohmann::ordered_json to_json() const;
  /// Every key in the text form; parse(to_text()) reproduces the config.
  std::string to_text() const;

  NoiseSchedule schedule() const { return NoiseSchedule(sigma_min, sigma_max); }
  /// schedule(), or the data-fitted schedule when fit_schedule is set.
  NoiseSchedule schedule_for(double data_mean_square) const;
  AdamConfig adam(std::size_t total_steps) const;
  GmmPrior prior() const;
};

}  // namespace scorekit
