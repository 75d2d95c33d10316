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
#include <optional>
#include <string>
#include <vector>

#include "scorekit/optimizer.hpp"
#include "scorekit/schedule.hpp"
#include "scorekit/scorenet.hpp"

namespace scorekit {

/// Versioned binary model checkpoint.
///
/// Layout (all integers unsigned little-endian, all reals IEEE-754 binary64 little-endian):
///
///   magic    8 bytes  "SKCKPT\0\1"
///   version  u32      currently 1
///   count    u32      number of sections
///   sections count x { tag: 4 ASCII bytes, length: u64, payload: length bytes }
///
/// Sections, written in this order:
///   CONF  resolved configuration echo, UTF-8 text
///   SCHD  f64 sigma_min, f64 sigma_max
///   NETC  u64 x_dim, u64 c_dim, u64 n_hidden, u64 hidden[n_hidden], u64 n_pairs,
///         u64 embed_dim, f64 data_std, u64 init_seed
///   FREQ  u64 n, f64[n]                       frozen Fourier frequencies
///   PARM  u64 n, f64[n]                       flat parameters (ScoreNet::blocks order)
///   OPTM  u64 step, f64 peak_lr, f64 start_lr, u64 warmup_steps, u64 total_steps,
///         f64 beta1, f64 beta2, f64 eps, f64 weight_decay, u64 n, f64 m[n], f64 v[n]
///   MELF  u64 rows, u64 cols, f64[rows * cols]   (optional) mel filterbank
///   MELN  u64 n, f64 mean[n], f64 stddev[n]      (optional) feature normalization
///
/// Readers skip unknown tags.
struct Checkpoint {
  std::string config_text;
  NoiseSchedule schedule;
  ScoreNetConfig net_config;
  std::vector<double> frequencies;
  std::vector<double> params;

  struct OptimizerState {
    std::size_t step = 0;
    AdamConfig config;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::optional<OptimizerState> optimizer;

  struct MelFilterbank {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
  };
  std::optional<MelFilterbank> mel_filterbank;

  struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;
  };
  std::optional<Normalization> mel_normalization;

  static Checkpoint capture(const ScoreNet& net, const NoiseSchedule& schedule, const Adam* optimizer,
                            std::string config_text);

  ScoreNet make_net() const;
  /// Optimizer with restored moments; falls back to a fresh one when none was saved.
  Adam make_optimizer(const AdamConfig& fallback) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace scorekit
