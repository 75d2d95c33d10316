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
#include <map>
#include <string>
#include <vector>

#include "scorekit/rng.hpp"
#include "scorekit/signal.hpp"

namespace scorekit {

enum class ParamScale { kLinear, kLog, kInteger };

/// Sampling range of one distortion parameter.
struct ParamBound {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  ParamScale scale = ParamScale::kLinear;

  double draw(Rng& rng) const;
};

struct DistortionSpec {
  std::string type;
  std::map<std::string, double> params;
  /// Name of a pooled noise or impulse response; empty when synthetic.
  std::string resource;
  /// Seeds every random choice the primitive makes beyond `params`.
  std::uint64_t seed = 0;

  bool operator==(const DistortionSpec&) const = default;
};

using DistortionChain = std::vector<DistortionSpec>;

/// Static description of an implemented primitive.
struct DistortionKind {
  std::string type;
  std::string family;
  double weight = 0.0;  // selection weight; 0 means never sampled
  std::vector<ParamBound> bounds;
  bool needs_noise = false;  // requires a noise resource
  bool uses_rir = false;     // takes an impulse response from the pool when available
  bool may_delay = false;    // output may lag the input; triggers alignment
};

/// Every implemented primitive, in a fixed order.
const std::vector<DistortionKind>& distortion_kinds();
const DistortionKind& distortion_kind(const std::string& type);

struct ChainConfig {
  std::vector<double> count_probabilities{0.35, 0.45, 0.15, 0.04, 0.01};
  /// Selection weight per type; starts from the kinds table.
  std::map<std::string, double> weights;
  std::map<std::string, std::vector<ParamBound>> bounds;
  std::vector<std::string> noise_pool;
  std::vector<std::string> rir_pool;

  static ChainConfig defaults();
  void validate() const;
  /// Types eligible for sampling given the pools, with their weights.
  std::vector<std::pair<std::string, double>> enabled() const;
};

/// Pre-loaded audio used by noise and reverb primitives, keyed by name.
struct DistortionResources {
  std::map<std::string, Signal> noises;
  std::map<std::string, Signal> rirs;

  static DistortionResources load(const std::vector<std::string>& noise_paths,
                                  const std::vector<std::string>& rir_paths);
  std::vector<std::string> noise_names() const;
  std::vector<std::string> rir_names() const;
};

DistortionChain sample_chain(const ChainConfig& config, Rng& rng);

/// Applies one primitive; output has the input's length and rate.
Signal apply_distortion(const Signal& x, const DistortionSpec& spec, const DistortionResources& resources = {});

struct DistortedPair {
  Signal clean;
  Signal distorted;
  DistortionChain chain;
  /// Samples by which the distorted signal lagged the clean one before trimming.
  std::int64_t offset = 0;
};

/// Applies the chain in order. If a delaying primitive ran, the pair is aligned at
/// the normalized cross-correlation peak and trimmed to common support.
DistortedPair apply_chain(const Signal& x, const DistortionChain& chain, const DistortionResources& resources = {});

/// Lag maximizing normalized_xcorr(clean, distorted); ties go to the smaller |lag|.
std::int64_t alignment_offset(const std::vector<double>& clean, const std::vector<double>& distorted);

/// Block mask used by temporal primitives: block b of `block` samples is active with
/// probability p, drawn in order from `rng`.
std::vector<char> temporal_mask(std::size_t length, std::size_t block, double probability, Rng& rng);

/// Samples above this magnitude are softly limited with a warning.
inline constexpr double kGuardCeiling = 4.0;

/// Chain log record (JSON object with keys: type, params, resource, seed).
std::string chain_to_json(const DistortionChain& chain);
DistortionChain chain_from_json(const std::string& text);

}  // namespace scorekit
