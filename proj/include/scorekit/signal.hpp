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
#include <string>
#include <vector>

namespace scorekit {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono waveform with nominal range [-1, 1].
struct Signal {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// Throws ConfigError on a non-positive rate or non-finite samples.
  void validate() const;
};

enum class WavEncoding { kPcm16, kFloat32 };

struct WavReadOptions {
  /// Average channels instead of rejecting multichannel files.
  bool downmix = false;
};

/// RIFF/WAVE bytes. PCM16 and IEEE float32 only.
std::vector<std::uint8_t> encode_wav(const Signal& signal, WavEncoding encoding);
Signal decode_wav(std::span<const std::uint8_t> bytes, const WavReadOptions& options = {});

Signal read_wav(const std::string& path, const WavReadOptions& options = {});
void write_wav(const std::string& path, const Signal& signal, WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace scorekit
