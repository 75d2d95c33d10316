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

#include "scorekit/dsp.hpp"
#include "scorekit/signal.hpp"

namespace scorekit {

/// Dense rows x cols matrix, row-major. Rows are frames.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct MelConfig {
  int sample_rate = 16000;
  std::size_t frame = 512;
  std::size_t hop = 160;  // 100 Hz at 16 kHz
  std::size_t n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-5;
};

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_mels x (frame / 2 + 1) triangular filters with Slaney area normalization.
FeatureMatrix mel_filterbank(const MelConfig& config);

/// log(max(mel magnitude, floor)), frames x n_mels, Hann window.
FeatureMatrix log_mel(const Signal& signal, const MelConfig& config = {});

struct LoudnessVadConfig {
  int sample_rate = 16000;
  std::size_t frame = 512;
  std::size_t hop = 160;
  double threshold_db = -40.0;
  /// Frames the detector stays active after the level drops below threshold.
  std::size_t hangover = 2;
  double floor_db = -100.0;
};

/// frames x 2: column 0 is frame RMS in dBFS, column 1 is VAD in {0, 1}.
/// Frames are centred like the STFT (1 + floor(length / hop) frames, zero padded).
FeatureMatrix loudness_vad(const Signal& signal, const LoudnessVadConfig& config = {});

/// First-order frame differences d[t] = f[t] - f[t-1] with f[-1] = f[0].
FeatureMatrix deltas(const FeatureMatrix& features);

/// Horizontal concatenation [a | b]; row counts must match.
FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b);

/// Per-column mean/standard-deviation normalization fitted over a corpus.
struct FeatureNormalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static FeatureNormalizer fit(std::span<const FeatureMatrix> corpus);
  FeatureMatrix apply(const FeatureMatrix& m) const;
};

/// Feature dump file:
///   magic "SKFM", u32 version (1), u32 rows, u32 cols, u32 name_length, name bytes,
///   then rows * cols little-endian float32 values, row-major.
void write_feature_dump(const std::string& path, const std::string& name, const FeatureMatrix& m);
FeatureMatrix read_feature_dump(const std::string& path, std::string* name = nullptr);

}  // namespace scorekit
