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
#include <utility>
#include <vector>

namespace scorekit {

/// Reported in place of +inf when the estimate matches the reference exactly.
inline constexpr double kSnrCap = 100.0;

/// 10 log10(|ref|^2 / |ref - est|^2), capped at kSnrCap.
double snr(std::span<const double> reference, std::span<const double> estimate);
/// SNR after projecting the estimate onto the reference.
double si_snr(std::span<const double> reference, std::span<const double> estimate);

struct Resolution {
  std::size_t frame;
  std::size_t hop;
};

inline const std::vector<Resolution> kDefaultResolutions{{512, 128}, {1024, 256}, {2048, 512}};

/// Per-resolution terms of the multi-resolution STFT distance.
struct MrstftTerm {
  Resolution resolution;
  double spectral_convergence;
  double log_magnitude;
};

struct Mrstft {
  double value = 0.0;
  std::vector<MrstftTerm> terms;
};

/// Mean over resolutions of |R - E|_F / |R|_F + mean |log R - log E| on Hann-windowed
/// STFT magnitudes. Magnitudes are floored at kMagnitudeFloor inside the log.
Mrstft mrstft_terms(std::span<const double> reference, std::span<const double> estimate,
                    const std::vector<Resolution>& resolutions = kDefaultResolutions);
double mrstft(std::span<const double> reference, std::span<const double> estimate,
              const std::vector<Resolution>& resolutions = kDefaultResolutions);

inline constexpr double kMagnitudeFloor = 1e-7;

/// Log-spectral distance in dB: RMS over frames of the per-frame RMS difference of
/// 20 log10 magnitudes (512-sample Hann frames, hop 128, magnitudes floored).
double lsd(std::span<const double> reference, std::span<const double> estimate);

struct MetricReport {
  double snr = 0.0;
  double si_snr = 0.0;
  double lsd = 0.0;
  Mrstft mrstft;
};

MetricReport evaluate_metrics(std::span<const double> reference, std::span<const double> estimate,
                              const std::vector<Resolution>& resolutions = kDefaultResolutions);

}  // namespace scorekit
