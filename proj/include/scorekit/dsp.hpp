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

#include <complex>
#include <span>
#include <vector>

#include "scorekit/signal.hpp"

namespace scorekit {

using Complex = std::complex<double>;

/// Real forward DFT of length in.size(); out has in.size() / 2 + 1 bins. Unnormalized.
void rfft(std::span<const double> in, std::span<Complex> out);
std::vector<Complex> rfft(std::span<const double> in);
/// Inverse of rfft for a length-n signal, including the 1/n factor.
void irfft(std::span<const Complex> in, std::span<double> out);

enum class WindowType { kHann, kHamming, kRectangular };

/// Periodic window of length n.
std::vector<double> make_window(WindowType type, std::size_t n);

struct StftConfig {
  std::size_t frame = 512;
  std::size_t hop = 128;
  WindowType window = WindowType::kHann;
};

/// Complex STFT frames x bins, row-major.
///
/// The signal is zero-padded by frame / 2 on both sides and frame m starts at
/// m * hop in the padded signal, so there are 1 + floor(length / hop) frames.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t frame_length = 0;
  std::size_t hop = 0;
  std::size_t signal_length = 0;
  std::vector<Complex> data;

  Complex& at(std::size_t f, std::size_t k) { return data[f * bins + k]; }
  const Complex& at(std::size_t f, std::size_t k) const { return data[f * bins + k]; }
  /// Magnitudes, frames x bins.
  std::vector<double> magnitude() const;
};

/// Centered frames: 1 + length / hop.
std::size_t stft_frame_count(std::size_t length, std::size_t hop);
/// As above, plus trailing frames when hop > frame / 2 would leave the tail uncovered.
std::size_t stft_frame_count(std::size_t length, std::size_t hop, std::size_t frame);

/// True when the squared-window overlap never vanishes (overlap-add inversion is possible).
bool satisfies_nola(const StftConfig& config);

Spectrogram stft(std::span<const double> x, const StftConfig& config);

/// Weighted overlap-add inverse. Throws ConfigError for configurations that fail NOLA.
std::vector<double> istft(const Spectrogram& spec, const StftConfig& config, std::size_t length);

/// sum over frames of (1/N) sum_k c_k |X_k|^2 with one-sided weights c_k; equals the
/// windowed-frame energy sum_m sum_n (w[n] x[mH + n])^2.
double spectral_energy(const Spectrogram& spec);

namespace kernels {
namespace serial {
Spectrogram stft(std::span<const double> x, const StftConfig& config);
}
namespace omp {
Spectrogram stft(std::span<const double> x, const StftConfig& config);
}
}  // namespace kernels

/// Windowed-sinc (Kaiser) polyphase resampling. Output length is ceil(n * to / from).
std::vector<double> resample(std::span<const double> x, int from_rate, int to_rate);
Signal resample(const Signal& signal, int target_rate);

/// Normalized cross-correlation r[lag] = sum_n a[n] b[n + lag] / (|a| |b|) for
/// lag in [-(a.size() - 1), b.size() - 1]; entry i holds lag i - (a.size() - 1).
std::vector<double> normalized_xcorr(std::span<const double> a, std::span<const double> b);

/// Second-order IIR section, y = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;

  // Audio-EQ-cookbook designs. freq in Hz, q > 0.
  static Biquad lowpass(double freq, double q, double fs);
  static Biquad highpass(double freq, double q, double fs);
  /// Constant 0 dB peak gain.
  static Biquad bandpass(double freq, double q, double fs);
  static Biquad notch(double freq, double q, double fs);
  static Biquad peaking(double freq, double q, double gain_db, double fs);
  static Biquad lowshelf(double freq, double gain_db, double fs);
  static Biquad highshelf(double freq, double gain_db, double fs);
  /// Two-pole resonator with pole radius r at freq, normalized to unit peak gain.
  static Biquad resonator(double freq, double r, double fs);

  /// |H(e^{j 2 pi freq / fs})|.
  double magnitude_at(double freq, double fs) const;
  bool stable() const;
  void process(std::span<double> x) const;
};

}  // namespace scorekit
