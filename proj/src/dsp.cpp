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

#include "scorekit/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread-safe; execution with the new-array interface is.
struct PlanCache {
  std::mutex mutex;
  std::map<std::size_t, fftw_plan> forward;
  std::map<std::size_t, fftw_plan> inverse;

  ~PlanCache() {
    for (auto& [n, p] : forward) fftw_destroy_plan(p);
    for (auto& [n, p] : inverse) fftw_destroy_plan(p);
  }

  fftw_plan get(std::size_t n, bool is_forward) {
    std::lock_guard lock(mutex);
    auto& table = is_forward ? forward : inverse;
    if (auto it = table.find(n); it != table.end()) return it->second;
    double* real = fftw_alloc_real(n);
    fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
    const int size = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = is_forward ? fftw_plan_dft_r2c_1d(size, real, cplx, flags)
                             : fftw_plan_dft_c2r_1d(size, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    table.emplace(n, p);
    return p;
  }
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace

void rfft(std::span<const double> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  if (n == 0 || out.size() != n / 2 + 1) throw ConfigError("rfft: output must have n / 2 + 1 bins");
  std::vector<double> buf(in.begin(), in.end());
  fftw_execute_dft_r2c(plans().get(n, true), buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

std::vector<Complex> rfft(std::span<const double> in) {
  std::vector<Complex> out(in.size() / 2 + 1);
  rfft(in, out);
  return out;
}

void irfft(std::span<const Complex> in, std::span<double> out) {
  const std::size_t n = out.size();
  if (n == 0 || in.size() != n / 2 + 1) throw ConfigError("irfft: input must have n / 2 + 1 bins");
  std::vector<Complex> buf(in.begin(), in.end());
  fftw_execute_dft_c2r(plans().get(n, false), reinterpret_cast<fftw_complex*>(buf.data()), out.data());
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= inv;
}

std::vector<double> make_window(WindowType type, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double denom = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = 2.0 * kPi * static_cast<double>(i) / denom;
    switch (type) {
      case WindowType::kHann: w[i] = 0.5 - 0.5 * std::cos(phase); break;
      case WindowType::kHamming: w[i] = 0.54 - 0.46 * std::cos(phase); break;
      case WindowType::kRectangular: break;
    }
  }
  return w;
}

std::vector<double> Spectrogram::magnitude() const {
  std::vector<double> m(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) m[i] = std::abs(data[i]);
  return m;
}

std::size_t stft_frame_count(std::size_t length, std::size_t hop) { return 1 + length / hop; }

std::size_t stft_frame_count(std::size_t length, std::size_t hop, std::size_t frame) {
  std::size_t frames = stft_frame_count(length, hop);
  while ((frames - 1) * hop + frame / 2 < length) ++frames;
  return frames;
}

bool satisfies_nola(const StftConfig& config) {
  if (config.hop == 0 || config.frame < config.hop) return false;
  const auto w = make_window(config.window, config.frame);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t n = 0; n < config.hop; ++n) {
    double acc = 0.0;
    for (std::size_t i = n; i < config.frame; i += config.hop) acc += w[i] * w[i];
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  return lo > 1e-8 * hi;
}

namespace {

void check_stft_config(const StftConfig& config) {
  if (config.frame == 0 || config.hop == 0) throw ConfigError("stft: frame and hop must be positive");
  if (config.frame < config.hop) throw ConfigError("stft: frame must be >= hop");
}

Spectrogram stft_layout(std::size_t length, const StftConfig& config) {
  Spectrogram s;
  s.frames = stft_frame_count(length, config.hop, config.frame);
  s.bins = config.frame / 2 + 1;
  s.frame_length = config.frame;
  s.hop = config.hop;
  s.signal_length = length;
  s.data.resize(s.frames * s.bins);
  return s;
}

void stft_frame(std::span<const double> x, const std::vector<double>& window, std::size_t m, Spectrogram& s,
                std::vector<double>& buf) {
  const std::size_t n = s.frame_length;
  const auto start = static_cast<std::ptrdiff_t>(m * s.hop) - static_cast<std::ptrdiff_t>(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
    const double v = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) ? x[static_cast<std::size_t>(idx)] : 0.0;
    buf[i] = v * window[i];
  }
  rfft(buf, std::span<Complex>(s.data).subspan(m * s.bins, s.bins));
}

}  // namespace

namespace kernels {
namespace serial {
Spectrogram stft(std::span<const double> x, const StftConfig& config) {
  check_stft_config(config);
  auto s = stft_layout(x.size(), config);
  const auto window = make_window(config.window, config.frame);
  std::vector<double> buf(config.frame);
  for (std::size_t m = 0; m < s.frames; ++m) stft_frame(x, window, m, s, buf);
  return s;
}
}  // namespace serial

namespace omp {
Spectrogram stft(std::span<const double> x, const StftConfig& config) {
  check_stft_config(config);
  auto s = stft_layout(x.size(), config);
  const auto window = make_window(config.window, config.frame);
  const auto frames = static_cast<std::ptrdiff_t>(s.frames);
  plans().get(config.frame, true);
#pragma omp parallel
  {
    std::vector<double> buf(config.frame);
#pragma omp for schedule(static)
    for (std::ptrdiff_t m = 0; m < frames; ++m) stft_frame(x, window, static_cast<std::size_t>(m), s, buf);
  }
  return s;
}
}  // namespace omp
}  // namespace kernels

Spectrogram stft(std::span<const double> x, const StftConfig& config) { return kernels::omp::stft(x, config); }

std::vector<double> istft(const Spectrogram& spec, const StftConfig& config, std::size_t length) {
  check_stft_config(config);
  if (!satisfies_nola(config)) throw ConfigError("istft: window/hop combination is not invertible (NOLA fails)");
  if (spec.frame_length != config.frame || spec.hop != config.hop) throw ConfigError("istft: config does not match spectrogram");
  const std::size_t n = config.frame;
  const auto window = make_window(config.window, n);
  const std::size_t padded = (spec.frames - 1) * config.hop + n;
  std::vector<double> acc(padded, 0.0);
  std::vector<double> norm(padded, 0.0);
  std::vector<double> buf(n);
  for (std::size_t m = 0; m < spec.frames; ++m) {
    irfft(std::span<const Complex>(spec.data).subspan(m * spec.bins, spec.bins), buf);
    const std::size_t start = m * config.hop;
    for (std::size_t i = 0; i < n; ++i) {
      acc[start + i] += buf[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(length, 0.0);
  const std::size_t offset = n / 2;
  for (std::size_t i = 0; i < length && offset + i < padded; ++i) {
    const double w = norm[offset + i];
    out[i] = w > 1e-10 ? acc[offset + i] / w : 0.0;
  }
  return out;
}

double spectral_energy(const Spectrogram& spec) {
  const std::size_t n = spec.frame_length;
  double total = 0.0;
  for (std::size_t m = 0; m < spec.frames; ++m) {
    double frame = 0.0;
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const bool edge = k == 0 || (n % 2 == 0 && k == spec.bins - 1);
      frame += (edge ? 1.0 : 2.0) * std::norm(spec.at(m, k));
    }
    total += frame / static_cast<double>(n);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Resampling

std::vector<double> resample(std::span<const double> x, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw ConfigError("resample: rates must be positive");
  if (from_rate == to_rate) return {x.begin(), x.end()};
  const long g = std::gcd(from_rate, to_rate);
  const long up = to_rate / g;
  const long down = from_rate / g;
  constexpr double kZeroCrossings = 32.0;
  constexpr double kRolloff = 0.94;
  constexpr double kKaiserBeta = 9.0;
  const double rho = std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) * kRolloff;
  const double half_width = kZeroCrossings / rho;
  const long taps_half = static_cast<long>(std::ceil(half_width));
  const long taps = 2 * taps_half;
  const double i0_beta = bessel_i0(kKaiserBeta);

  auto kernel = [&](double tau) {
    if (std::abs(tau) >= half_width) return 0.0;
    const double r = tau / half_width;
    const double w = bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    const double arg = kPi * rho * tau;
    const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
    return rho * sinc * w;
  };
  auto phase_taps = [&](long phase, std::vector<double>& row) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double sum = 0.0;
    for (long j = 0; j < taps; ++j) {
      row[static_cast<std::size_t>(j)] = kernel(frac + static_cast<double>(taps_half - 1 - j));
      sum += row[static_cast<std::size_t>(j)];
    }
    for (double& v : row) v /= sum;  // unit DC gain per phase
  };

  constexpr long kMaxTable = 4096;
  std::vector<std::vector<double>> table;
  if (up <= kMaxTable) {
    table.assign(static_cast<std::size_t>(up), std::vector<double>(static_cast<std::size_t>(taps)));
    for (long p = 0; p < up; ++p) phase_taps(p, table[static_cast<std::size_t>(p)]);
  }
  const auto in_len = static_cast<long>(x.size());
  const long out_len = (in_len * up + down - 1) / down;
  std::vector<double> out(static_cast<std::size_t>(out_len));
  std::vector<double> scratch(static_cast<std::size_t>(taps));
  for (long n = 0; n < out_len; ++n) {
    const long pos = n * down;
    const long base = pos / up;
    const long phase = pos % up;
    const std::vector<double>* row = nullptr;
    if (!table.empty()) {
      row = &table[static_cast<std::size_t>(phase)];
    } else {
      phase_taps(phase, scratch);
      row = &scratch;
    }
    double acc = 0.0;
    for (long j = 0; j < taps; ++j) {
      const long k = base - taps_half + 1 + j;
      if (k >= 0 && k < in_len) acc += (*row)[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

Signal resample(const Signal& signal, int target_rate) {
  Signal out;
  out.sample_rate = target_rate;
  out.samples = resample(signal.samples, signal.sample_rate, target_rate);
  return out;
}

std::vector<double> normalized_xcorr(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("normalized_xcorr: empty input");
  const std::size_t full = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < full) n <<= 1;
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  auto fa = rfft(pa);
  auto fb = rfft(pb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] = std::conj(fa[k]) * fb[k];
  std::vector<double> circ(n);
  irfft(fa, circ);
  const double ea = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  const double eb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  const double norm = ea * eb > 0.0 ? 1.0 / (ea * eb) : 0.0;
  std::vector<double> out(full);
  const auto neg = static_cast<std::ptrdiff_t>(a.size()) - 1;
  for (std::size_t i = 0; i < full; ++i) {
    const std::ptrdiff_t lag = static_cast<std::ptrdiff_t>(i) - neg;
    const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag) : n - static_cast<std::size_t>(-lag);
    out[i] = circ[idx] * norm;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Biquads

namespace {

Biquad normalize(double b0, double b1, double b2, double a0, double a1, double a2) {
  return Biquad{b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0};
}

void check_design(double freq, double q, double fs) {
  if (!(fs > 0.0) || !(freq > 0.0) || !(freq < fs / 2.0)) throw ConfigError("biquad: frequency must be in (0, fs/2)");
  if (!(q > 0.0)) throw ConfigError("biquad: Q must be positive");
}

}  // namespace

Biquad Biquad::lowpass(double freq, double q, double fs) {
  check_design(freq, q, fs);
  const double w0 = 2.0 * kPi * freq / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalize((1 - c) / 2, 1 - c, (1 - c) / 2, 1 + alpha, -2 * c, 1 - alpha);
}

Biquad Biquad::highpass(double freq, double q, double fs) {
  check_design(freq, q, fs);
  const double w0 = 2.0 * kPi * freq / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalize((1 + c) / 2, -(1 + c), (1 + c) / 2, 1 + alpha, -2 * c, 1 - alpha);
}

Biquad Biquad::bandpass(double freq, double q, double fs) {
  check_design(freq, q, fs);
  const double w0 = 2.0 * kPi * freq / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalize(alpha, 0.0, -alpha, 1 + alpha, -2 * c, 1 - alpha);
}

Biquad Biquad::notch(double freq, double q, double fs) {
  check_design(freq, q, fs);
  const double w0 = 2.0 * kPi * freq / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalize(1.0, -2 * c, 1.0, 1 + alpha, -2 * c, 1 - alpha);
}

Biquad Biquad::peaking(double freq, double q, double gain_db, double fs) {
  check_design(freq, q, fs);
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w0 = 2.0 * kPi * freq / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalize(1 + alpha * a, -2 * c, 1 - alpha * a, 1 + alpha / a, -2 * c, 1 - alpha / a);
}

Biquad Biquad::lowshelf(double freq, double gain_db, double fs) {
  check_design(freq, 1.0, fs);
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w0 = 2.0 * kPi * freq / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / 2.0 * std::sqrt(2.0);  // shelf slope S = 1
  const double sa = 2.0 * std::sqrt(a) * alpha;
  return normalize(a * ((a + 1) - (a - 1) * c + sa), 2 * a * ((a - 1) - (a + 1) * c), a * ((a + 1) - (a - 1) * c - sa),
                   (a + 1) + (a - 1) * c + sa, -2 * ((a - 1) + (a + 1) * c), (a + 1) + (a - 1) * c - sa);
}

Biquad Biquad::highshelf(double freq, double gain_db, double fs) {
  check_design(freq, 1.0, fs);
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w0 = 2.0 * kPi * freq / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / 2.0 * std::sqrt(2.0);
  const double sa = 2.0 * std::sqrt(a) * alpha;
  return normalize(a * ((a + 1) + (a - 1) * c + sa), -2 * a * ((a - 1) + (a + 1) * c), a * ((a + 1) + (a - 1) * c - sa),
                   (a + 1) - (a - 1) * c + sa, 2 * ((a - 1) - (a + 1) * c), (a + 1) - (a - 1) * c - sa);
}

Biquad Biquad::resonator(double freq, double r, double fs) {
  check_design(freq, 1.0, fs);
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("resonator: pole radius must be in (0, 1)");
  const double w0 = 2.0 * kPi * freq / fs;
  Biquad bq{1.0, 0.0, 0.0, -2.0 * r * std::cos(w0), r * r};
  const double peak = bq.magnitude_at(freq, fs);
  bq.b0 /= peak;
  return bq;
}

double Biquad::magnitude_at(double freq, double fs) const {
  const double w = 2.0 * kPi * freq / fs;
  const Complex z1 = std::polar(1.0, -w);
  const Complex z2 = z1 * z1;
  const Complex num = b0 + b1 * z1 + b2 * z2;
  const Complex den = 1.0 + a1 * z1 + a2 * z2;
  return std::abs(num / den);
}

bool Biquad::stable() const {
  // Jury conditions for a monic quadratic denominator.
  return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

void Biquad::process(std::span<double> x) const {
  double s1 = 0.0, s2 = 0.0;
  for (double& v : x) {
    const double in = v;
    const double out = b0 * in + s1;
    s1 = b1 * in - a1 * out + s2;
    s2 = b2 * in - a2 * out;
    v = out;
  }
}

}  // namespace scorekit
