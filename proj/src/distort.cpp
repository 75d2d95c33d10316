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

#include "scorekit/distort.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "scorekit/dsp.hpp"
#include "scorekit/error.hpp"

namespace scorekit {

namespace {

using Samples = std::vector<double>;
using std::numbers::pi;

constexpr ParamScale kLin = ParamScale::kLinear;
constexpr ParamScale kLog = ParamScale::kLog;
constexpr ParamScale kInt = ParamScale::kInteger;

// Bounds are chosen for 16 kHz speech so that each effect is clearly audible.
std::vector<DistortionKind> build_kinds() {
  const ParamBound q{"q", 0.5, 5.0, kLin};
  const ParamBound window{"window_log2", 8, 10, kInt};
  const ParamBound seg_len{"length_ms", 10.0, 200.0, kLog};
  const ParamBound seg_prob{"probability", 0.02, 0.2, kLin};
  const ParamBound ns_len{"segment_ms", 100.0, 1000.0, kLog};
  const ParamBound ns_prob{"probability", 0.1, 0.5, kLin};
  const ParamBound snr{"snr_db", -5.0, 25.0, kLin};
  const ParamBound waveform{"waveform", 0, 2, kInt};
  return {
      {"bandpass", "band limiting", 5, {{"center_hz", 300.0, 4000.0, kLog}, q}},
      {"highpass", "band limiting", 5, {{"cutoff_hz", 80.0, 1500.0, kLog}, q}},
      {"lowpass", "band limiting", 20, {{"cutoff_hz", 800.0, 7200.0, kLog}, q}},
      {"downsample", "band limiting", 30, {{"rate_hz", 2000.0, 8000.0, kLog}, {"method", 0, 1, kInt}}},
      {"mulaw", "codec", 3, {{"mu", 15.0, 255.0, kLog}, {"bits", 4, 8, kInt}}},
      {"plosive", "distortion", 10, {{"freq_hz", 100.0, 400.0, kLog}, {"gain_db", 3.0, 15.0, kLin}}},
      {"sibilance", "distortion", 10, {{"freq_hz", 3000.0, 6000.0, kLog}, {"gain_db", 3.0, 15.0, kLin}}},
      {"overdrive", "distortion", 5, {{"gain_db", 0.0, 30.0, kLin}, {"asymmetry", 0.0, 0.5, kLin}, {"mix", 0.5, 1.0, kLin}}},
      {"clip", "distortion", 8, {{"threshold", 0.1, 0.9, kLin}}},
      {"compressor", "loudness dynamics", 10,
       {{"threshold_db", -40.0, -10.0, kLin}, {"ratio", 2.0, 10.0, kLin}, {"attack_ms", 1.0, 20.0, kLog},
        {"release_ms", 20.0, 300.0, kLog}}},
      {"destroy_levels", "loudness dynamics", 20,
       {{"segment_ms", 50.0, 500.0, kLog}, {"probability", 0.1, 0.5, kLin}, {"max_gain_db", 3.0, 20.0, kLin}}},
      {"noise_gate", "loudness dynamics", 10,
       {{"threshold_db", -50.0, -25.0, kLin}, {"range_db", 20.0, 80.0, kLin}, {"attack_ms", 0.5, 10.0, kLog},
        {"release_ms", 20.0, 200.0, kLog}}},
      {"simple_compressor", "loudness dynamics", 3, {{"ratio", 1.5, 6.0, kLin}}},
      {"simple_expander", "loudness dynamics", 2, {{"ratio", 1.5, 4.0, kLin}}},
      {"tremolo", "loudness dynamics", 2, {{"rate_hz", 1.0, 10.0, kLog}, {"depth", 0.1, 0.9, kLin}}},
      {"band_reject", "equalization", 5, {{"center_hz", 200.0, 6000.0, kLog}, q}},
      {"random_eq", "equalization", 15, {{"bands", 2, 6, kInt}, {"max_gain_db", 3.0, 12.0, kLin}}},
      {"two_pole", "equalization", 10,
       {{"freq_hz", 150.0, 5000.0, kLog}, {"radius", 0.9, 0.995, kLin}, {"mix", 0.3, 1.0, kLin}}},
      {"additive_noise", "recorded noise", 150, {snr}, true},
      {"impulsive_noise", "recorded noise", 30,
       {snr, {"probability", 0.01, 0.2, kLin}, {"burst_ms", 1.0, 20.0, kLog}}},
      {"algorithmic_reverb", "reverb/delay", 30, {{"rt60_s", 0.2, 2.0, kLog}, {"wet", 0.1, 0.6, kLin}}},
      {"rir_convolution", "reverb/delay", 120, {{"rt60_s", 0.1, 1.2, kLog}, {"drr_db", -3.0, 15.0, kLin}}, false,
       true, true},
      {"short_delay", "reverb/delay", 3, {{"delay_ms", 0.5, 20.0, kLog}, {"gain", 0.2, 0.9, kLin}}},
      {"delay", "reverb/delay", 0, {{"samples", 1, 800, kInt}}, false, false, true},
      {"griffin_lim", "spectral manipulation", 3, {window, {"iterations", 4, 32, kInt}}},
      {"phase_randomization", "spectral manipulation", 1, {window, {"amount", 0.1, 1.0, kLin}}},
      {"phase_shuffle", "spectral manipulation", 1, {window, {"amount", 0.1, 1.0, kLin}}},
      {"spectral_holes", "spectral manipulation", 1, {window, {"amount", 0.01, 0.2, kLin}}},
      {"spectral_noise", "spectral manipulation", 1, {window, {"amount", 0.05, 0.5, kLin}}},
      {"colored_noise", "synthetic noise", 15, {snr, {"slope_db", -6.0, 6.0, kLin}}},
      {"dc_offset", "synthetic noise", 1, {{"amplitude", -0.2, 0.2, kLin}}},
      {"electricity_tone", "synthetic noise", 6, {{"snr_db", 0.0, 30.0, kLin}, {"freq_hz", 48.0, 62.0, kLin}, waveform}},
      {"ns_colored_noise", "synthetic noise", 5, {snr, {"slope_db", -6.0, 6.0, kLin}, ns_len, ns_prob}},
      {"ns_dc_offset", "synthetic noise", 1, {{"amplitude", -0.2, 0.2, kLin}, ns_len, ns_prob}},
      {"ns_electricity_tone", "synthetic noise", 3,
       {{"snr_db", 0.0, 30.0, kLin}, {"freq_hz", 48.0, 62.0, kLin}, waveform, ns_len, ns_prob}},
      {"ns_random_tone", "synthetic noise", 1,
       {{"snr_db", 0.0, 30.0, kLin}, {"freq_hz", 100.0, 4000.0, kLog}, waveform, ns_len, ns_prob}},
      {"random_tone", "synthetic noise", 2, {{"snr_db", 0.0, 30.0, kLin}, {"freq_hz", 100.0, 4000.0, kLog}, waveform}},
      {"frame_shuffle", "transmission", 10, {{"length_ms", 5.0, 40.0, kLog}, seg_prob}},
      {"insert_attenuation", "transmission", 3, {seg_len, seg_prob, {"gain_db", -40.0, -6.0, kLin}}},
      {"insert_noise", "transmission", 5, {seg_len, seg_prob, {"snr_db", -10.0, 10.0, kLin}}},
      {"perturb_amplitude", "transmission", 1, {seg_len, seg_prob, {"gain_db", 1.0, 6.0, kLin}}},
      {"sample_duplicate", "transmission", 2, {{"length_ms", 5.0, 50.0, kLog}, seg_prob}},
      {"silent_gap", "transmission", 15, {seg_len, seg_prob}},
      {"telephone", "transmission", 10,
       {{"low_hz", 200.0, 400.0, kLog}, {"high_hz", 3000.0, 3600.0, kLog}, {"ratio", 2.0, 8.0, kLin},
        {"filter_order", 0, 1, kInt}}},
  };
}

// ---------------------------------------------------------------------------
// Shared helpers

double param(const DistortionSpec& spec, const char* name) {
  const auto it = spec.params.find(name);
  if (it == spec.params.end()) throw ConfigError(spec.type + ": missing parameter '" + name + "'");
  if (!std::isfinite(it->second)) throw ConfigError(spec.type + ": parameter '" + name + "' is not finite");
  return it->second;
}

double frequency(const DistortionSpec& spec, const char* name, double fs) {
  const double f = param(spec, name);
  if (!(f > 0.0) || !(f < fs / 2.0)) {
    throw ConfigError(spec.type + ": " + name + " must lie in (0, " + std::to_string(fs / 2.0) + ") Hz");
  }
  return f;
}

std::size_t ms_to_samples(double ms, int fs) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ms * fs / 1000.0)));
}

double db_to_gain(double db) { return std::pow(10.0, db / 20.0); }

double power(const Samples& x) {
  if (x.empty()) return 0.0;
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / static_cast<double>(x.size());
}

double peak(const Samples& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// Adds `noise` scaled so that 10 log10(P_x / P_noise) equals snr_db exactly.
Samples add_at_snr(const Samples& x, const Samples& noise, double snr_db, const std::string& type) {
  const double px = power(x);
  const double pn = power(noise);
  if (px == 0.0) {
    warn(type + ": silent input, SNR undefined; leaving the signal unchanged");
    return x;
  }
  if (pn == 0.0) return x;
  const double g = std::sqrt(px / (pn * std::pow(10.0, snr_db / 10.0)));
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + g * noise[i];
  return y;
}

Samples white(std::size_t n, Rng& rng) {
  Samples z(n);
  rng.fill_normal(z);
  return z;
}

// Gaussian noise with a power spectrum sloping by slope_db per octave.
Samples colored(std::size_t n, double slope_db, int fs, Rng& rng) {
  Samples z = white(n, rng);
  auto spec = rfft(z);
  const double exponent = slope_db / (20.0 * std::log10(2.0));
  const double ref = 1000.0;
  spec[0] = 0.0;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    spec[k] *= std::pow(f / ref, exponent);
  }
  Samples out(n);
  irfft(spec, out);
  return out;
}

// Band-limited periodic waveform: 0 sine, 1 square (odd harmonics), 2 sawtooth.
Samples tone(std::size_t n, double freq, int waveform, int fs, double phase) {
  Samples y(n, 0.0);
  const int max_harmonic = waveform == 0 ? 1 : static_cast<int>(std::floor((fs / 2.0) / freq));
  for (int h = 1; h <= max_harmonic; ++h) {
    if (waveform == 1 && h % 2 == 0) continue;
    if (h * freq >= fs / 2.0) break;
    const double amp = 1.0 / h;
    const double w = 2.0 * pi * h * freq / fs;
    for (std::size_t i = 0; i < n; ++i) y[i] += amp * std::sin(w * static_cast<double>(i) + h * phase);
  }
  return y;
}

Samples masked(Samples x, const std::vector<char>& active, std::size_t block) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!active[i / block]) x[i] = 0.0;
  }
  return x;
}

Samples filtered(Samples x, const Biquad& f) {
  f.process(x);
  return x;
}

// Feed-forward compressor on a peak envelope; ratio 1 leaves the input untouched.
Samples compress(const Samples& x, int fs, double threshold_db, double ratio, double attack_ms, double release_ms) {
  if (!(ratio >= 1.0)) throw ConfigError("compressor: ratio must be >= 1");
  const double aa = std::exp(-1000.0 / (std::max(attack_ms, 1e-3) * fs));
  const double ar = std::exp(-1000.0 / (std::max(release_ms, 1e-3) * fs));
  double env = 0.0;
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::abs(x[i]);
    const double a = e > env ? aa : ar;
    env = a * env + (1.0 - a) * e;
    const double level = 20.0 * std::log10(std::max(env, 1e-10));
    const double over = level - threshold_db;
    const double gain_db = over > 0.0 ? -over * (1.0 - 1.0 / ratio) : 0.0;
    y[i] = x[i] * db_to_gain(gain_db);
  }
  return y;
}

// FFT convolution truncated to the input length; short kernels run directly.
Samples convolve(const Samples& x, const Samples& h) {
  Samples y(x.size(), 0.0);
  if (h.size() <= 256) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double acc = 0.0;
      const std::size_t kmax = std::min(h.size(), i + 1);
      for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * x[i - k];
      y[i] = acc;
    }
    return y;
  }
  std::size_t n = 1;
  while (n < x.size() + h.size() - 1) n <<= 1;
  Samples px(n, 0.0), ph(n, 0.0);
  std::copy(x.begin(), x.end(), px.begin());
  std::copy(h.begin(), h.end(), ph.begin());
  auto fx = rfft(px);
  const auto fh = rfft(ph);
  for (std::size_t k = 0; k < fx.size(); ++k) fx[k] *= fh[k];
  Samples full(n);
  irfft(fx, full);
  std::copy(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(x.size()), y.begin());
  return y;
}

StftConfig spectral_config(const DistortionSpec& spec, std::size_t length) {
  const auto log2 = static_cast<int>(param(spec, "window_log2"));
  if (log2 < 4 || log2 > 14) throw ConfigError(spec.type + ": window_log2 must be in [4, 14]");
  const std::size_t frame = std::size_t{1} << log2;
  if (length < frame) throw ConfigError(spec.type + ": signal shorter than the analysis window");
  return StftConfig{frame, frame / 4, WindowType::kHann};
}

double amount(const DistortionSpec& spec) {
  const double a = param(spec, "amount");
  if (a < 0.0 || a > 1.0) throw ConfigError(spec.type + ": amount must be in [0, 1]");
  return a;
}

double probability(const DistortionSpec& spec) {
  const double p = param(spec, "probability");
  if (p < 0.0 || p > 1.0) throw ConfigError(spec.type + ": probability must be in [0, 1]");
  return p;
}

// ---------------------------------------------------------------------------
// Primitives. Each returns a buffer of the input length.

using Primitive = std::function<Samples(const Samples&, int, const DistortionSpec&, const DistortionResources&)>;

Samples do_bandpass(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return filtered(x, Biquad::bandpass(frequency(s, "center_hz", fs), param(s, "q"), fs));
}
Samples do_highpass(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return filtered(x, Biquad::highpass(frequency(s, "cutoff_hz", fs), param(s, "q"), fs));
}
Samples do_lowpass(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return filtered(x, Biquad::lowpass(frequency(s, "cutoff_hz", fs), param(s, "q"), fs));
}

Samples do_downsample(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  // Rates are rounded to 50 Hz to keep the polyphase ratio small.
  const int rate = static_cast<int>(std::lround(param(s, "rate_hz") / 50.0)) * 50;
  if (rate <= 0) throw ConfigError("downsample: rate must be positive");
  if (rate >= fs) return x;
  const auto method = static_cast<int>(param(s, "method"));
  Samples y(x.size());
  if (method == 0) {
    auto low = resample(x, fs, rate);
    auto back = resample(low, rate, fs);
    back.resize(x.size(), 0.0);
    return back;
  }
  // Sample and hold without anti-alias filtering.
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto slot = static_cast<std::size_t>(std::floor(static_cast<double>(i) * rate / fs));
    const auto src = static_cast<std::size_t>(std::ceil(static_cast<double>(slot) * fs / rate));
    y[i] = x[std::min(src, i)];
  }
  return y;
}

Samples do_mulaw(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double mu = param(s, "mu");
  const auto bits = static_cast<int>(param(s, "bits"));
  if (!(mu > 0.0) || bits < 2 || bits > 24) throw ConfigError("mulaw: need mu > 0 and bits in [2, 24]");
  const double levels = std::ldexp(1.0, bits - 1) - 1.0;
  const double log1mu = std::log1p(mu);
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::clamp(x[i], -1.0, 1.0);
    const double c = std::copysign(std::log1p(mu * std::abs(v)) / log1mu, v);
    const double q = std::round(c * levels) / levels;
    y[i] = std::copysign(std::expm1(std::abs(q) * log1mu) / mu, q);
  }
  return y;
}

Samples do_plosive(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return filtered(x, Biquad::lowshelf(frequency(s, "freq_hz", fs), param(s, "gain_db"), fs));
}
Samples do_sibilance(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return filtered(x, Biquad::highshelf(frequency(s, "freq_hz", fs), param(s, "gain_db"), fs));
}

Samples do_overdrive(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double g = db_to_gain(param(s, "gain_db"));
  const double b = param(s, "asymmetry");
  const double mix = param(s, "mix");
  const double offset = std::tanh(b);
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double shaped = std::tanh(g * x[i] + b) - offset;
    y[i] = mix == 0.0 ? x[i] : (1.0 - mix) * x[i] + mix * shaped;
  }
  return y;
}

Samples do_clip(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double t = param(s, "threshold");
  if (!(t > 0.0)) throw ConfigError("clip: threshold must be positive");
  const double level = t * peak(x);
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], -level, level);
  return y;
}

Samples do_compressor(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return compress(x, fs, param(s, "threshold_db"), param(s, "ratio"), param(s, "attack_ms"), param(s, "release_ms"));
}

Samples do_destroy_levels(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const std::size_t block = ms_to_samples(param(s, "segment_ms"), fs);
  const auto mask = temporal_mask(x.size(), block, probability(s), rng);
  const double max_db = param(s, "max_gain_db");
  Samples y = x;
  for (std::size_t b = 0; b < mask.size(); ++b) {
    if (!mask[b]) continue;
    const double g = db_to_gain(rng.uniform(-max_db, max_db));
    for (std::size_t i = b * block; i < std::min(x.size(), (b + 1) * block); ++i) y[i] *= g;
  }
  return y;
}

Samples do_noise_gate(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  const double threshold = param(s, "threshold_db");
  const double floor_gain = db_to_gain(-param(s, "range_db"));
  const double aa = std::exp(-1000.0 / (param(s, "attack_ms") * fs));
  const double ar = std::exp(-1000.0 / (param(s, "release_ms") * fs));
  double env = 0.0;
  double gain = 1.0;
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::abs(x[i]);
    env = e > env ? aa * env + (1.0 - aa) * e : ar * env + (1.0 - ar) * e;
    const double level = 20.0 * std::log10(std::max(env, 1e-10));
    const double target = level >= threshold ? 1.0 : floor_gain;
    const double a = target > gain ? aa : ar;
    gain = target == gain ? gain : a * gain + (1.0 - a) * target;
    y[i] = x[i] * gain;
  }
  return y;
}

// Memoryless power law around the signal peak: ratio > 1 compresses, < 1 expands.
Samples power_law(const Samples& x, double exponent) {
  const double p = peak(x);
  if (p == 0.0 || exponent == 1.0) return x;
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::copysign(p * std::pow(std::abs(x[i]) / p, exponent), x[i]);
  return y;
}

Samples do_simple_compressor(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double r = param(s, "ratio");
  if (!(r >= 1.0)) throw ConfigError("simple_compressor: ratio must be >= 1");
  return power_law(x, 1.0 / r);
}
Samples do_simple_expander(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double r = param(s, "ratio");
  if (!(r >= 1.0)) throw ConfigError("simple_expander: ratio must be >= 1");
  return power_law(x, r);
}

Samples do_tremolo(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const double phase = rng.uniform(0.0, 2.0 * pi);
  const double w = 2.0 * pi * param(s, "rate_hz") / fs;
  const double depth = param(s, "depth");
  if (depth < 0.0 || depth > 1.0) throw ConfigError("tremolo: depth must be in [0, 1]");
  if (depth == 0.0) return x;
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] * (1.0 - depth * 0.5 * (1.0 - std::cos(w * static_cast<double>(i) + phase)));
  }
  return y;
}

Samples do_band_reject(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  return filtered(x, Biquad::notch(frequency(s, "center_hz", fs), param(s, "q"), fs));
}

Samples do_random_eq(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto bands = static_cast<int>(param(s, "bands"));
  const double max_db = param(s, "max_gain_db");
  Samples y = x;
  for (int b = 0; b < bands; ++b) {
    const double f = std::exp(rng.uniform(std::log(60.0), std::log(0.45 * fs)));
    const double g = rng.uniform(-max_db, max_db);
    const double q = rng.uniform(0.5, 5.0);
    Biquad::peaking(f, q, g, fs).process(y);
  }
  return y;
}

Samples do_two_pole(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  const double mix = param(s, "mix");
  if (mix == 0.0) return x;
  const auto r = filtered(x, Biquad::resonator(frequency(s, "freq_hz", fs), param(s, "radius"), fs));
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (1.0 - mix) * x[i] + mix * r[i];
  return y;
}

const Signal& lookup(const std::map<std::string, Signal>& pool, const std::string& name, const std::string& type) {
  const auto it = pool.find(name);
  if (it == pool.end()) throw ConfigError(type + ": resource '" + name + "' is not loaded");
  if (it->second.samples.empty()) throw ConfigError(type + ": resource '" + name + "' is empty");
  return it->second;
}

Samples at_rate(const Signal& s, int fs) { return s.sample_rate == fs ? s.samples : resample(s.samples, s.sample_rate, fs); }

Samples do_additive_noise(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources& res) {
  if (s.resource.empty()) throw ConfigError("additive_noise: a noise resource is required");
  const Samples pool = at_rate(lookup(res.noises, s.resource, s.type), fs);
  Rng rng(s.seed);
  const auto start = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(pool.size()) - 1));
  Samples noise(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) noise[i] = pool[(start + i) % pool.size()];
  return add_at_snr(x, noise, param(s, "snr_db"), s.type);
}

Samples do_impulsive_noise(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const std::size_t block = ms_to_samples(100.0, fs);
  const auto mask = temporal_mask(x.size(), block, probability(s), rng);
  const std::size_t burst = ms_to_samples(param(s, "burst_ms"), fs);
  const double tau = std::max(1.0, static_cast<double>(burst) / 3.0);
  Samples noise(x.size(), 0.0);
  for (std::size_t b = 0; b < mask.size(); ++b) {
    if (!mask[b]) continue;
    const std::size_t start = b * block + static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(block) - 1));
    for (std::size_t k = 0; k < burst && start + k < x.size(); ++k) {
      noise[start + k] += rng.normal() * std::exp(-static_cast<double>(k) / tau);
    }
  }
  return add_at_snr(x, noise, param(s, "snr_db"), s.type);
}

Samples do_algorithmic_reverb(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  const double wet = param(s, "wet");
  const double rt60 = param(s, "rt60_s");
  if (!(rt60 > 0.0)) throw ConfigError("algorithmic_reverb: rt60_s must be positive");
  if (wet == 0.0) return x;
  // Parallel feedback combs followed by series allpasses.
  constexpr double kCombMs[] = {29.7, 37.1, 41.1, 43.7};
  constexpr double kAllpassMs[] = {5.0, 1.7};
  Samples rev(x.size(), 0.0);
  for (double ms : kCombMs) {
    const std::size_t d = ms_to_samples(ms, fs);
    const double g = std::pow(10.0, -3.0 * static_cast<double>(d) / (rt60 * fs));
    Samples buf(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      buf[i] = x[i] + (i >= d ? g * buf[i - d] : 0.0);
      rev[i] += 0.25 * buf[i];
    }
  }
  for (double ms : kAllpassMs) {
    const std::size_t d = ms_to_samples(ms, fs);
    constexpr double g = 0.7;
    Samples out(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double delayed_in = i >= d ? rev[i - d] : 0.0;
      const double delayed_out = i >= d ? out[i - d] : 0.0;
      out[i] = -g * rev[i] + delayed_in + g * delayed_out;
    }
    rev.swap(out);
  }
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (1.0 - wet) * x[i] + wet * rev[i];
  return y;
}

Samples synthetic_rir(double rt60, double drr_db, int fs, Rng& rng) {
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(rt60 * fs));
  Samples h(n, 0.0);
  const double decay = std::log(1000.0) / (rt60 * fs);  // 60 dB over rt60
  double tail = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    h[i] = rng.normal() * std::exp(-decay * static_cast<double>(i));
    tail += h[i] * h[i];
  }
  const double scale = std::sqrt(1.0 / (tail * std::pow(10.0, drr_db / 10.0)));
  for (std::size_t i = 1; i < n; ++i) h[i] *= scale;
  h[0] = 1.0;
  return h;
}

Samples do_rir_convolution(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources& res) {
  Samples h;
  if (s.resource.empty()) {
    Rng rng(s.seed);
    h = synthetic_rir(param(s, "rt60_s"), param(s, "drr_db"), fs, rng);
  } else {
    h = at_rate(lookup(res.rirs, s.resource, s.type), fs);
  }
  Samples y = convolve(x, h);
  // Keep the input level.
  const double px = power(x), py = power(y);
  if (px > 0.0 && py > 0.0) {
    const double g = std::sqrt(px / py);
    for (double& v : y) v *= g;
  }
  return y;
}

Samples do_short_delay(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  const std::size_t d = ms_to_samples(param(s, "delay_ms"), fs);
  const double g = param(s, "gain");
  Samples y = x;
  if (g == 0.0) return y;
  for (std::size_t i = d; i < x.size(); ++i) y[i] += g * x[i - d];
  return y;
}

Samples do_delay(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double d = param(s, "samples");
  if (d < 0.0) throw ConfigError("delay: samples must be non-negative");
  const auto n = static_cast<std::size_t>(d);
  Samples y(x.size(), 0.0);
  for (std::size_t i = n; i < x.size(); ++i) y[i] = x[i - n];
  return y;
}

Samples do_griffin_lim(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const auto cfg = spectral_config(s, x.size());
  const auto iterations = static_cast<int>(param(s, "iterations"));
  const auto target = stft(x, cfg);
  const auto mag = target.magnitude();
  Rng rng(s.seed);
  Spectrogram est = target;
  for (std::size_t i = 0; i < est.data.size(); ++i) est.data[i] = std::polar(mag[i], rng.uniform(-pi, pi));
  Samples y = istft(est, cfg, x.size());
  for (int it = 0; it < iterations; ++it) {
    const auto cur = stft(y, cfg);
    for (std::size_t i = 0; i < est.data.size(); ++i) {
      const double a = std::abs(cur.data[i]);
      est.data[i] = a > 0.0 ? cur.data[i] * (mag[i] / a) : Complex(mag[i], 0.0);
    }
    y = istft(est, cfg, x.size());
  }
  return y;
}

Samples do_phase_randomization(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const auto cfg = spectral_config(s, x.size());
  const double a = amount(s);
  if (a == 0.0) return x;
  auto spec = stft(x, cfg);
  Rng rng(s.seed);
  for (auto& v : spec.data) v *= std::polar(1.0, a * rng.uniform(-pi, pi));
  return istft(spec, cfg, x.size());
}

Samples do_phase_shuffle(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const auto cfg = spectral_config(s, x.size());
  const double a = amount(s);
  if (a == 0.0) return x;
  auto spec = stft(x, cfg);
  Rng rng(s.seed);
  std::vector<std::size_t> chosen;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    chosen.clear();
    for (std::size_t k = 0; k < spec.bins; ++k) {
      if (rng.uniform() < a) chosen.push_back(k);
    }
    std::vector<double> phases;
    for (std::size_t k : chosen) phases.push_back(std::arg(spec.at(f, k)));
    std::shuffle(phases.begin(), phases.end(), rng.engine());
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      auto& v = spec.at(f, chosen[j]);
      v = std::polar(std::abs(v), phases[j]);
    }
  }
  return istft(spec, cfg, x.size());
}

Samples do_spectral_holes(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const auto cfg = spectral_config(s, x.size());
  const double a = amount(s);
  if (a == 0.0) return x;
  auto spec = stft(x, cfg);
  Rng rng(s.seed);
  const std::size_t max_w = std::min<std::size_t>(10, spec.frames);
  const std::size_t max_h = std::min<std::size_t>(20, spec.bins);
  const double target = a * static_cast<double>(spec.frames * spec.bins);
  double covered = 0.0;
  while (covered < target) {
    const auto w = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(max_w)));
    const auto h = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(max_h)));
    const auto f0 = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(spec.frames - w)));
    const auto k0 = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(spec.bins - h)));
    for (std::size_t f = f0; f < f0 + w; ++f) {
      for (std::size_t k = k0; k < k0 + h; ++k) spec.at(f, k) = 0.0;
    }
    covered += static_cast<double>(w * h);
  }
  return istft(spec, cfg, x.size());
}

Samples do_spectral_noise(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const auto cfg = spectral_config(s, x.size());
  const double a = amount(s);
  if (a == 0.0) return x;
  auto spec = stft(x, cfg);
  Rng rng(s.seed);
  for (auto& v : spec.data) {
    const double m = std::abs(v);
    v += a * m * Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
  }
  return istft(spec, cfg, x.size());
}

Samples do_colored_noise(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  return add_at_snr(x, colored(x.size(), param(s, "slope_db"), fs, rng), param(s, "snr_db"), s.type);
}

Samples do_dc_offset(const Samples& x, int, const DistortionSpec& s, const DistortionResources&) {
  const double a = param(s, "amplitude");
  Samples y = x;
  for (double& v : y) v += a;
  return y;
}

Samples periodic(const Samples& x, int fs, const DistortionSpec& s, Rng& rng) {
  const auto wf = static_cast<int>(param(s, "waveform"));
  if (wf < 0 || wf > 2) throw ConfigError(s.type + ": waveform must be 0 (sine), 1 (square) or 2 (sawtooth)");
  return tone(x.size(), frequency(s, "freq_hz", fs), wf, fs, rng.uniform(0.0, 2.0 * pi));
}

Samples do_tone(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  return add_at_snr(x, periodic(x, fs, s, rng), param(s, "snr_db"), s.type);
}

// Non-stationary variants: the stationary disturbance gated by a block mask.
Samples nonstationary(const Samples& x, int fs, const DistortionSpec& s, Rng& rng, const Samples& disturbance) {
  const std::size_t block = ms_to_samples(param(s, "segment_ms"), fs);
  const auto mask = temporal_mask(x.size(), block, probability(s), rng);
  return masked(disturbance, mask, block);
}

Samples scaled_to_snr(const Samples& x, const Samples& noise, double snr_db) {
  const double px = power(x), pn = power(noise);
  if (px == 0.0 || pn == 0.0) return Samples(x.size(), 0.0);
  const double g = std::sqrt(px / (pn * std::pow(10.0, snr_db / 10.0)));
  Samples out(noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) out[i] = g * noise[i];
  return out;
}

Samples plus(const Samples& x, const Samples& d) {
  Samples y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + d[i];
  return y;
}

Samples do_ns_colored_noise(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto noise = scaled_to_snr(x, colored(x.size(), param(s, "slope_db"), fs, rng), param(s, "snr_db"));
  return plus(x, nonstationary(x, fs, s, rng, noise));
}

Samples do_ns_dc_offset(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  return plus(x, nonstationary(x, fs, s, rng, Samples(x.size(), param(s, "amplitude"))));
}

Samples do_ns_tone(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto noise = scaled_to_snr(x, periodic(x, fs, s, rng), param(s, "snr_db"));
  return plus(x, nonstationary(x, fs, s, rng, noise));
}

struct Segments {
  std::size_t block;
  std::vector<char> mask;
};

Segments segments(const Samples& x, int fs, const DistortionSpec& s, Rng& rng) {
  const std::size_t block = ms_to_samples(param(s, "length_ms"), fs);
  return {block, temporal_mask(x.size(), block, probability(s), rng)};
}

template <typename Fn>
void for_active(const Segments& seg, std::size_t n, Fn&& fn) {
  for (std::size_t b = 0; b < seg.mask.size(); ++b) {
    if (seg.mask[b]) fn(b * seg.block, std::min(n, (b + 1) * seg.block));
  }
}

Samples do_frame_shuffle(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto seg = segments(x, fs, s, rng);
  Samples y = x;
  for (std::size_t b = 0; b + 1 < seg.mask.size(); ++b) {
    if (!seg.mask[b]) continue;
    // Swap with the following block, which must be full length.
    const std::size_t a0 = b * seg.block, b0 = (b + 1) * seg.block;
    if (b0 + seg.block > x.size()) break;
    std::swap_ranges(y.begin() + static_cast<std::ptrdiff_t>(a0), y.begin() + static_cast<std::ptrdiff_t>(b0),
                     y.begin() + static_cast<std::ptrdiff_t>(b0));
    ++b;
  }
  return y;
}

Samples do_insert_attenuation(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto seg = segments(x, fs, s, rng);
  const double g = db_to_gain(param(s, "gain_db"));
  Samples y = x;
  for_active(seg, x.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) y[i] *= g;
  });
  return y;
}

Samples do_insert_noise(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto seg = segments(x, fs, s, rng);
  const auto noise = scaled_to_snr(x, white(x.size(), rng), param(s, "snr_db"));
  Samples y = x;
  for_active(seg, x.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) y[i] += noise[i];
  });
  return y;
}

Samples do_perturb_amplitude(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto seg = segments(x, fs, s, rng);
  const double max_db = param(s, "gain_db");
  Samples y = x;
  for_active(seg, x.size(), [&](std::size_t lo, std::size_t hi) {
    const double g = db_to_gain(rng.uniform(-max_db, max_db));
    for (std::size_t i = lo; i < hi; ++i) y[i] *= g;
  });
  return y;
}

Samples do_sample_duplicate(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto seg = segments(x, fs, s, rng);
  Samples y;
  y.reserve(x.size());
  for (std::size_t b = 0; b < seg.mask.size() && y.size() < x.size(); ++b) {
    const auto lo = x.begin() + static_cast<std::ptrdiff_t>(b * seg.block);
    const auto hi = x.begin() + static_cast<std::ptrdiff_t>(std::min(x.size(), (b + 1) * seg.block));
    y.insert(y.end(), lo, hi);
    if (seg.mask[b]) y.insert(y.end(), lo, hi);
  }
  y.resize(x.size());
  return y;
}

Samples do_silent_gap(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  Rng rng(s.seed);
  const auto seg = segments(x, fs, s, rng);
  Samples y = x;
  for_active(seg, x.size(), [&](std::size_t lo, std::size_t hi) { std::fill(y.begin() + static_cast<std::ptrdiff_t>(lo), y.begin() + static_cast<std::ptrdiff_t>(hi), 0.0); });
  return y;
}

Samples do_telephone(const Samples& x, int fs, const DistortionSpec& s, const DistortionResources&) {
  const double lo = frequency(s, "low_hz", fs);
  const double hi = frequency(s, "high_hz", fs);
  if (!(lo < hi)) throw ConfigError("telephone: low_hz must be below high_hz");
  const int stages = static_cast<int>(param(s, "filter_order")) + 1;
  Samples y = x;
  for (int k = 0; k < stages; ++k) {
    Biquad::highpass(lo, std::numbers::sqrt2 / 2.0, fs).process(y);
    Biquad::lowpass(hi, std::numbers::sqrt2 / 2.0, fs).process(y);
  }
  const double p = peak(y);
  if (p == 0.0) return y;
  return compress(y, fs, 20.0 * std::log10(p) - 20.0, param(s, "ratio"), 5.0, 50.0);
}

const std::map<std::string, Primitive>& primitives() {
  static const std::map<std::string, Primitive> table{
      {"bandpass", do_bandpass},
      {"highpass", do_highpass},
      {"lowpass", do_lowpass},
      {"downsample", do_downsample},
      {"mulaw", do_mulaw},
      {"plosive", do_plosive},
      {"sibilance", do_sibilance},
      {"overdrive", do_overdrive},
      {"clip", do_clip},
      {"compressor", do_compressor},
      {"destroy_levels", do_destroy_levels},
      {"noise_gate", do_noise_gate},
      {"simple_compressor", do_simple_compressor},
      {"simple_expander", do_simple_expander},
      {"tremolo", do_tremolo},
      {"band_reject", do_band_reject},
      {"random_eq", do_random_eq},
      {"two_pole", do_two_pole},
      {"additive_noise", do_additive_noise},
      {"impulsive_noise", do_impulsive_noise},
      {"algorithmic_reverb", do_algorithmic_reverb},
      {"rir_convolution", do_rir_convolution},
      {"short_delay", do_short_delay},
      {"delay", do_delay},
      {"griffin_lim", do_griffin_lim},
      {"phase_randomization", do_phase_randomization},
      {"phase_shuffle", do_phase_shuffle},
      {"spectral_holes", do_spectral_holes},
      {"spectral_noise", do_spectral_noise},
      {"colored_noise", do_colored_noise},
      {"dc_offset", do_dc_offset},
      {"electricity_tone", do_tone},
      {"ns_colored_noise", do_ns_colored_noise},
      {"ns_dc_offset", do_ns_dc_offset},
      {"ns_electricity_tone", do_ns_tone},
      {"ns_random_tone", do_ns_tone},
      {"random_tone", do_tone},
      {"frame_shuffle", do_frame_shuffle},
      {"insert_attenuation", do_insert_attenuation},
      {"insert_noise", do_insert_noise},
      {"perturb_amplitude", do_perturb_amplitude},
      {"sample_duplicate", do_sample_duplicate},
      {"silent_gap", do_silent_gap},
      {"telephone", do_telephone},
  };
  return table;
}

// Limits |y| below the guard ceiling with a smooth knee one unit below it. Runs only
// when some sample exceeds the ceiling; returns whether it ran.
bool guard(Samples& y) {
  if (peak(y) <= kGuardCeiling) return false;
  constexpr double knee = kGuardCeiling - 1.0;
  for (double& v : y) {
    const double a = std::abs(v);
    if (a > knee) v = std::copysign(knee + std::tanh(a - knee), v);
  }
  return true;
}

[[noreturn]] void rethrow_with_index(std::size_t index, const std::string& type) {
  const std::string prefix = "distortion " + std::to_string(index) + " (" + type + "): ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  }
}

}  // namespace

double ParamBound::draw(Rng& rng) const {
  switch (scale) {
    case ParamScale::kLog:
      return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    case ParamScale::kInteger:
      return static_cast<double>(rng.integer(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
    case ParamScale::kLinear:
      break;
  }
  return rng.uniform(lo, hi);
}

const std::vector<DistortionKind>& distortion_kinds() {
  static const std::vector<DistortionKind> kinds = build_kinds();
  return kinds;
}

const DistortionKind& distortion_kind(const std::string& type) {
  for (const auto& k : distortion_kinds()) {
    if (k.type == type) return k;
  }
  throw ConfigError("unknown distortion type '" + type + "'");
}

ChainConfig ChainConfig::defaults() {
  ChainConfig c;
  for (const auto& k : distortion_kinds()) {
    c.weights[k.type] = k.weight;
    c.bounds[k.type] = k.bounds;
  }
  return c;
}

void ChainConfig::validate() const {
  if (count_probabilities.empty()) throw ConfigError("chain config: count probabilities are empty");
  double sum = 0.0;
  for (double p : count_probabilities) {
    if (!(p >= 0.0)) throw ConfigError("chain config: count probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("chain config: count probabilities must sum to 1");
  for (const auto& [type, w] : weights) {
    distortion_kind(type);
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("chain config: weight of '" + type + "' must be >= 0");
  }
  for (const auto& [type, list] : bounds) {
    distortion_kind(type);
    for (const auto& b : list) {
      if (!(b.lo <= b.hi)) throw ConfigError("chain config: bound " + type + "." + b.name + " has lo > hi");
      if (b.scale == ParamScale::kLog && !(b.lo > 0.0)) {
        throw ConfigError("chain config: log-scaled bound " + type + "." + b.name + " must be positive");
      }
    }
  }
  if (enabled().empty()) throw ConfigError("chain config: no distortion type has positive weight");
}

std::vector<std::pair<std::string, double>> ChainConfig::enabled() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& k : distortion_kinds()) {
    const auto it = weights.find(k.type);
    if (it == weights.end() || !(it->second > 0.0)) continue;
    if (k.needs_noise && noise_pool.empty()) continue;
    out.emplace_back(k.type, it->second);
  }
  return out;
}

DistortionResources DistortionResources::load(const std::vector<std::string>& noise_paths,
                                              const std::vector<std::string>& rir_paths) {
  DistortionResources r;
  for (const auto& p : noise_paths) r.noises[p] = read_wav(p, WavReadOptions{true});
  for (const auto& p : rir_paths) r.rirs[p] = read_wav(p, WavReadOptions{true});
  return r;
}

std::vector<std::string> DistortionResources::noise_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : noises) out.push_back(name);
  return out;
}

std::vector<std::string> DistortionResources::rir_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : rirs) out.push_back(name);
  return out;
}

DistortionChain sample_chain(const ChainConfig& config, Rng& rng) {
  auto pool = config.enabled();
  if (pool.empty()) throw ConfigError("chain config: no distortion type has positive weight");
  const std::size_t count = std::min(rng.categorical(config.count_probabilities) + 1, pool.size());
  DistortionChain chain;
  std::vector<double> w;
  for (std::size_t i = 0; i < count; ++i) {
    w.clear();
    for (const auto& p : pool) w.push_back(p.second);
    const std::size_t pick = rng.categorical(w);
    const std::string type = pool[pick].first;
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    const auto& kind = distortion_kind(type);
    DistortionSpec spec;
    spec.type = type;
    const auto b = config.bounds.find(type);
    for (const auto& bound : b != config.bounds.end() ? b->second : kind.bounds) spec.params[bound.name] = bound.draw(rng);
    if (kind.needs_noise) {
      spec.resource = config.noise_pool[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(config.noise_pool.size()) - 1))];
    } else if (kind.uses_rir && !config.rir_pool.empty()) {
      spec.resource = config.rir_pool[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(config.rir_pool.size()) - 1))];
    }
    spec.seed = rng.next_u64();
    chain.push_back(std::move(spec));
  }
  return chain;
}

Signal apply_distortion(const Signal& x, const DistortionSpec& spec, const DistortionResources& resources) {
  const auto it = primitives().find(spec.type);
  if (it == primitives().end()) throw ConfigError("unknown distortion type '" + spec.type + "'");
  if (x.sample_rate <= 0) throw ConfigError(spec.type + ": sample rate must be positive");
  Signal out{it->second(x.samples, x.sample_rate, spec, resources), x.sample_rate};
  if (out.samples.size() != x.samples.size()) {
    throw NumericError(spec.type + ": primitive changed the signal length");
  }
  return out;
}

std::vector<char> temporal_mask(std::size_t length, std::size_t block, double probability, Rng& rng) {
  if (block == 0) throw ConfigError("temporal mask: block length must be positive");
  const std::size_t blocks = (length + block - 1) / block;
  std::vector<char> mask(blocks);
  for (auto& m : mask) m = rng.uniform() < probability ? 1 : 0;
  return mask;
}

std::int64_t alignment_offset(const std::vector<double>& clean, const std::vector<double>& distorted) {
  const auto r = normalized_xcorr(clean, distorted);
  const auto zero = static_cast<std::int64_t>(clean.size()) - 1;
  // Visit lags by increasing |lag| so that only a strictly larger value moves the peak.
  std::int64_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  constexpr double kTie = 1e-12;
  const auto max_abs = static_cast<std::int64_t>(std::max(clean.size(), distorted.size()));
  for (std::int64_t a = 0; a < max_abs; ++a) {
    for (const std::int64_t lag : {-a, a}) {
      const std::int64_t idx = lag + zero;
      if (idx < 0 || idx >= static_cast<std::int64_t>(r.size())) continue;
      const double v = r[static_cast<std::size_t>(idx)];
      if (v > best_value + kTie) {
        best_value = v;
        best = lag;
      }
      if (a == 0) break;
    }
  }
  return best;
}

DistortedPair apply_chain(const Signal& x, const DistortionChain& chain, const DistortionResources& resources) {
  if (chain.empty()) throw ConfigError("apply_chain: chain is empty");
  x.validate();
  Signal y = x;
  bool delayed = false;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& spec = chain[i];
    try {
      y = apply_distortion(y, spec, resources);
      delayed = delayed || distortion_kind(spec.type).may_delay;
    } catch (...) {
      rethrow_with_index(i, spec.type);
    }
    for (double v : y.samples) {
      if (!std::isfinite(v)) {
        throw NumericError("distortion " + std::to_string(i) + " (" + spec.type + "): non-finite output");
      }
    }
    if (guard(y.samples)) {
      std::ostringstream msg;
      msg << "distortion " << i << " (" << spec.type << "): output exceeded +-" << kGuardCeiling << ", soft-limited";
      warn(msg.str());
    }
  }
  DistortedPair pair{x, std::move(y), chain, 0};
  if (delayed) {
    const auto offset = alignment_offset(pair.clean.samples, pair.distorted.samples);
    pair.offset = offset;
    const auto n = static_cast<std::int64_t>(pair.clean.samples.size());
    const std::int64_t keep = n - std::abs(offset);
    if (keep <= 0) throw NumericError("apply_chain: alignment leaves no common support");
    auto& c = pair.clean.samples;
    auto& d = pair.distorted.samples;
    if (offset > 0) {
      c.resize(static_cast<std::size_t>(keep));
      d.erase(d.begin(), d.begin() + offset);
    } else if (offset < 0) {
      c.erase(c.begin(), c.begin() - offset);
      d.resize(static_cast<std::size_t>(keep));
    }
  }
  return pair;
}

std::string chain_to_json(const DistortionChain& chain) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : chain) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.params) params[k] = v;
    arr.push_back({{"type", s.type}, {"params", params}, {"resource", s.resource}, {"seed", s.seed}});
  }
  return arr.dump();
}

DistortionChain chain_from_json(const std::string& text) {
  DistortionChain chain;
  try {
    const auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw ConfigError("chain log: expected a JSON array");
    for (const auto& e : arr) {
      DistortionSpec s;
      s.type = e.at("type").get<std::string>();
      distortion_kind(s.type);
      for (const auto& [k, v] : e.at("params").items()) s.params[k] = v.get<double>();
      s.resource = e.value("resource", std::string{});
      s.seed = e.at("seed").get<std::uint64_t>();
      chain.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("chain log: ") + e.what());
  }
  return chain;
}

}  // namespace scorekit
