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

#include "scorekit/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

constexpr double kMelBreakHz = 1000.0;
constexpr double kMelLinearStep = 200.0 / 3.0;
const double kMelLogStep = std::log(6.4) / 27.0;

void require_rate(const Signal& s, int rate, const char* what) {
  if (s.sample_rate != rate) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(rate) + " Hz input, got " +
                      std::to_string(s.sample_rate) + " Hz");
  }
}

}  // namespace

double hz_to_mel(double hz) {
  if (hz < kMelBreakHz) return hz / kMelLinearStep;
  return kMelBreakHz / kMelLinearStep + std::log(hz / kMelBreakHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  const double break_mel = kMelBreakHz / kMelLinearStep;
  if (mel < break_mel) return mel * kMelLinearStep;
  return kMelBreakHz * std::exp(kMelLogStep * (mel - break_mel));
}

FeatureMatrix mel_filterbank(const MelConfig& config) {
  if (config.n_mels == 0 || config.frame == 0) throw ConfigError("mel filterbank: sizes must be positive");
  if (!(config.fmax > config.fmin) || config.fmax > config.sample_rate / 2.0) {
    throw ConfigError("mel filterbank: need fmin < fmax <= Nyquist");
  }
  const std::size_t bins = config.frame / 2 + 1;
  FeatureMatrix fb(config.n_mels, bins);
  const double mel_lo = hz_to_mel(config.fmin);
  const double mel_hi = hz_to_mel(config.fmax);
  std::vector<double> edges(config.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(config.n_mels + 1));
  }
  for (std::size_t m = 0; m < config.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * config.sample_rate / static_cast<double>(config.frame);
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb.at(m, k) = norm * std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

FeatureMatrix log_mel(const Signal& signal, const MelConfig& config) {
  require_rate(signal, config.sample_rate, "log_mel");
  if (signal.samples.size() < config.frame) throw ConfigError("log_mel: signal shorter than one frame");
  const auto fb = mel_filterbank(config);
  const auto spec = stft(signal.samples, StftConfig{config.frame, config.hop, WindowType::kHann});
  FeatureMatrix out(spec.frames, config.n_mels);
  std::vector<double> mag(spec.bins);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    for (std::size_t k = 0; k < spec.bins; ++k) mag[k] = std::abs(spec.at(f, k));
    for (std::size_t m = 0; m < config.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < spec.bins; ++k) acc += fb.at(m, k) * mag[k];
      out.at(f, m) = std::log(std::max(acc, config.log_floor));
    }
  }
  return out;
}

FeatureMatrix loudness_vad(const Signal& signal, const LoudnessVadConfig& config) {
  require_rate(signal, config.sample_rate, "loudness_vad");
  if (signal.samples.size() < config.frame) throw ConfigError("loudness_vad: signal shorter than one frame");
  if (config.hop == 0) throw ConfigError("loudness_vad: hop must be positive");
  const std::size_t frames = stft_frame_count(signal.samples.size(), config.hop);
  FeatureMatrix out(frames, 2);
  const auto len = static_cast<std::ptrdiff_t>(signal.samples.size());
  std::size_t below = config.hangover + 1;  // start inactive
  for (std::size_t f = 0; f < frames; ++f) {
    const auto start = static_cast<std::ptrdiff_t>(f * config.hop) - static_cast<std::ptrdiff_t>(config.frame / 2);
    double energy = 0.0;
    for (std::size_t i = 0; i < config.frame; ++i) {
      const auto idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx >= 0 && idx < len) energy += signal.samples[static_cast<std::size_t>(idx)] * signal.samples[static_cast<std::size_t>(idx)];
    }
    const double rms = std::sqrt(energy / static_cast<double>(config.frame));
    const double db = rms > 0.0 ? std::max(config.floor_db, 20.0 * std::log10(rms)) : config.floor_db;
    out.at(f, 0) = db;
    below = db >= config.threshold_db ? 0 : below + 1;
    out.at(f, 1) = below <= config.hangover ? 1.0 : 0.0;
  }
  return out;
}

FeatureMatrix deltas(const FeatureMatrix& features) {
  FeatureMatrix d(features.rows, features.cols);
  for (std::size_t r = 1; r < features.rows; ++r) {
    for (std::size_t c = 0; c < features.cols; ++c) d.at(r, c) = features.at(r, c) - features.at(r - 1, c);
  }
  return d;
}

FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.rows != b.rows) throw ConfigError("hconcat: row counts differ");
  FeatureMatrix out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) out.at(r, c) = a.at(r, c);
    for (std::size_t c = 0; c < b.cols; ++c) out.at(r, a.cols + c) = b.at(r, c);
  }
  return out;
}

FeatureNormalizer FeatureNormalizer::fit(std::span<const FeatureMatrix> corpus) {
  if (corpus.empty()) throw ConfigError("feature normalizer: empty corpus");
  const std::size_t cols = corpus.front().cols;
  FeatureNormalizer n;
  n.mean.assign(cols, 0.0);
  n.stddev.assign(cols, 0.0);
  std::size_t count = 0;
  for (const auto& m : corpus) {
    if (m.cols != cols) throw ConfigError("feature normalizer: column counts differ");
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) n.mean[c] += m.at(r, c);
    }
    count += m.rows;
  }
  if (count == 0) throw ConfigError("feature normalizer: no frames");
  for (double& v : n.mean) v /= static_cast<double>(count);
  for (const auto& m : corpus) {
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double d = m.at(r, c) - n.mean[c];
        n.stddev[c] += d * d;
      }
    }
  }
  for (double& v : n.stddev) v = std::max(std::sqrt(v / static_cast<double>(count)), 1e-8);
  return n;
}

FeatureMatrix FeatureNormalizer::apply(const FeatureMatrix& m) const {
  if (m.cols != mean.size()) throw ConfigError("feature normalizer: column count mismatch");
  FeatureMatrix out = m;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out.at(r, c) = (m.at(r, c) - mean[c]) / stddev[c];
  }
  return out;
}

namespace {
void put32(std::ofstream& f, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
  f.write(b, 4);
}
std::uint32_t get32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
}  // namespace

void write_feature_dump(const std::string& path, const std::string& name, const FeatureMatrix& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open feature dump for writing: " + path);
  f.write("SKFM", 4);
  put32(f, 1);
  put32(f, static_cast<std::uint32_t>(m.rows));
  put32(f, static_cast<std::uint32_t>(m.cols));
  put32(f, static_cast<std::uint32_t>(name.size()));
  f.write(name.data(), static_cast<std::streamsize>(name.size()));
  for (double v : m.data) put32(f, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!f) throw IoError("failed writing feature dump: " + path);
}

FeatureMatrix read_feature_dump(const std::string& path, std::string* name) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open feature dump: " + path);
  std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (b.size() < 20 || std::memcmp(b.data(), "SKFM", 4) != 0) throw IoError("feature dump: bad magic");
  if (get32(b.data() + 4) != 1) throw IoError("feature dump: unsupported version");
  const std::size_t rows = get32(b.data() + 8);
  const std::size_t cols = get32(b.data() + 12);
  const std::size_t name_len = get32(b.data() + 16);
  if (b.size() != 20 + name_len + rows * cols * 4) throw IoError("feature dump: size does not match header");
  if (name != nullptr) name->assign(reinterpret_cast<const char*>(b.data() + 20), name_len);
  FeatureMatrix m(rows, cols);
  const std::uint8_t* p = b.data() + 20 + name_len;
  for (std::size_t i = 0; i < rows * cols; ++i) m.data[i] = std::bit_cast<float>(get32(p + 4 * i));
  return m;
}

}  // namespace scorekit
