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

#include "scorekit/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint16_t get16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void Signal::validate() const {
  if (sample_rate <= 0) throw ConfigError("signal sample rate must be positive");
  for (double v : samples) {
    if (!std::isfinite(v)) throw ConfigError("signal contains non-finite samples");
  }
}

std::vector<std::uint8_t> encode_wav(const Signal& signal, WavEncoding encoding) {
  if (signal.sample_rate <= 0) throw ConfigError("encode_wav: sample rate must be positive");
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * block_align);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put32(out, static_cast<std::uint32_t>(signal.sample_rate) * block_align);
  put16(out, block_align);
  put16(out, bits);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (double v : signal.samples) {
    if (encoding == WavEncoding::kPcm16) {
      const long q = std::lround(std::clamp(v, -1.0, 1.0) * 32768.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
    } else {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

Signal decode_wav(std::span<const std::uint8_t> bytes, const WavReadOptions& options) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("malformed WAV header: missing RIFF/WAVE signature");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::size_t len = get32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (len < 16 || body + len > bytes.size()) throw IoError("malformed WAV header: short fmt chunk");
      format = get16(bytes.data() + body);
      channels = get16(bytes.data() + body + 2);
      rate = get32(bytes.data() + body + 4);
      bits = get16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw IoError("malformed WAV header: short extensible fmt chunk");
        format = get16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = std::min(len, bytes.size() - body);
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw IoError("malformed WAV header: no fmt chunk");
  if (data == nullptr) throw IoError("malformed WAV header: no data chunk");
  if (channels == 0 || rate == 0) throw IoError("malformed WAV header: zero channels or rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw IoError("unsupported WAV encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                  " bits); expected PCM16 or float32");
  }
  if (channels != 1 && !options.downmix) {
    throw IoError("WAV has " + std::to_string(channels) + " channels; only mono is accepted (use down-mix)");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  Signal s;
  s.sample_rate = static_cast<int>(rate);
  s.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::uint8_t* p = data + (f * channels + ch) * width;
      acc += pcm16 ? static_cast<std::int16_t>(get16(p)) / 32768.0
                   : static_cast<double>(std::bit_cast<float>(get32(p)));
    }
    s.samples[f] = acc / channels;
  }
  return s;
}

Signal read_wav(const std::string& path, const WavReadOptions& options) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open WAV file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes, options);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_wav(const std::string& path, const Signal& signal, WavEncoding encoding) {
  const auto bytes = encode_wav(signal, encoding);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open WAV file for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing WAV file: " + path);
}

}  // namespace scorekit
