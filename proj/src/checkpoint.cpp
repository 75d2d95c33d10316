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

#include "scorekit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

constexpr char kMagic[8] = {'S', 'K', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double d : v) f64(d);
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::vector<double> f64s() {
    const auto n = u64();
    if (n > (size_ - pos_) / 8) throw IoError("checkpoint: truncated array");
    std::vector<double> v(n);
    for (auto& d : v) d = f64();
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw IoError("checkpoint: unexpected end of data");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void section(Writer& out, const char (&tag)[5], const Writer& payload) {
  out.raw(tag, 4);
  out.u64(payload.bytes.size());
  out.raw(payload.bytes.data(), payload.bytes.size());
}

}  // namespace

Checkpoint Checkpoint::capture(const ScoreNet& net, const NoiseSchedule& schedule, const Adam* optimizer,
                               std::string config_text) {
  Checkpoint ck;
  ck.config_text = std::move(config_text);
  ck.schedule = schedule;
  ck.net_config = net.config();
  ck.frequencies = net.embedding().frequencies();
  ck.params.assign(net.params().begin(), net.params().end());
  if (optimizer != nullptr) {
    OptimizerState st;
    st.step = optimizer->step();
    st.config = optimizer->config();
    st.m = optimizer->first_moment();
    st.v = optimizer->second_moment();
    ck.optimizer = std::move(st);
  }
  return ck;
}

ScoreNet Checkpoint::make_net() const { return ScoreNet(net_config, frequencies, params); }

Adam Checkpoint::make_optimizer(const AdamConfig& fallback) const {
  const ScoreNet net = make_net();
  if (!optimizer) return Adam(fallback, net.decay_mask());
  Adam adam(optimizer->config, net.decay_mask());
  adam.restore(optimizer->step, optimizer->m, optimizer->v);
  return adam;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::uint32_t count = 5 + (optimizer ? 1 : 0) + (mel_filterbank ? 1 : 0) + (mel_normalization ? 1 : 0);
  Writer out;
  out.raw(kMagic, sizeof(kMagic));
  out.u32(kVersion);
  out.u32(count);

  Writer conf;
  conf.raw(config_text.data(), config_text.size());
  section(out, "CONF", conf);

  Writer schd;
  schd.f64(schedule.sigma_min());
  schd.f64(schedule.sigma_max());
  section(out, "SCHD", schd);

  Writer netc;
  netc.u64(net_config.x_dim);
  netc.u64(net_config.c_dim);
  netc.u64(net_config.hidden.size());
  for (auto h : net_config.hidden) netc.u64(h);
  netc.u64(net_config.n_pairs);
  netc.u64(net_config.embed_dim);
  netc.f64(net_config.data_std);
  netc.u64(net_config.init_seed);
  section(out, "NETC", netc);

  Writer freq;
  freq.f64s(frequencies);
  section(out, "FREQ", freq);

  Writer parm;
  parm.f64s(params);
  section(out, "PARM", parm);

  if (optimizer) {
    Writer optm;
    const auto& o = *optimizer;
    optm.u64(o.step);
    optm.f64(o.config.lr.peak_lr);
    optm.f64(o.config.lr.start_lr);
    optm.u64(o.config.lr.warmup_steps);
    optm.u64(o.config.lr.total_steps);
    optm.f64(o.config.beta1);
    optm.f64(o.config.beta2);
    optm.f64(o.config.eps);
    optm.f64(o.config.weight_decay);
    optm.u64(o.m.size());
    for (double d : o.m) optm.f64(d);
    for (double d : o.v) optm.f64(d);
    section(out, "OPTM", optm);
  }
  if (mel_filterbank) {
    Writer melf;
    melf.u64(mel_filterbank->rows);
    melf.u64(mel_filterbank->cols);
    for (double d : mel_filterbank->weights) melf.f64(d);
    section(out, "MELF", melf);
  }
  if (mel_normalization) {
    Writer meln;
    meln.u64(mel_normalization->mean.size());
    for (double d : mel_normalization->mean) meln.f64(d);
    for (double d : mel_normalization->stddev) meln.f64(d);
    section(out, "MELN", meln);
  }
  return std::move(out.bytes);
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes.data(), bytes.size());
  if (std::memcmp(in.take(8), kMagic, 8) != 0) throw IoError("checkpoint: bad magic");
  const auto version = in.u32();
  if (version != kVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = in.u32();

  Checkpoint ck;
  bool have_netc = false, have_freq = false, have_parm = false;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::string tag(reinterpret_cast<const char*>(in.take(4)), 4);
    const auto len = in.u64();
    const auto* payload = in.take(len);
    Reader r(payload, len);
    if (tag == "CONF") {
      ck.config_text.assign(reinterpret_cast<const char*>(payload), len);
    } else if (tag == "SCHD") {
      const double lo = r.f64();
      const double hi = r.f64();
      ck.schedule = NoiseSchedule(lo, hi);
    } else if (tag == "NETC") {
      ck.net_config.x_dim = r.u64();
      ck.net_config.c_dim = r.u64();
      ck.net_config.hidden.resize(r.u64());
      for (auto& h : ck.net_config.hidden) h = r.u64();
      ck.net_config.n_pairs = r.u64();
      ck.net_config.embed_dim = r.u64();
      ck.net_config.data_std = r.f64();
      ck.net_config.init_seed = r.u64();
      have_netc = true;
    } else if (tag == "FREQ") {
      ck.frequencies = r.f64s();
      have_freq = true;
    } else if (tag == "PARM") {
      ck.params = r.f64s();
      have_parm = true;
    } else if (tag == "OPTM") {
      OptimizerState o;
      o.step = r.u64();
      o.config.lr.peak_lr = r.f64();
      o.config.lr.start_lr = r.f64();
      o.config.lr.warmup_steps = r.u64();
      o.config.lr.total_steps = r.u64();
      o.config.beta1 = r.f64();
      o.config.beta2 = r.f64();
      o.config.eps = r.f64();
      o.config.weight_decay = r.f64();
      const auto n = r.u64();
      if (n > len / 16) throw IoError("checkpoint: truncated optimizer state");
      o.m.resize(n);
      o.v.resize(n);
      for (auto& d : o.m) d = r.f64();
      for (auto& d : o.v) d = r.f64();
      ck.optimizer = std::move(o);
    } else if (tag == "MELF") {
      MelFilterbank f;
      f.rows = r.u64();
      f.cols = r.u64();
      if (f.cols != 0 && f.rows > len / 8 / f.cols) throw IoError("checkpoint: truncated mel filterbank");
      f.weights.resize(f.rows * f.cols);
      for (auto& d : f.weights) d = r.f64();
      ck.mel_filterbank = std::move(f);
    } else if (tag == "MELN") {
      Normalization n;
      const auto k = r.u64();
      if (k > len / 16) throw IoError("checkpoint: truncated normalization");
      n.mean.resize(k);
      n.stddev.resize(k);
      for (auto& d : n.mean) d = r.f64();
      for (auto& d : n.stddev) d = r.f64();
      ck.mel_normalization = std::move(n);
    }
  }
  if (!have_netc || !have_freq || !have_parm) throw IoError("checkpoint: missing required section");
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace scorekit
