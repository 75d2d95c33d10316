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

#include "scorekit/mdn.hpp"

#include <algorithm>
#include <cmath>

#include "scorekit/error.hpp"
#include "scorekit/optimizer.hpp"

namespace scorekit {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double a : v) acc += std::exp(a - m);
  return m + std::log(acc);
}

// log alpha_i + log N(y; m_i, s_i) for every component.
std::vector<double> component_logs(const MdnParams& p, std::span<const double> y) {
  if (y.size() != p.d) throw ConfigError("MDN: target dimension mismatch");
  const double lse_logits = log_sum_exp(p.logits);
  std::vector<double> out(p.k);
  for (std::size_t i = 0; i < p.k; ++i) {
    double acc = p.logits[i] - lse_logits;
    for (std::size_t j = 0; j < p.d; ++j) {
      const double ls = p.log_scales[i * p.d + j];
      const double u = (y[j] - p.means[i * p.d + j]) * std::exp(-ls);
      acc -= kHalfLog2Pi + ls + 0.5 * u * u;
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace

std::vector<double> MdnParams::weights() const {
  std::vector<double> w(logits.size());
  const double lse = log_sum_exp(logits);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logits[i] - lse);
  return w;
}

double MdnParams::scale(std::size_t i, std::size_t j) const { return std::exp(log_scales[i * d + j]); }

void MdnParams::validate() const {
  if (k == 0 || d == 0) throw ConfigError("MDN: k and d must be positive");
  if (logits.size() != k || means.size() != k * d || log_scales.size() != k * d) {
    throw ConfigError("MDN: parameter arrays do not match k and d");
  }
}

double mdn_nll(const MdnParams& params, std::span<const double> y) {
  params.validate();
  return -log_sum_exp(component_logs(params, y));
}

double mdn_nll_grad(const MdnParams& params, std::span<const double> y, MdnGrad& grad) {
  params.validate();
  const auto logs = component_logs(params, y);
  const double lse = log_sum_exp(logs);
  const auto alpha = params.weights();
  grad.logits.assign(params.k, 0.0);
  grad.means.assign(params.k * params.d, 0.0);
  grad.log_scales.assign(params.k * params.d, 0.0);
  for (std::size_t i = 0; i < params.k; ++i) {
    const double resp = std::exp(logs[i] - lse);
    // d/dlogit_i of -log sum = alpha_i - responsibility_i
    grad.logits[i] = alpha[i] - resp;
    for (std::size_t j = 0; j < params.d; ++j) {
      const std::size_t idx = i * params.d + j;
      const double inv_s = std::exp(-params.log_scales[idx]);
      const double u = (y[j] - params.means[idx]) * inv_s;
      grad.means[idx] = -resp * u * inv_s;
      grad.log_scales[idx] = -resp * (u * u - 1.0);
    }
  }
  return -lse;
}

std::vector<double> mdn_mean(const MdnParams& params) {
  params.validate();
  const auto alpha = params.weights();
  std::vector<double> m(params.d, 0.0);
  for (std::size_t i = 0; i < params.k; ++i) {
    for (std::size_t j = 0; j < params.d; ++j) m[j] += alpha[i] * params.means[i * params.d + j];
  }
  return m;
}

std::vector<double> mdn_sample(const MdnParams& params, Rng& rng) {
  params.validate();
  const auto alpha = params.weights();
  const std::size_t i = rng.categorical(alpha);
  std::vector<double> y(params.d);
  for (std::size_t j = 0; j < params.d; ++j) y[j] = params.mean(i, j) + params.scale(i, j) * rng.normal();
  return y;
}

double mdn_density(const MdnParams& params, std::span<const double> y) { return std::exp(-mdn_nll(params, y)); }

MdnParams fit_mdn(std::span<const double> data, std::size_t d, std::size_t k, const MdnFitOptions& options) {
  if (d == 0 || k == 0 || data.empty() || data.size() % d != 0) throw ConfigError("fit_mdn: malformed data");
  const std::size_t n = data.size() / d;
  MdnParams p(k, d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col(n);
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += col[r] = data[r * d + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < k; ++i) {
      const auto q = static_cast<std::size_t>((static_cast<double>(i) + 0.5) / static_cast<double>(k) *
                                              static_cast<double>(n));
      p.means[i * d + j] = col[std::min(q, n - 1)];
      p.log_scales[i * d + j] = 0.5 * std::log(std::max(var, 1e-12));
    }
  }

  // Flat parameter vector: logits, means, log-scales.
  const std::size_t count = k + 2 * k * d;
  std::vector<double> flat(count);
  std::vector<double> grad(count);
  AdamConfig cfg;
  cfg.lr.peak_lr = options.learning_rate;
  cfg.lr.start_lr = options.learning_rate;
  cfg.lr.warmup_steps = 0;
  cfg.lr.total_steps = options.iterations;
  cfg.weight_decay = 0.0;
  Adam adam(cfg, std::vector<std::uint8_t>(count, 0));
  auto pack = [&] {
    std::copy(p.logits.begin(), p.logits.end(), flat.begin());
    std::copy(p.means.begin(), p.means.end(), flat.begin() + static_cast<std::ptrdiff_t>(k));
    std::copy(p.log_scales.begin(), p.log_scales.end(), flat.begin() + static_cast<std::ptrdiff_t>(k + k * d));
  };
  auto unpack = [&] {
    std::copy_n(flat.begin(), k, p.logits.begin());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), k * d, p.means.begin());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k + k * d), k * d, p.log_scales.begin());
  };
  pack();
  MdnGrad g;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      mdn_nll_grad(p, data.subspan(r * d, d), g);
      for (std::size_t i = 0; i < k; ++i) grad[i] += inv_n * g.logits[i];
      for (std::size_t i = 0; i < k * d; ++i) {
        grad[k + i] += inv_n * g.means[i];
        grad[k + k * d + i] += inv_n * g.log_scales[i];
      }
    }
    adam.update(flat, grad);
    unpack();
  }
  return p;
}

double group_loss(const TargetGroup& group) {
  if (group.d == 0 || group.targets.size() % group.d != 0) throw ConfigError("MDN group: malformed target matrix");
  const std::size_t frames = group.frames();
  if (frames != group.params.size()) throw ConfigError("MDN group '" + group.name + "': frame count mismatch");
  if (frames == 0) throw ConfigError("MDN group '" + group.name + "' is empty");
  double acc = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    if (group.params[f].d != group.d) throw ConfigError("MDN group '" + group.name + "': dimension mismatch");
    acc += mdn_nll(group.params[f], std::span<const double>(group.targets).subspan(f * group.d, group.d));
  }
  return acc / static_cast<double>(frames);
}

double total_auxiliary_loss(const TargetGroup& waveform, std::span<const TargetGroup> feature_groups) {
  double total = group_loss(waveform);
  for (const auto& g : feature_groups) total += group_loss(g);
  return total;
}

}  // namespace scorekit
