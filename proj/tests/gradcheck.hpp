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

// Finite-difference oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scorekit/mdn.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/scorenet.hpp"

namespace scorekit::testing {

inline constexpr double kFdStep = 1e-6;
// The NLL is smooth, so a wider step trades negligible truncation for less roundoff.
inline constexpr double kMdnFdStep = 1e-5;
// Gradients below this magnitude are compared absolutely.
inline constexpr double kFdFloor = 1e-6;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kFdFloor}); }

struct GradCheck {
  double worst = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::string description;
};

/// Small random network: every parameter randomized so the zero read-out does not hide gradients.
inline ScoreNet random_small_net(std::uint64_t seed, std::size_t max_params = 500) {
  Rng rng(seed);
  for (;;) {
    ScoreNetConfig cfg;
    cfg.x_dim = static_cast<std::size_t>(rng.integer(1, 3));
    cfg.c_dim = static_cast<std::size_t>(rng.integer(0, 2));
    cfg.hidden.assign(static_cast<std::size_t>(rng.integer(1, 2)), 0);
    for (auto& h : cfg.hidden) h = static_cast<std::size_t>(rng.integer(2, 6));
    cfg.n_pairs = static_cast<std::size_t>(rng.integer(1, 4));
    cfg.embed_dim = static_cast<std::size_t>(rng.integer(2, 5));
    cfg.data_std = rng.uniform(0.3, 2.0);
    cfg.init_seed = rng.next_u64();
    ScoreNet net(cfg);
    if (net.param_count() > max_params) continue;
    auto p = net.params();
    for (const auto& b : net.blocks()) {
      for (std::size_t i = 0; i < b.size; ++i) {
        p[b.offset + i] = b.kind == ParamKind::kPreluSlope ? rng.uniform(0.05, 0.5) : rng.uniform(-0.8, 0.8);
      }
    }
    return net;
  }
}

inline double dsm_loss_value(const ScoreNet& net, const std::vector<double>& x0, const std::vector<double>& c,
                             double sigma, const std::vector<double>& z) {
  std::vector<double> x(x0.size()), s(x0.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + sigma * z[i];
  net.evaluate(x, c, sigma, s);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (sigma * s[i] + z[i]) * (sigma * s[i] + z[i]);
  return 0.5 * acc;
}

/// Every parameter of a random net against central differences of the DSM loss at fixed z and sigma.
inline GradCheck check_scorenet_gradient(std::uint64_t seed) {
  ScoreNet net = random_small_net(seed);
  Rng rng(seed ^ 0xabcdefULL);
  const auto& cfg = net.config();
  std::vector<double> x0(cfg.x_dim), c(cfg.c_dim), z(cfg.x_dim);
  rng.fill_normal(x0);
  rng.fill_normal(c);
  rng.fill_normal(z);
  const double sigma = std::exp(rng.uniform(std::log(0.01), std::log(5.0)));
  std::vector<double> grad(net.param_count(), 0.0);
  dsm_loss_and_grad(net, x0, c, sigma, z, grad);

  GradCheck out;
  out.description = "params=" + std::to_string(net.param_count()) + " sigma=" + std::to_string(sigma);
  auto p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + kFdStep;
    const double up = dsm_loss_value(net, x0, c, sigma, z);
    p[i] = orig - kFdStep;
    const double down = dsm_loss_value(net, x0, c, sigma, z);
    p[i] = orig;
    const double e = rel_err(grad[i], (up - down) / (2.0 * kFdStep));
    if (e > out.worst) {
      out.worst = e;
      out.worst_index = i;
    }
    ++out.checked;
  }
  return out;
}

inline MdnParams random_mdn(Rng& rng, std::size_t k, std::size_t d) {
  MdnParams p(k, d);
  for (auto& v : p.logits) v = rng.uniform(-1.5, 1.5);
  for (auto& v : p.means) v = rng.uniform(-2.0, 2.0);
  for (auto& v : p.log_scales) v = rng.uniform(-0.7, 0.7);
  return p;
}

/// Logits, means and log-scales of a random mixture against central differences of the NLL.
inline GradCheck check_mdn_gradient(std::uint64_t seed) {
  Rng rng(seed);
  const auto k = static_cast<std::size_t>(rng.integer(1, 4));
  const auto d = static_cast<std::size_t>(rng.integer(1, 3));
  MdnParams p = random_mdn(rng, k, d);
  std::vector<double> y(d);
  for (auto& v : y) v = rng.uniform(-3.0, 3.0);
  MdnGrad g;
  mdn_nll_grad(p, y, g);

  GradCheck out;
  out.description = "k=" + std::to_string(k) + " d=" + std::to_string(d);
  auto probe = [&](std::vector<double>& field, const std::vector<double>& analytic, std::size_t base) {
    for (std::size_t i = 0; i < field.size(); ++i) {
      const double orig = field[i];
      field[i] = orig + kMdnFdStep;
      const double up = mdn_nll(p, y);
      field[i] = orig - kMdnFdStep;
      const double down = mdn_nll(p, y);
      field[i] = orig;
      const double e = rel_err(analytic[i], (up - down) / (2.0 * kMdnFdStep));
      if (e > out.worst) {
        out.worst = e;
        out.worst_index = base + i;
      }
      ++out.checked;
    }
  };
  probe(p.logits, g.logits, 0);
  probe(p.means, g.means, k);
  probe(p.log_scales, g.log_scales, k + k * d);
  return out;
}

}  // namespace scorekit::testing
