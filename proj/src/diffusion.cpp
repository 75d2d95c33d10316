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

#include "scorekit/diffusion.hpp"

#include <cmath>
#include <sstream>

#include "scorekit/error.hpp"
#include "scorekit/kernels.hpp"

namespace scorekit {

namespace {

bool all_finite(std::span<const double> v) {
  for (double a : v) {
    if (!std::isfinite(a)) return false;
  }
  return true;
}

}  // namespace

Perturbation perturb(std::span<const double> x0, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw DomainError("perturb: sigma must be positive");
  Perturbation p;
  p.z.resize(x0.size());
  rng.fill_normal(p.z);
  p.x_t.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) p.x_t[i] = x0[i] + sigma * p.z[i];
  return p;
}

DsmDraw draw_dsm(std::size_t dim, const NoiseSchedule& schedule, Rng& rng) {
  DsmDraw d;
  d.t = rng.uniform();
  d.sigma = schedule.sigma_at(d.t);
  d.z.resize(dim);
  rng.fill_normal(d.z);
  return d;
}

double dsm_loss_at(const ScoreFunction& score, std::span<const double> x0, std::span<const double> c,
                   const DsmDraw& draw) {
  const std::size_t dim = x0.size();
  std::vector<double> x_t(dim);
  for (std::size_t i = 0; i < dim; ++i) x_t[i] = x0[i] + draw.sigma * draw.z[i];
  std::vector<double> s(dim);
  score.evaluate(x_t, c, draw.sigma, s);
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double r = draw.sigma * s[i] + draw.z[i];
    acc += r * r;
  }
  if (!std::isfinite(acc)) {
    std::ostringstream msg;
    msg << "dsm_loss: non-finite score output at sigma=" << draw.sigma << " (t=" << draw.t << ")";
    throw NumericError(msg.str());
  }
  return 0.5 * acc;
}

double dsm_loss(const ScoreFunction& score, std::span<const double> x0, std::span<const double> c,
                const NoiseSchedule& schedule, Rng& rng) {
  return dsm_loss_at(score, x0, c, draw_dsm(x0.size(), schedule, rng));
}

std::vector<double> denoise_final(const ScoreFunction& score, std::span<const double> x,
                                  std::span<const double> c, double sigma0) {
  std::vector<double> s(x.size());
  score.evaluate(x, c, sigma0, s);
  std::vector<double> out(x.size());
  const double scale = sigma0 * sigma0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + scale * s[i];
  return out;
}

std::vector<double> langevin_sample(const ScoreFunction& score, std::span<const double> c,
                                    const SamplingPlan& plan, std::size_t dim, Rng& rng) {
  if (plan.n_steps < 1 || plan.sigmas.size() != static_cast<std::size_t>(plan.n_steps)) {
    throw ConfigError("langevin_sample: malformed sampling plan");
  }
  std::vector<double> x(dim);
  std::vector<double> s(dim);
  std::vector<double> z(dim);
  const double sigma_top = plan.sigma(plan.n_steps);
  rng.fill_normal(x);
  for (double& v : x) v *= sigma_top;

  for (int n = plan.n_steps; n >= 2; --n) {
    const double sigma_n = plan.sigma(n);
    const double sigma_prev = plan.sigma(n - 1);
    score.evaluate(x, c, sigma_n, s);
    rng.fill_normal(z);
    const double step = plan.eta * sigma_n * sigma_n;
    const double noise = plan.beta * sigma_prev;
    for (std::size_t i = 0; i < dim; ++i) x[i] += step * s[i] + noise * z[i];
    if (!all_finite(x)) {
      std::ostringstream msg;
      msg << "langevin_sample: non-finite iterate at step n=" << n << " (sigma=" << sigma_n << ")";
      throw NumericError(msg.str());
    }
  }
  auto out = denoise_final(score, x, c, plan.sigma(1));
  if (!all_finite(out)) throw NumericError("langevin_sample: non-finite output at final denoising step n=1");
  return out;
}

std::vector<double> enhance_expectation(const ScoreFunction& score, std::span<const double> c,
                                        const SamplingPlan& plan, std::size_t dim, int n_realizations,
                                        const Rng& rng) {
  if (n_realizations < 1) throw ConfigError("enhance_expectation: n_realizations must be >= 1");
  const auto count = static_cast<std::size_t>(n_realizations);
  // Every realization shares the same conditioning row.
  std::vector<double> conds;
  conds.reserve(c.size() * count);
  for (std::size_t r = 0; r < count; ++r) conds.insert(conds.end(), c.begin(), c.end());
  const auto samples = kernels::omp::sample_many(score, conds, c.size(), plan, dim, count, rng);
  std::vector<double> mean(dim, 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += samples[r * dim + i];
  }
  for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

}  // namespace scorekit
