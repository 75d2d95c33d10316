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

#include "scorekit/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <numeric>

#include "scorekit/error.hpp"
#include "scorekit/scorenet.hpp"

namespace scorekit::kernels {

namespace {

std::span<const double> cond_row(std::span<const double> conds, std::size_t cond_dim, std::size_t i) {
  if (cond_dim == 0) return {};
  return conds.subspan(i * cond_dim, cond_dim);
}

void check_conds(std::span<const double> conds, std::size_t cond_dim, std::size_t count) {
  if (conds.size() != cond_dim * count) throw ConfigError("sample_many: conditioning rows do not match count");
}

// Rethrows the exception of the lowest failing index, if any.
void rethrow_first(std::vector<std::exception_ptr>& errors) {
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void set_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

int max_jobs() { return omp_get_max_threads(); }

namespace serial {

std::vector<double> sample_many(const ScoreFunction& score, std::span<const double> conds, std::size_t cond_dim,
                                const SamplingPlan& plan, std::size_t dim, std::size_t count, const Rng& rng) {
  check_conds(conds, cond_dim, count);
  std::vector<double> out(dim * count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng sub = rng.split(i);
    const auto x = langevin_sample(score, cond_row(conds, cond_dim, i), plan, dim, sub);
    std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return out;
}

double batch_dsm_gradient(const ScoreNet& net, std::span<const DsmExample> batch, std::span<double> grad) {
  if (batch.empty()) throw ConfigError("batch_dsm_gradient: empty batch");
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> g(grad.size());
  double loss = 0.0;
  for (const auto& ex : batch) {
    std::fill(g.begin(), g.end(), 0.0);
    loss += dsm_loss_and_grad(net, ex.x0, ex.c, ex.sigma, ex.z, g);
    for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& v : grad) v *= inv;
  return loss * inv;
}

}  // namespace serial

namespace omp {

std::vector<double> sample_many(const ScoreFunction& score, std::span<const double> conds, std::size_t cond_dim,
                                const SamplingPlan& plan, std::size_t dim, std::size_t count, const Rng& rng) {
  check_conds(conds, cond_dim, count);
  std::vector<double> out(dim * count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      Rng sub = rng.split(idx);
      const auto x = langevin_sample(score, cond_row(conds, cond_dim, idx), plan, dim, sub);
      std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(idx * dim));
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

double batch_dsm_gradient(const ScoreNet& net, std::span<const DsmExample> batch, std::span<double> grad) {
  if (batch.empty()) throw ConfigError("batch_dsm_gradient: empty batch");
  const std::size_t n_params = grad.size();
  const std::size_t n_chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<double> partial(n_chunks * n_params, 0.0);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<std::exception_ptr> errors(n_chunks);
  const auto nc = static_cast<std::ptrdiff_t>(n_chunks);
#pragma omp parallel
  {
    std::vector<double> g(n_params);
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < nc; ++k) {
      const auto chunk = static_cast<std::size_t>(k);
      try {
        double* acc = partial.data() + chunk * n_params;
        const std::size_t end = std::min(batch.size(), (chunk + 1) * kGradientChunk);
        for (std::size_t b = chunk * kGradientChunk; b < end; ++b) {
          std::fill(g.begin(), g.end(), 0.0);
          chunk_loss[chunk] += dsm_loss_and_grad(net, batch[b].x0, batch[b].c, batch[b].sigma, batch[b].z, g);
          for (std::size_t p = 0; p < n_params; ++p) acc[p] += g[p];
        }
      } catch (...) {
        errors[chunk] = std::current_exception();
      }
    }
  }
  rethrow_first(errors);
  const double inv = 1.0 / static_cast<double>(batch.size());
  const auto np = static_cast<std::ptrdiff_t>(n_params);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < np; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < n_chunks; ++k) s += partial[k * n_params + static_cast<std::size_t>(p)];
    grad[static_cast<std::size_t>(p)] = s * inv;
  }
  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  return loss * inv;
}

}  // namespace omp
}  // namespace scorekit::kernels
