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

#include "scorekit/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "scorekit/dsp.hpp"
#include "scorekit/error.hpp"

namespace scorekit {

namespace {

void check_pair(std::span<const double> r, std::span<const double> e, const char* what) {
  if (r.size() != e.size()) {
    throw ConfigError(std::string(what) + ": length mismatch (" + std::to_string(r.size()) + " vs " +
                      std::to_string(e.size()) + ")");
  }
  if (r.empty()) throw ConfigError(std::string(what) + ": empty input");
}

double energy(std::span<const double> x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); }

double ratio_db(double signal, double error) {
  if (error == 0.0) return kSnrCap;
  return std::min(kSnrCap, 10.0 * std::log10(signal / error));
}

}  // namespace

double snr(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate, "snr");
  const double s = energy(reference);
  if (s == 0.0) throw UndefinedMetric("snr: silent reference");
  double err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) err += (reference[i] - estimate[i]) * (reference[i] - estimate[i]);
  return ratio_db(s, err);
}

double si_snr(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate, "si_snr");
  const double s = energy(reference);
  if (s == 0.0) throw UndefinedMetric("si_snr: silent reference");
  const double alpha = std::inner_product(reference.begin(), reference.end(), estimate.begin(), 0.0) / s;
  double target = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    target += t * t;
    err += (estimate[i] - t) * (estimate[i] - t);
  }
  if (target == 0.0) return -kSnrCap;
  return ratio_db(target, err);
}

Mrstft mrstft_terms(std::span<const double> reference, std::span<const double> estimate,
                    const std::vector<Resolution>& resolutions) {
  check_pair(reference, estimate, "mrstft");
  if (resolutions.empty()) throw ConfigError("mrstft: no resolutions");
  if (energy(reference) == 0.0) throw UndefinedMetric("mrstft: silent reference");
  Mrstft out;
  for (const auto& res : resolutions) {
    const StftConfig cfg{res.frame, res.hop, WindowType::kHann};
    const auto r = stft(reference, cfg).magnitude();
    const auto e = stft(estimate, cfg).magnitude();
    double diff = 0.0, norm = 0.0, log_term = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      diff += (r[i] - e[i]) * (r[i] - e[i]);
      norm += r[i] * r[i];
      log_term += std::abs(std::log(std::max(r[i], kMagnitudeFloor)) - std::log(std::max(e[i], kMagnitudeFloor)));
    }
    const MrstftTerm term{res, norm > 0.0 ? std::sqrt(diff / norm) : 0.0, log_term / static_cast<double>(r.size())};
    out.terms.push_back(term);
    out.value += term.spectral_convergence + term.log_magnitude;
  }
  out.value /= static_cast<double>(resolutions.size());
  return out;
}

double mrstft(std::span<const double> reference, std::span<const double> estimate,
              const std::vector<Resolution>& resolutions) {
  return mrstft_terms(reference, estimate, resolutions).value;
}

double lsd(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate, "lsd");
  const StftConfig cfg{512, 128, WindowType::kHann};
  const auto rs = stft(reference, cfg);
  const auto r = rs.magnitude();
  const auto e = stft(estimate, cfg).magnitude();
  double total = 0.0;
  for (std::size_t f = 0; f < rs.frames; ++f) {
    double frame = 0.0;
    for (std::size_t k = 0; k < rs.bins; ++k) {
      const std::size_t i = f * rs.bins + k;
      const double d = 20.0 * (std::log10(std::max(r[i], kMagnitudeFloor)) - std::log10(std::max(e[i], kMagnitudeFloor)));
      frame += d * d;
    }
    total += frame / static_cast<double>(rs.bins);
  }
  return std::sqrt(total / static_cast<double>(rs.frames));
}

MetricReport evaluate_metrics(std::span<const double> reference, std::span<const double> estimate,
                              const std::vector<Resolution>& resolutions) {
  MetricReport m;
  m.snr = snr(reference, estimate);
  m.si_snr = si_snr(reference, estimate);
  m.lsd = lsd(reference, estimate);
  m.mrstft = mrstft_terms(reference, estimate, resolutions);
  return m;
}

}  // namespace scorekit
