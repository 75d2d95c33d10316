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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scorekit/diffusion.hpp"
#include "scorekit/rng.hpp"

namespace scorekit {

enum class ParamKind : std::uint8_t { kWeight, kBias, kPreluSlope };

/// A named contiguous block of the flat parameter vector.
struct ParamBlock {
  std::string name;
  ParamKind kind;
  std::size_t offset;
  std::size_t size;
};

/// Dense layer y = W x + b with row-major W (rows x cols), addressed by offsets
/// into a flat parameter vector.
struct AffineLayout {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Random-Fourier-feature embedding of log(sigma) followed by three
/// linear + PReLU layers. Frequencies are fixed at construction.
class SigmaEmbedding {
 public:
  struct Cache {
    std::vector<double> features;                 // 2 * n_pairs
    std::vector<double> pre[3];                   // affine outputs
    std::vector<double> post[3];                  // PReLU outputs
  };

  SigmaEmbedding() = default;
  SigmaEmbedding(std::size_t n_pairs, std::size_t embed_dim, std::vector<double> frequencies,
                 std::size_t param_offset);

  std::size_t n_pairs() const { return n_pairs_; }
  std::size_t embed_dim() const { return embed_dim_; }
  const std::vector<double>& frequencies() const { return frequencies_; }
  std::size_t param_count() const { return param_count_; }

  void append_blocks(std::vector<ParamBlock>& blocks) const;
  void init(std::span<double> params, Rng& rng) const;

  /// Writes the embed_dim-long embedding of sigma; fills `cache` when given.
  void embed(std::span<const double> params, double sigma, std::span<double> out, Cache* cache) const;

  /// Accumulates parameter gradients for upstream d_out.
  void backward(std::span<const double> params, const Cache& cache, std::span<const double> d_out,
                std::span<double> grad) const;

 private:
  std::size_t n_pairs_ = 0;
  std::size_t embed_dim_ = 0;
  std::vector<double> frequencies_;
  AffineLayout layers_[3];
  std::size_t slopes_[3] = {0, 0, 0};
  std::size_t param_count_ = 0;
};

/// Multilayer perceptron whose hidden layers are modulated by FiLM:
///   q = (1 + G e + g) * (W h + b) + (B e + b'),  h' = PReLU(q),
/// with e the sigma embedding, then a final affine read-out.
class FilmMlp {
 public:
  struct Cache {
    std::vector<std::vector<double>> inputs;  // input of each hidden layer
    std::vector<std::vector<double>> linear;  // W h + b
    std::vector<std::vector<double>> scale;   // 1 + G e + g
    std::vector<std::vector<double>> modulated;
    std::vector<double> last_hidden;
    std::vector<double> embedding;
  };

  FilmMlp() = default;
  FilmMlp(std::size_t in_dim, std::size_t out_dim, std::vector<std::size_t> hidden, std::size_t embed_dim,
          std::size_t param_offset);

  std::size_t param_count() const { return param_count_; }
  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }

  void append_blocks(std::vector<ParamBlock>& blocks) const;
  /// Fan-in uniform init, PReLU slopes 0.25, zero read-out layer.
  void init(std::span<double> params, Rng& rng) const;
  /// Zeroes every FiLM projection so that the modulation is the identity.
  void make_film_identity(std::span<double> params) const;

  void forward(std::span<const double> params, std::span<const double> input, std::span<const double> emb,
               std::span<double> out, Cache* cache) const;

  /// Accumulates parameter gradients and d(loss)/d(embedding) into d_emb.
  void backward(std::span<const double> params, const Cache& cache, std::span<const double> d_out,
                std::span<double> grad, std::span<double> d_emb) const;

 private:
  struct Layer {
    AffineLayout linear;
    AffineLayout film_scale;
    AffineLayout film_shift;
    std::size_t slope = 0;
  };

  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::size_t embed_dim_ = 0;
  std::vector<std::size_t> hidden_;
  std::vector<Layer> layers_;
  AffineLayout readout_;
  std::size_t param_count_ = 0;
};

struct ScoreNetConfig {
  std::size_t x_dim = 1;
  std::size_t c_dim = 0;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t n_pairs = 32;
  std::size_t embed_dim = 64;
  /// Expected data standard deviation; x is fed to the network as x / sqrt(sigma^2 + data_std^2).
  double data_std = 1.0;
  std::uint64_t init_seed = 0;

  bool operator==(const ScoreNetConfig&) const = default;
};

/// sigma-conditioned score network S(x, c, sigma) = r(x, c, sigma) / sigma, where r is
/// the FiLM-MLP read-out on [x / sqrt(sigma^2 + data_std^2), c].
///
/// With this output convention the score-matching residual sigma S + z equals r + z,
/// and a zero read-out layer gives S == 0.
class ScoreNet final : public ScoreFunction {
 public:
  struct Cache {
    double sigma = 0.0;
    std::vector<double> embedding;
    std::vector<double> raw;
    SigmaEmbedding::Cache emb;
    FilmMlp::Cache mlp;
    bool valid = false;
  };

  explicit ScoreNet(ScoreNetConfig config);
  /// Rebuilds a network from stored frequencies and parameters.
  ScoreNet(ScoreNetConfig config, std::vector<double> frequencies, std::vector<double> params);

  const ScoreNetConfig& config() const { return config_; }
  const SigmaEmbedding& embedding() const { return embedding_; }
  const FilmMlp& mlp() const { return mlp_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  /// 1 where weight decay applies (weights), 0 for biases and PReLU slopes.
  std::vector<std::uint8_t> decay_mask() const;

  std::vector<double> sigma_embed(double sigma) const;

  /// Score estimate for a precomputed sigma embedding.
  void forward(std::span<const double> x, std::span<const double> c, double sigma,
               std::span<const double> sigma_emb, std::span<double> out, Cache* cache) const;
  /// Computes the embedding as well.
  void forward(std::span<const double> x, std::span<const double> c, double sigma, std::span<double> out,
               Cache* cache) const;

  /// Accumulates into `grad` the parameter gradient of a loss whose derivative
  /// with respect to the score output is `d_score`. Throws UsageError without a cache.
  void backward(const Cache& cache, std::span<const double> d_score, std::span<double> grad) const;

  void evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                std::span<double> out) const override;

 private:
  void build_layout();

  ScoreNetConfig config_;
  SigmaEmbedding embedding_;
  FilmMlp mlp_;
  std::vector<double> params_;
  std::vector<ParamBlock> blocks_;
};

/// Loss and parameter gradient of the score-matching term for one example and
/// a fixed draw (sigma, z). Gradient is accumulated into `grad`.
double dsm_loss_and_grad(const ScoreNet& net, std::span<const double> x0, std::span<const double> c,
                         double sigma, std::span<const double> z, std::span<double> grad);

}  // namespace scorekit
