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

#include "scorekit/scorenet.hpp"

#include <cmath>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

constexpr double kInitSlope = 0.25;

AffineLayout place_affine(std::size_t& cursor, std::size_t rows, std::size_t cols) {
  AffineLayout l;
  l.rows = rows;
  l.cols = cols;
  l.weight = cursor;
  cursor += rows * cols;
  l.bias = cursor;
  cursor += rows;
  return l;
}

void affine_forward(std::span<const double> p, const AffineLayout& l, const double* x, double* y) {
  const double* w = p.data() + l.weight;
  const double* b = p.data() + l.bias;
  for (std::size_t r = 0; r < l.rows; ++r) {
    const double* row = w + r * l.cols;
    double acc = b[r];
    for (std::size_t c = 0; c < l.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// dx may be null when the input gradient is not needed.
void affine_backward(std::span<const double> p, const AffineLayout& l, const double* x, const double* dy,
                     std::span<double> grad, double* dx) {
  const double* w = p.data() + l.weight;
  double* gw = grad.data() + l.weight;
  double* gb = grad.data() + l.bias;
  for (std::size_t r = 0; r < l.rows; ++r) {
    const double g = dy[r];
    gb[r] += g;
    if (g == 0.0) continue;
    double* grow = gw + r * l.cols;
    const double* row = w + r * l.cols;
    for (std::size_t c = 0; c < l.cols; ++c) grow[c] += g * x[c];
    if (dx != nullptr) {
      for (std::size_t c = 0; c < l.cols; ++c) dx[c] += g * row[c];
    }
  }
}

void init_affine(std::span<double> p, const AffineLayout& l, Rng& rng, double bound) {
  for (std::size_t i = 0; i < l.rows * l.cols; ++i) p[l.weight + i] = rng.uniform(-bound, bound);
  for (std::size_t i = 0; i < l.rows; ++i) p[l.bias + i] = rng.uniform(-bound, bound);
}

void push_affine(std::vector<ParamBlock>& blocks, const std::string& name, const AffineLayout& l) {
  blocks.push_back({name + ".weight", ParamKind::kWeight, l.weight, l.rows * l.cols});
  blocks.push_back({name + ".bias", ParamKind::kBias, l.bias, l.rows});
}

inline double prelu(double q, double a) { return q > 0.0 ? q : a * q; }

}  // namespace

// ---------------------------------------------------------------------------
// SigmaEmbedding

SigmaEmbedding::SigmaEmbedding(std::size_t n_pairs, std::size_t embed_dim, std::vector<double> frequencies,
                               std::size_t param_offset)
    : n_pairs_(n_pairs), embed_dim_(embed_dim), frequencies_(std::move(frequencies)) {
  if (n_pairs_ == 0 || embed_dim_ == 0) throw ConfigError("sigma embedding sizes must be positive");
  if (frequencies_.size() != n_pairs_) throw ConfigError("sigma embedding: frequency count != n_pairs");
  std::size_t cursor = param_offset;
  std::size_t in = 2 * n_pairs_;
  for (int k = 0; k < 3; ++k) {
    layers_[k] = place_affine(cursor, embed_dim_, in);
    slopes_[k] = cursor;
    cursor += embed_dim_;
    in = embed_dim_;
  }
  param_count_ = cursor - param_offset;
}

void SigmaEmbedding::append_blocks(std::vector<ParamBlock>& blocks) const {
  for (int k = 0; k < 3; ++k) {
    const std::string name = "sigma_block." + std::to_string(k);
    push_affine(blocks, name, layers_[k]);
    blocks.push_back({name + ".prelu", ParamKind::kPreluSlope, slopes_[k], embed_dim_});
  }
}

void SigmaEmbedding::init(std::span<double> params, Rng& rng) const {
  for (int k = 0; k < 3; ++k) {
    init_affine(params, layers_[k], rng, 1.0 / std::sqrt(static_cast<double>(layers_[k].cols)));
    for (std::size_t i = 0; i < embed_dim_; ++i) params[slopes_[k] + i] = kInitSlope;
  }
}

void SigmaEmbedding::embed(std::span<const double> params, double sigma, std::span<double> out,
                           Cache* cache) const {
  if (!(sigma > 0.0)) throw DomainError("sigma_embed: sigma must be positive");
  if (out.size() != embed_dim_) throw ConfigError("sigma_embed: output size mismatch");
  const double u = std::log(sigma);
  std::vector<double> feat(2 * n_pairs_);
  for (std::size_t i = 0; i < n_pairs_; ++i) {
    feat[i] = std::sin(frequencies_[i] * u);
    feat[n_pairs_ + i] = std::cos(frequencies_[i] * u);
  }
  std::vector<double> cur = std::move(feat);
  if (cache != nullptr) cache->features = cur;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> pre(embed_dim_);
    affine_forward(params, layers_[k], cur.data(), pre.data());
    std::vector<double> post(embed_dim_);
    const double* a = params.data() + slopes_[k];
    for (std::size_t i = 0; i < embed_dim_; ++i) post[i] = prelu(pre[i], a[i]);
    if (cache != nullptr) {
      cache->pre[k] = pre;
      cache->post[k] = post;
    }
    cur = std::move(post);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

void SigmaEmbedding::backward(std::span<const double> params, const Cache& cache, std::span<const double> d_out,
                              std::span<double> grad) const {
  std::vector<double> d_post(d_out.begin(), d_out.end());
  for (int k = 2; k >= 0; --k) {
    const double* a = params.data() + slopes_[k];
    double* ga = grad.data() + slopes_[k];
    std::vector<double> d_pre(embed_dim_);
    for (std::size_t i = 0; i < embed_dim_; ++i) {
      const double q = cache.pre[k][i];
      if (q > 0.0) {
        d_pre[i] = d_post[i];
      } else {
        d_pre[i] = a[i] * d_post[i];
        ga[i] += q * d_post[i];
      }
    }
    const auto& input = (k == 0) ? cache.features : cache.post[k - 1];
    std::vector<double> d_in(input.size(), 0.0);
    affine_backward(params, layers_[k], input.data(), d_pre.data(), grad, k == 0 ? nullptr : d_in.data());
    d_post = std::move(d_in);
  }
}

// ---------------------------------------------------------------------------
// FilmMlp

FilmMlp::FilmMlp(std::size_t in_dim, std::size_t out_dim, std::vector<std::size_t> hidden, std::size_t embed_dim,
                 std::size_t param_offset)
    : in_dim_(in_dim), out_dim_(out_dim), embed_dim_(embed_dim), hidden_(std::move(hidden)) {
  if (in_dim_ == 0 || out_dim_ == 0) throw ConfigError("FiLM MLP dimensions must be positive");
  if (hidden_.empty()) throw ConfigError("FiLM MLP needs at least one hidden layer");
  std::size_t cursor = param_offset;
  std::size_t in = in_dim_;
  for (std::size_t width : hidden_) {
    if (width == 0) throw ConfigError("FiLM MLP hidden widths must be positive");
    Layer layer;
    layer.linear = place_affine(cursor, width, in);
    layer.film_scale = place_affine(cursor, width, embed_dim_);
    layer.film_shift = place_affine(cursor, width, embed_dim_);
    layer.slope = cursor;
    cursor += width;
    layers_.push_back(layer);
    in = width;
  }
  readout_ = place_affine(cursor, out_dim_, in);
  param_count_ = cursor - param_offset;
}

void FilmMlp::append_blocks(std::vector<ParamBlock>& blocks) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string name = "film_mlp." + std::to_string(l);
    push_affine(blocks, name + ".linear", layers_[l].linear);
    push_affine(blocks, name + ".film_scale", layers_[l].film_scale);
    push_affine(blocks, name + ".film_shift", layers_[l].film_shift);
    blocks.push_back({name + ".prelu", ParamKind::kPreluSlope, layers_[l].slope, hidden_[l]});
  }
  push_affine(blocks, "readout", readout_);
}

void FilmMlp::init(std::span<double> params, Rng& rng) const {
  const double film_bound = 1.0 / std::sqrt(static_cast<double>(embed_dim_));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    init_affine(params, layer.linear, rng, 1.0 / std::sqrt(static_cast<double>(layer.linear.cols)));
    init_affine(params, layer.film_scale, rng, film_bound);
    init_affine(params, layer.film_shift, rng, film_bound);
    // Modulation starts centred on the identity.
    for (std::size_t i = 0; i < hidden_[l]; ++i) {
      params[layer.film_scale.bias + i] = 0.0;
      params[layer.film_shift.bias + i] = 0.0;
      params[layer.slope + i] = kInitSlope;
    }
  }
  for (std::size_t i = 0; i < readout_.rows * (readout_.cols + 1); ++i) params[readout_.weight + i] = 0.0;
}

void FilmMlp::make_film_identity(std::span<double> params) const {
  for (const Layer& layer : layers_) {
    for (const AffineLayout* f : {&layer.film_scale, &layer.film_shift}) {
      std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(f->weight), f->rows * f->cols, 0.0);
      std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(f->bias), f->rows, 0.0);
    }
  }
}

void FilmMlp::forward(std::span<const double> params, std::span<const double> input, std::span<const double> emb,
                      std::span<double> out, Cache* cache) const {
  if (input.size() != in_dim_ || emb.size() != embed_dim_ || out.size() != out_dim_) {
    throw ConfigError("FiLM MLP forward: dimension mismatch");
  }
  if (cache != nullptr) {
    cache->inputs.resize(layers_.size());
    cache->linear.resize(layers_.size());
    cache->scale.resize(layers_.size());
    cache->modulated.resize(layers_.size());
  }
  std::vector<double> h(input.begin(), input.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const std::size_t width = hidden_[l];
    std::vector<double> lin(width), scale(width), shift(width), mod(width), next(width);
    affine_forward(params, layer.linear, h.data(), lin.data());
    affine_forward(params, layer.film_scale, emb.data(), scale.data());
    affine_forward(params, layer.film_shift, emb.data(), shift.data());
    const double* a = params.data() + layer.slope;
    for (std::size_t i = 0; i < width; ++i) {
      scale[i] += 1.0;
      mod[i] = scale[i] * lin[i] + shift[i];
      next[i] = prelu(mod[i], a[i]);
    }
    if (cache != nullptr) {
      cache->inputs[l] = std::move(h);
      cache->linear[l] = std::move(lin);
      cache->scale[l] = std::move(scale);
      cache->modulated[l] = std::move(mod);
    }
    h = std::move(next);
  }
  affine_forward(params, readout_, h.data(), out.data());
  if (cache != nullptr) cache->last_hidden = std::move(h);
}

void FilmMlp::backward(std::span<const double> params, const Cache& cache, std::span<const double> d_out,
                       std::span<double> grad, std::span<double> d_emb) const {
  if (cache.inputs.size() != layers_.size() || cache.embedding.size() != embed_dim_) {
    throw UsageError("FiLM MLP backward: forward cache missing");
  }
  std::vector<double> d_h(cache.last_hidden.size(), 0.0);
  affine_backward(params, readout_, cache.last_hidden.data(), d_out.data(), grad, d_h.data());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const std::size_t width = hidden_[l];
    const double* a = params.data() + layer.slope;
    double* ga = grad.data() + layer.slope;
    std::vector<double> d_mod(width), d_lin(width), d_scale(width);
    for (std::size_t i = 0; i < width; ++i) {
      const double q = cache.modulated[l][i];
      if (q > 0.0) {
        d_mod[i] = d_h[i];
      } else {
        d_mod[i] = a[i] * d_h[i];
        ga[i] += q * d_h[i];
      }
      d_lin[i] = d_mod[i] * cache.scale[l][i];
      d_scale[i] = d_mod[i] * cache.linear[l][i];
    }
    affine_backward(params, layer.film_scale, cache.embedding.data(), d_scale.data(), grad, d_emb.data());
    affine_backward(params, layer.film_shift, cache.embedding.data(), d_mod.data(), grad, d_emb.data());
    std::vector<double> d_in(cache.inputs[l].size(), 0.0);
    affine_backward(params, layer.linear, cache.inputs[l].data(), d_lin.data(), grad, d_in.data());
    d_h = std::move(d_in);
  }
}

// ---------------------------------------------------------------------------
// ScoreNet

ScoreNet::ScoreNet(ScoreNetConfig config) : config_(std::move(config)) {
  Rng rng(config_.init_seed);
  std::vector<double> freqs(config_.n_pairs);
  rng.fill_normal(freqs);
  embedding_ = SigmaEmbedding(config_.n_pairs, config_.embed_dim, std::move(freqs), 0);
  build_layout();
  embedding_.init(params_, rng);
  mlp_.init(params_, rng);
}

ScoreNet::ScoreNet(ScoreNetConfig config, std::vector<double> frequencies, std::vector<double> params)
    : config_(std::move(config)) {
  embedding_ = SigmaEmbedding(config_.n_pairs, config_.embed_dim, std::move(frequencies), 0);
  build_layout();
  if (params.size() != params_.size()) throw ConfigError("score net: parameter count does not match config");
  params_ = std::move(params);
}

void ScoreNet::build_layout() {
  if (config_.x_dim == 0) throw ConfigError("score net: x_dim must be positive");
  if (!(config_.data_std > 0.0)) throw ConfigError("score net: data_std must be positive");
  mlp_ = FilmMlp(config_.x_dim + config_.c_dim, config_.x_dim, config_.hidden, config_.embed_dim,
                 embedding_.param_count());
  params_.assign(embedding_.param_count() + mlp_.param_count(), 0.0);
  blocks_.clear();
  embedding_.append_blocks(blocks_);
  mlp_.append_blocks(blocks_);
}

std::vector<std::uint8_t> ScoreNet::decay_mask() const {
  std::vector<std::uint8_t> mask(params_.size(), 0);
  for (const auto& b : blocks_) {
    if (b.kind == ParamKind::kWeight) std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size, 1);
  }
  return mask;
}

std::vector<double> ScoreNet::sigma_embed(double sigma) const {
  std::vector<double> e(config_.embed_dim);
  embedding_.embed(params_, sigma, e, nullptr);
  return e;
}

void ScoreNet::forward(std::span<const double> x, std::span<const double> c, double sigma,
                       std::span<const double> sigma_emb, std::span<double> out, Cache* cache) const {
  if (x.size() != config_.x_dim || c.size() != config_.c_dim || out.size() != config_.x_dim) {
    throw ConfigError("score net forward: expected x of length " + std::to_string(config_.x_dim) +
                      " and c of length " + std::to_string(config_.c_dim));
  }
  if (!(sigma > 0.0)) throw DomainError("score net forward: sigma must be positive");
  const double c_in = 1.0 / std::sqrt(sigma * sigma + config_.data_std * config_.data_std);
  std::vector<double> input(config_.x_dim + config_.c_dim);
  for (std::size_t i = 0; i < config_.x_dim; ++i) input[i] = x[i] * c_in;
  std::copy(c.begin(), c.end(), input.begin() + static_cast<std::ptrdiff_t>(config_.x_dim));
  std::vector<double> raw(config_.x_dim);
  mlp_.forward(params_, input, sigma_emb, raw, cache != nullptr ? &cache->mlp : nullptr);
  for (std::size_t i = 0; i < config_.x_dim; ++i) out[i] = raw[i] / sigma;
  if (cache != nullptr) {
    cache->sigma = sigma;
    cache->embedding.assign(sigma_emb.begin(), sigma_emb.end());
    cache->mlp.embedding = cache->embedding;
    cache->raw = std::move(raw);
    cache->valid = true;
  }
}

void ScoreNet::forward(std::span<const double> x, std::span<const double> c, double sigma, std::span<double> out,
                       Cache* cache) const {
  std::vector<double> e(config_.embed_dim);
  embedding_.embed(params_, sigma, e, cache != nullptr ? &cache->emb : nullptr);
  forward(x, c, sigma, e, out, cache);
}

void ScoreNet::backward(const Cache& cache, std::span<const double> d_score, std::span<double> grad) const {
  if (!cache.valid || cache.emb.features.empty()) throw UsageError("score net backward: no forward cache");
  if (grad.size() != params_.size() || d_score.size() != config_.x_dim) {
    throw ConfigError("score net backward: gradient buffer size mismatch");
  }
  std::vector<double> d_raw(config_.x_dim);
  for (std::size_t i = 0; i < config_.x_dim; ++i) d_raw[i] = d_score[i] / cache.sigma;
  std::vector<double> d_emb(config_.embed_dim, 0.0);
  mlp_.backward(params_, cache.mlp, d_raw, grad, d_emb);
  embedding_.backward(params_, cache.emb, d_emb, grad);
}

void ScoreNet::evaluate(std::span<const double> x, std::span<const double> c, double sigma,
                        std::span<double> out) const {
  forward(x, c, sigma, out, nullptr);
}

double dsm_loss_and_grad(const ScoreNet& net, std::span<const double> x0, std::span<const double> c, double sigma,
                         std::span<const double> z, std::span<double> grad) {
  const std::size_t dim = x0.size();
  std::vector<double> x_t(dim), s(dim), d_score(dim);
  for (std::size_t i = 0; i < dim; ++i) x_t[i] = x0[i] + sigma * z[i];
  ScoreNet::Cache cache;
  net.forward(x_t, c, sigma, s, &cache);
  double loss = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double r = sigma * s[i] + z[i];
    loss += r * r;
    d_score[i] = sigma * r;
  }
  if (!std::isfinite(loss)) throw NumericError("score-matching loss is not finite at sigma=" + std::to_string(sigma));
  net.backward(cache, d_score, grad);
  return 0.5 * loss;
}

}  // namespace scorekit
