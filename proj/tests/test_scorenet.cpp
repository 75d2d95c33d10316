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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "scorekit/error.hpp"
#include "scorekit/kernels.hpp"
#include "scorekit/optimizer.hpp"
#include "scorekit/scorenet.hpp"

using namespace scorekit;
using scorekit::testing::random_small_net;

namespace {

const ParamBlock& block(const ScoreNet& net, const std::string& name) {
  for (const auto& b : net.blocks()) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("no block " + name);
}

// Plain PReLU MLP on the same parameters, ignoring every FiLM projection.
std::vector<double> plain_mlp(const ScoreNet& net, const std::vector<double>& x, const std::vector<double>& c,
                              double sigma) {
  const auto& cfg = net.config();
  const auto p = net.params();
  std::vector<double> h;
  const double c_in = 1.0 / std::sqrt(sigma * sigma + cfg.data_std * cfg.data_std);
  for (double v : x) h.push_back(v * c_in);
  h.insert(h.end(), c.begin(), c.end());
  auto affine = [&](const std::string& name, const std::vector<double>& in) {
    const auto& w = block(net, name + ".weight");
    const auto& b = block(net, name + ".bias");
    std::vector<double> out(b.size);
    for (std::size_t r = 0; r < b.size; ++r) {
      double acc = p[b.offset + r];
      for (std::size_t k = 0; k < in.size(); ++k) acc += p[w.offset + r * in.size() + k] * in[k];
      out[r] = acc;
    }
    return out;
  };
  for (std::size_t l = 0; l < cfg.hidden.size(); ++l) {
    const std::string name = "film_mlp." + std::to_string(l);
    auto q = affine(name + ".linear", h);
    const auto& slope = block(net, name + ".prelu");
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] <= 0.0) q[i] *= p[slope.offset + i];
    }
    h = std::move(q);
  }
  auto out = affine("readout", h);
  for (double& v : out) v /= sigma;
  return out;
}

std::vector<double> batch_grad(const ScoreNet& net, const std::vector<DsmExample>& batch, bool parallel) {
  std::vector<double> g(net.param_count());
  if (parallel) {
    kernels::omp::batch_dsm_gradient(net, batch, g);
  } else {
    kernels::serial::batch_dsm_gradient(net, batch, g);
  }
  return g;
}

std::vector<DsmExample> random_batch(const ScoreNet& net, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DsmExample> batch(n);
  for (auto& ex : batch) {
    ex.x0.resize(net.config().x_dim);
    ex.c.resize(net.config().c_dim);
    ex.z.resize(net.config().x_dim);
    rng.fill_normal(ex.x0);
    rng.fill_normal(ex.c);
    rng.fill_normal(ex.z);
    ex.sigma = std::exp(rng.uniform(std::log(5e-4), std::log(5.0)));
  }
  return batch;
}

}  // namespace

TEST_CASE("sigma embedding has embed_dim outputs and is deterministic") {
  ScoreNetConfig cfg;
  cfg.n_pairs = 32;
  cfg.embed_dim = 256;
  ScoreNet net(cfg);
  const auto a = net.sigma_embed(0.3);
  CHECK(a.size() == 256);
  CHECK(a == net.sigma_embed(0.3));
  CHECK(net.sigma_embed(5.0).size() == 256);
  CHECK(a != net.sigma_embed(0.31));
  CHECK_THROWS_AS(net.sigma_embed(0.0), DomainError);
  CHECK_THROWS_AS(net.sigma_embed(-1.0), DomainError);
}

TEST_CASE("sigma embedding weight gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ScoreNet net = random_small_net(100 + seed);
    const auto& emb = net.embedding();
    Rng rng(seed);
    std::vector<double> d_out(emb.embed_dim());
    rng.fill_normal(d_out);
    const double sigma = 0.7;
    auto loss = [&] {
      const auto e = net.sigma_embed(sigma);
      return std::inner_product(e.begin(), e.end(), d_out.begin(), 0.0);
    };
    SigmaEmbedding::Cache cache;
    std::vector<double> e(emb.embed_dim());
    emb.embed(net.params(), sigma, e, &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    emb.backward(net.params(), cache, d_out, grad);
    auto p = net.params();
    for (std::size_t i = 0; i < emb.param_count(); ++i) {
      const double orig = p[i];
      p[i] = orig + testing::kFdStep;
      const double up = loss();
      p[i] = orig - testing::kFdStep;
      const double down = loss();
      p[i] = orig;
      CHECK(testing::rel_err(grad[i], (up - down) / (2.0 * testing::kFdStep)) < 1e-4);
    }
  }
}

TEST_CASE("frequencies are frozen: no parameter block covers them") {
  ScoreNet net(ScoreNetConfig{});
  std::size_t covered = 0;
  for (const auto& b : net.blocks()) covered += b.size;
  CHECK(covered == net.param_count());
  CHECK(net.embedding().frequencies().size() == 32);
}

TEST_CASE("zero-initialized read-out gives a zero score") {
  ScoreNetConfig cfg;
  cfg.x_dim = 3;
  cfg.c_dim = 2;
  ScoreNet net(cfg);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(3), c(2), s(3, 1.0);
    rng.fill_normal(x);
    rng.fill_normal(c);
    net.evaluate(x, c, std::exp(rng.uniform(-7.0, 1.6)), s);
    CHECK(s == std::vector<double>(3, 0.0));
  }
}

TEST_CASE("FiLM identity reduces to a plain MLP") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ScoreNet net = random_small_net(200 + seed);
    net.mlp().make_film_identity(net.params());
    Rng rng(seed);
    std::vector<double> x(net.config().x_dim), c(net.config().c_dim), s(net.config().x_dim);
    rng.fill_normal(x);
    rng.fill_normal(c);
    net.evaluate(x, c, 0.4, s);
    const auto ref = plain_mlp(net, x, c, 0.4);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward is pure") {
  ScoreNet net = random_small_net(7);
  std::vector<double> x(net.config().x_dim, 0.3), c(net.config().c_dim, -0.2);
  std::vector<double> a(x.size()), b(x.size());
  net.evaluate(x, c, 0.05, a);
  net.evaluate(x, c, 0.05, b);
  CHECK(a == b);
  ScoreNet::Cache cache;
  net.forward(x, c, 0.05, b, &cache);
  CHECK(a == b);
}

TEST_CASE("forward rejects mismatched dimensions and non-positive sigma") {
  ScoreNetConfig cfg;
  cfg.x_dim = 2;
  cfg.c_dim = 1;
  ScoreNet net(cfg);
  std::vector<double> out(2);
  CHECK_THROWS_AS(net.evaluate(std::vector<double>(3), std::vector<double>(1), 1.0, out), ConfigError);
  CHECK_THROWS_AS(net.evaluate(std::vector<double>(2), std::vector<double>{}, 1.0, out), ConfigError);
  CHECK_THROWS_AS(net.evaluate(std::vector<double>(2), std::vector<double>(1), 0.0, out), DomainError);
}

TEST_CASE("parameter count is a pure function of the layer sizes") {
  ScoreNetConfig a;
  a.hidden = {5, 7};
  a.n_pairs = 3;
  a.embed_dim = 4;
  a.x_dim = 2;
  a.c_dim = 1;
  ScoreNetConfig b = a;
  b.init_seed = 99;
  b.data_std = 3.0;
  const std::size_t emb = (2 * 3 * 4 + 4) + 2 * (4 * 4 + 4) + 3 * 4;
  // per hidden layer: linear, FiLM scale and shift, slopes
  const std::size_t l0 = (3 * 5 + 5) + 2 * (4 * 5 + 5) + 5;
  const std::size_t l1 = (5 * 7 + 7) + 2 * (4 * 7 + 7) + 7;
  const std::size_t readout = 7 * 2 + 2;
  CHECK(ScoreNet(a).param_count() == emb + l0 + l1 + readout);
  CHECK(ScoreNet(b).param_count() == ScoreNet(a).param_count());
}

TEST_CASE("every parameter gradient matches central differences over random configs") {
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const auto r = testing::check_scorenet_gradient(seed);
    INFO("seed " << seed << " " << r.description << " worst index " << r.worst_index);
    CHECK(r.worst < 1e-4);
  }
}

TEST_CASE("backward without a forward cache is a usage error") {
  ScoreNet net(ScoreNetConfig{});
  ScoreNet::Cache cache;
  std::vector<double> grad(net.param_count());
  CHECK_THROWS_AS(net.backward(cache, std::vector<double>{1.0}, grad), UsageError);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  ScoreNet net = random_small_net(11);
  std::vector<double> x(net.config().x_dim, 0.5), c(net.config().c_dim, 0.1), s(x.size());
  ScoreNet::Cache cache;
  net.forward(x, c, 0.2, s, &cache);
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(cache, std::vector<double>(x.size(), 0.0), grad);
  CHECK(std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; }));
}

TEST_CASE("duplicated example gives the single-example gradient") {
  ScoreNet net = random_small_net(12);
  const auto one = random_batch(net, 1, 5);
  const std::vector<DsmExample> two{one[0], one[0]};
  const auto g1 = batch_grad(net, one, false);
  const auto g2 = batch_grad(net, two, false);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-14));
}

TEST_CASE("batch gradient is invariant to permutation and matches the serial reference") {
  ScoreNet net = random_small_net(13);
  auto batch = random_batch(net, 37, 6);
  const auto ref = batch_grad(net, batch, false);
  const auto par = batch_grad(net, batch, true);
  std::reverse(batch.begin(), batch.end());
  const auto perm = batch_grad(net, batch, true);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(par[i] == doctest::Approx(ref[i]).epsilon(1e-12).scale(1e-12));
    CHECK(perm[i] == doctest::Approx(ref[i]).epsilon(1e-12).scale(1e-12));
  }
  CHECK(batch_grad(net, batch, true) == perm);
}

TEST_CASE("learning rate warms up linearly then decays by a cosine") {
  const auto s = LrSchedule::with_fraction(2e-4, 1.6e-6, 0.05, 1000);
  CHECK(s.warmup_steps == 50);
  CHECK(s.at(0) == 1.6e-6);
  CHECK(s.at(25) == doctest::Approx(1.6e-6 + 0.5 * (2e-4 - 1.6e-6)));
  CHECK(s.at(50) == 2e-4);
  CHECK(s.at(525) == doctest::Approx(1e-4));
  CHECK(s.at(1000) == doctest::Approx(0.0).scale(1.0));
  for (std::size_t t = 51; t <= 1000; ++t) CHECK(s.at(t) <= s.at(t - 1));
  CHECK_THROWS_AS(LrSchedule::with_fraction(0.0, 0.0, 0.05, 10), ConfigError);
  CHECK_THROWS_AS(LrSchedule::with_fraction(1e-3, 0.0, 1.5, 10), ConfigError);
}

TEST_CASE("weight decay spares biases and PReLU slopes") {
  ScoreNet net = random_small_net(14);
  AdamConfig cfg;
  cfg.lr.peak_lr = cfg.lr.start_lr = 0.1;
  cfg.lr.total_steps = 10;
  cfg.weight_decay = 0.01;
  const auto mask = net.decay_mask();
  Adam adam(cfg, mask);
  const std::vector<double> before(net.params().begin(), net.params().end());
  adam.update(net.params(), std::vector<double>(net.param_count(), 0.0));
  for (const auto& b : net.blocks()) {
    for (std::size_t i = b.offset; i < b.offset + b.size; ++i) {
      if (b.kind == ParamKind::kWeight) {
        CHECK(net.params()[i] == doctest::Approx(before[i] * (1.0 - 0.1 * 0.01)).epsilon(1e-14));
      } else {
        CHECK(net.params()[i] == before[i]);
      }
    }
  }
  CHECK(adam.first_moment().size() == net.param_count());
  CHECK(adam.second_moment().size() == net.param_count());
  CHECK(adam.step() == 1);
}

TEST_CASE("Adam first step moves each parameter by the learning rate") {
  AdamConfig cfg;
  cfg.lr.peak_lr = cfg.lr.start_lr = 1e-3;
  cfg.weight_decay = 0.0;
  Adam adam(cfg, std::vector<std::uint8_t>(3, 1));
  std::vector<double> p{1.0, -2.0, 0.5};
  adam.update(p, std::vector<double>{0.3, -4.0, 1e-2});
  CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(0.5 - 1e-3).epsilon(1e-5));
  CHECK_THROWS_AS(adam.update(p, std::vector<double>(2)), ConfigError);
}
