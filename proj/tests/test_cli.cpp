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

// Drives the scorekit binary end to end.

#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scorekit/checkpoint.hpp"
#include "scorekit/diffusion.hpp"
#include "scorekit/oracle.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/schedule.hpp"
#include "scorekit/scorenet.hpp"
#include "scorekit/signal.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace scorekit;

namespace {

const std::string kCli = SCOREKIT_CLI_PATH;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("scorekit_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& f) const { return (path_ / f).string(); }

 private:
  fs::path path_;
};

// Runs the CLI with stdout to `out` and stderr discarded; returns the exit code.
int run(const std::string& args, const std::string& out = "/dev/null") {
  const std::string cmd = kCli + " " + args + " > " + out + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<json> json_lines(const std::string& path) {
  std::vector<json> out;
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

void write_speech(const std::string& path, std::uint64_t seed, std::size_t n = 4000) {
  Rng rng(seed);
  Signal s{std::vector<double>(n), 16000};
  const double f = 150.0 + 50.0 * static_cast<double>(seed % 7);
  for (std::size_t i = 0; i < n; ++i) {
    s.samples[i] = 0.3 * std::sin(2.0 * 3.141592653589793 * f * static_cast<double>(i) / 16000.0) + 0.02 * rng.normal();
  }
  write_wav(path, s);
}

const std::string kDenoise = "--set task.kind=denoise --set task.dim=4 ";

}  // namespace

TEST_CASE("usage and configuration errors exit with code 2") {
  TempDir d("usage");
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--set bogus=1 config") == 2);
  CHECK(run("--set sampling.steps=0 config") == 2);
  CHECK(run(kDenoise + "enhance --oracle --checkpoint x.ck --input a.wav --output b.wav") == 2);
  CHECK(run("config", d / "cfg.txt") == 0);
  CHECK(slurp(d / "cfg.txt").find("sampling.steps = 64") != std::string::npos);
}

TEST_CASE("missing files exit with code 3") {
  TempDir d("io");
  CHECK(run("--config /nonexistent.cfg config") == 3);
  CHECK(run("eval --reference /nonexistent.wav --estimate /nonexistent.wav") == 3);
  CHECK(run(kDenoise + "enhance --oracle --input /nonexistent.wav --output " + (d / "o.wav")) == 3);
}

TEST_CASE("distort: empty manifest succeeds with an empty chain log") {
  TempDir d("distort_empty");
  std::ofstream(d / "m.txt") << "# nothing\n";
  CHECK(run("distort --manifest " + (d / "m.txt") + " --out " + (d / "out"), d / "log.jsonl") == 0);
  CHECK(slurp(d / "out/chains.jsonl").empty());
  const auto log = json_lines(d / "log.jsonl");
  REQUIRE(!log.empty());
  CHECK(log[0]["event"] == "config");
}

TEST_CASE("distort: fixed seed reruns are byte identical") {
  TempDir d("distort_twice");
  write_speech(d / "a.wav", 1);
  std::ofstream(d / "m.txt") << (d / "a.wav") << "\n";
  CHECK(run("--seed 5 distort --manifest " + (d / "m.txt") + " --out " + (d / "x")) == 0);
  CHECK(run("--seed 5 distort --manifest " + (d / "m.txt") + " --out " + (d / "y")) == 0);
  for (const std::string f : {"chains.jsonl", "000000_clean.wav", "000000_distorted.wav"}) {
    CHECK(!slurp(d / ("x/" + f)).empty());
    CHECK(slurp(d / ("x/" + f)) == slurp(d / ("y/" + f)));
  }
  CHECK(run("--seed 6 distort --manifest " + (d / "m.txt") + " --out " + (d / "z")) == 0);
  CHECK(slurp(d / "x/chains.jsonl") != slurp(d / "z/chains.jsonl"));
}

TEST_CASE("distort: 100 files give 100 replayable log lines") {
  TempDir d("distort_100");
  {
    std::ofstream m(d / "m.txt");
    for (int i = 0; i < 100; ++i) {
      const auto p = d / ("in" + std::to_string(i) + ".wav");
      write_speech(p, static_cast<std::uint64_t>(i), 2000);
      m << p << "\n";
    }
  }
  REQUIRE(run("--seed 11 distort --manifest " + (d / "m.txt") + " --out " + (d / "gen")) == 0);
  const auto log = json_lines(d / "gen/chains.jsonl");
  REQUIRE(log.size() == 100);
  for (const auto& rec : log) CHECK(!rec.contains("error"));
  REQUIRE(run("distort --replay " + (d / "gen/chains.jsonl") + " --out " + (d / "replay")) == 0);
  for (const auto& rec : log) {
    const auto name = rec["distorted"].get<std::string>();
    CHECK(!slurp(d / ("gen/" + name)).empty());
    CHECK(slurp(d / ("gen/" + name)) == slurp(d / ("replay/" + name)));
  }
}

TEST_CASE("distort: per-file failures are logged and give a nonzero exit") {
  TempDir d("distort_fail");
  write_speech(d / "a.wav", 1);
  std::ofstream(d / "m.txt") << (d / "a.wav") << "\n/nonexistent.wav\n";
  CHECK(run("distort --manifest " + (d / "m.txt") + " --out " + (d / "out")) == 3);
  const auto log = json_lines(d / "out/chains.jsonl");
  REQUIRE(log.size() == 2);
  CHECK(!log[0].contains("error"));
  CHECK(log[1]["category"] == "io");
}

TEST_CASE("train: zero iterations leave the initialization") {
  TempDir d("train_zero");
  const std::string small = "--seed 9 --set model.hidden=8,8 --set model.embed_dim=8 --set model.n_pairs=4 --set train.iterations=0 ";
  REQUIRE(run(small + "train --out " + (d / "z.ck")) == 0);
  const auto ck = Checkpoint::load(d / "z.ck");
  ScoreNetConfig nc = ck.net_config;
  CHECK(nc.init_seed == 9);
  const ScoreNet fresh(nc);
  CHECK(std::vector<double>(fresh.params().begin(), fresh.params().end()) == ck.params);
  CHECK(ck.config_text.find("seed = 9") != std::string::npos);
}

TEST_CASE("train: resumed training matches an uninterrupted run") {
  TempDir d("train_resume");
  const std::string cfg =
      "--seed 4 --set model.hidden=8,8 --set model.embed_dim=8 --set model.n_pairs=4 --set train.iterations=40 "
      "--set train.batch=16 ";
  REQUIRE(run(cfg + "train --out " + (d / "full.ck")) == 0);
  REQUIRE(run(cfg + "train --max-steps 15 --out " + (d / "half.ck")) == 0);
  REQUIRE(run(cfg + "train --resume " + (d / "half.ck") + " --out " + (d / "resumed.ck")) == 0);
  const auto full = Checkpoint::load(d / "full.ck");
  const auto resumed = Checkpoint::load(d / "resumed.ck");
  CHECK(Checkpoint::load(d / "half.ck").optimizer->step == 15);
  CHECK(resumed.optimizer->step == 40);
  CHECK(full.params == resumed.params);
  CHECK(full.optimizer->m == resumed.optimizer->m);
  CHECK(full.optimizer->v == resumed.optimizer->v);
}

TEST_CASE("train: a diverging run aborts with code 4 and keeps its trace") {
  TempDir d("train_nan");
  const int rc = run("--set optimizer.peak_lr=1e12 --set train.iterations=50 --set train.batch=8 train --out " +
                         (d / "x.ck") + " --trace " + (d / "t.jsonl"),
                     d / "log.jsonl");
  CHECK(rc == 4);
  CHECK(!fs::exists(d / "x.ck"));
  CHECK(!json_lines(d / "t.jsonl").empty());
  CHECK(json_lines(d / "log.jsonl").back()["event"] == "abort");
}

TEST_CASE("enhance: oracle denoising improves SNR and is deterministic") {
  TempDir d("enhance");
  REQUIRE(run(kDenoise + "--seed 3 sample-prior --exact --count 2000 --out " + (d / "clean.wav") + " --noisy " +
              (d / "noisy.wav")) == 0);
  const std::string base = kDenoise + "--seed 8 enhance --oracle --input " + (d / "noisy.wav") + " --reference " +
                           (d / "clean.wav") + " --steps 8 --realizations 4 ";
  REQUIRE(run(base + "--output " + (d / "a.wav"), d / "a.jsonl") == 0);
  REQUIRE(run(base + "--output " + (d / "b.wav")) == 0);
  CHECK(slurp(d / "a.wav") == slurp(d / "b.wav"));
  const auto log = json_lines(d / "a.jsonl");
  CHECK(log.front()["event"] == "config");
  CHECK(log.front()["seed"] == 8);
  CHECK(log.back()["snr_improvement"].get<double>() > 0.0);
}

TEST_CASE("enhance: one realization equals a single sampler draw per block") {
  TempDir d("enhance_single");
  REQUIRE(run(kDenoise + "--seed 3 sample-prior --exact --count 64 --out " + (d / "clean.wav") + " --noisy " +
              (d / "noisy.wav")) == 0);
  REQUIRE(run(kDenoise + "--seed 21 enhance --oracle --input " + (d / "noisy.wav") + " --output " + (d / "o.wav") +
              " --steps 6 --epsilon 1.5 --realizations 1") == 0);
  const auto noisy = read_wav(d / "noisy.wav");
  const auto out = read_wav(d / "o.wav");
  const auto prior = GmmPrior::scalar({0.3, 0.7}, {-2.0, 2.0}, {0.1, 0.1});
  const PosteriorScore score(prior, 1.0);
  const auto plan = make_plan(NoiseSchedule(), 6, 1.5);
  for (std::size_t b = 0; b < 16; ++b) {
    Rng rng = Rng(21).split(b);
    const std::span<const double> c(noisy.samples.data() + 4 * b, 4);
    const auto x = langevin_sample(score, c, plan, 4, rng);
    for (std::size_t j = 0; j < 4; ++j) CHECK(out.samples[4 * b + j] == doctest::Approx(x[j]).epsilon(1e-6));
  }
}

TEST_CASE("sweep: a single N gives a single row") {
  TempDir d("sweep");
  REQUIRE(run(kDenoise + "sample-prior --exact --count 400 --out " + (d / "clean.wav") + " --noisy " +
              (d / "noisy.wav")) == 0);
  REQUIRE(run(kDenoise + "--set sampling.realizations=2 sweep --oracle --input " + (d / "noisy.wav") +
                  " --reference " + (d / "clean.wav") + " --steps 1 --epsilons 2.3",
              d / "log.jsonl") == 0);
  const auto log = json_lines(d / "log.jsonl");
  REQUIRE(log.size() == 2);
  CHECK(log[1]["event"] == "sweep_row");
  CHECK(log[1]["steps"] == 1);
  CHECK(log[1]["rtf"].get<double>() > 0.0);
  CHECK(run(kDenoise + "sweep --oracle --input " + (d / "noisy.wav") + " --reference " + (d / "clean.wav") +
            " --steps 0") == 2);
}

TEST_CASE("eval and features") {
  TempDir d("eval");
  write_speech(d / "a.wav", 3, 8000);
  REQUIRE(run("eval --reference " + (d / "a.wav") + " --estimate " + (d / "a.wav"), d / "log.jsonl") == 0);
  const auto log = json_lines(d / "log.jsonl");
  CHECK(log.back()["metrics"]["snr"] == 100.0);
  CHECK(log.back()["metrics"]["mrstft"] == 0.0);
  REQUIRE(run("features --input " + (d / "a.wav") + " --out " + (d / "f.bin") + " --deltas", d / "f.jsonl") == 0);
  const auto f = json_lines(d / "f.jsonl").back();
  CHECK(f["cols"] == 160);
  CHECK(f["rows"] == 1 + 8000 / 160);
}
