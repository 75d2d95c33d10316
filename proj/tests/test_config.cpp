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

#include <cstdio>
#include <fstream>
#include <string>

#include "scorekit/config.hpp"
#include "scorekit/error.hpp"

using namespace scorekit;

TEST_CASE("empty text gives the defaults") {
  const auto c = ToolkitConfig::parse("# nothing but a comment\n\n");
  CHECK(c.to_json() == ToolkitConfig{}.to_json());
  CHECK(c.sigma_min == kDefaultSigmaMin);
  CHECK(c.sigma_max == kDefaultSigmaMax);
  CHECK(c.steps == kDefaultSteps);
  CHECK(c.epsilon == kDefaultEpsilon);
}

TEST_CASE("assignments, comments and lists") {
  const auto c = ToolkitConfig::parse(
      "seed = 42   # master seed\n"
      "schedule.sigma_max = 20.25\n"
      "schedule.fit_data = true\n"
      "sampling.steps = 8\n"
      "model.hidden = 32, 16\n"
      "task.weights = 0.5, 0.5\n"
      "distort.noise = a.wav, b.wav\n"
      "distort.weight.clip = 3\n"
      "distort.bound.lowpass.cutoff_hz = 1000, 4000, linear\n"
      "metrics.resolutions = 256:64, 512:128\n");
  CHECK(c.seed == 42);
  CHECK(c.sigma_max == 20.25);
  CHECK(c.fit_schedule);
  CHECK(c.steps == 8);
  CHECK(c.model.hidden == std::vector<std::size_t>{32, 16});
  CHECK(c.task_weights == std::vector<double>{0.5, 0.5});
  CHECK(c.distortion.noise_pool == std::vector<std::string>{"a.wav", "b.wav"});
  CHECK(c.distortion.weights.at("clip") == 3.0);
  const auto& b = c.distortion.bounds.at("lowpass");
  CHECK(b[0].name == "cutoff_hz");
  CHECK(b[0].lo == 1000.0);
  CHECK(b[0].scale == ParamScale::kLinear);
  CHECK(c.resolutions.size() == 2);
  CHECK(c.resolutions[1].frame == 512);
  CHECK(c.schedule_for(4.1).sigma_max() == doctest::Approx(NoiseSchedule::for_data(4.1).sigma_max()));
}

TEST_CASE("text form round-trips") {
  auto c = ToolkitConfig::parse(
      "seed = 18446744073709551615\n"
      "schedule.sigma_min = 0.0001234567890123\n"
      "optimizer.peak_lr = 0.1\n"
      "task.means = -2.5, 1e-300, 3\n"
      "task.weights = 0.2, 0.3, 0.5\n"
      "task.variances = 0.1, 0.2, 0.3\n"
      "distort.rir = room.wav\n"
      "task.kind = denoise\n"
      "distort.bound.clip.threshold = 0.3, 0.7, log\n");
  const auto text = c.to_text();
  const auto again = ToolkitConfig::parse(text);
  CHECK(again.to_json() == c.to_json());
  CHECK(again.to_text() == text);
  CHECK(again.task_means[1] == 1e-300);
  CHECK(again.sigma_min == 0.0001234567890123);
  CHECK(ToolkitConfig::parse(ToolkitConfig{}.to_text()).to_json() == ToolkitConfig{}.to_json());
}

TEST_CASE("unknown keys and malformed values are config errors") {
  CHECK_THROWS_AS(ToolkitConfig::parse("sampling.stepz = 4\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("seed 4\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("seed = -4\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("sampling.steps = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("sampling.epsilon = fast\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("schedule.fit_data = maybe\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("distort.weight.vinyl = 1\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("distort.bound.clip.knee = 0, 1\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("distort.bound.clip.threshold = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("distort.bound.clip.threshold = 0.1, 0.5, cubic\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("metrics.resolutions = 512\n"), ConfigError);
  try {
    ToolkitConfig::parse("seed = 1\nbogus = 2\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("validation rejects out-of-range values") {
  CHECK_THROWS_AS(ToolkitConfig::parse("schedule.sigma_min = 6\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("sampling.steps = 0\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("sampling.epsilon = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("sampling.realizations = 0\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("model.hidden = \n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("model.data_std = 0\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("optimizer.warmup_fraction = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("train.batch = 0\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("task.weights = 0.5, 0.6\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("task.noise_std = 0\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("task.kind = speech\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("distort.count_probabilities = 0.5, 0.4\n"), ConfigError);
  CHECK_THROWS_AS(ToolkitConfig::parse("metrics.resolutions = 512:1024\n"), ConfigError);
}

TEST_CASE("load reads files and reports missing ones as I/O errors") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream f(path);
    f << "seed = 9\nsampling.steps = 16\n";
  }
  const auto c = ToolkitConfig::load(path);
  CHECK(c.seed == 9);
  CHECK(c.steps == 16);
  std::remove(path.c_str());
  CHECK_THROWS_AS(ToolkitConfig::load("/nonexistent/dir/x.cfg"), IoError);
}

TEST_CASE("adam settings follow the optimizer keys") {
  const auto c = ToolkitConfig::parse("optimizer.peak_lr = 0.001\noptimizer.weight_decay = 0.05\n");
  const auto a = c.adam(1000);
  CHECK(a.weight_decay == 0.05);
  CHECK(a.lr.at(a.lr.warmup_steps) == doctest::Approx(0.001));
}
