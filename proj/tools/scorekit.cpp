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

// scorekit command-line tool.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage error,
// 3 I/O error, 4 numeric failure (non-finite values, undefined metrics).
//
// Every command writes JSON lines to stdout (or --log). The first line echoes the
// resolved configuration and seed; human-readable tables go to stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scorekit/checkpoint.hpp"
#include "scorekit/config.hpp"
#include "scorekit/diffusion.hpp"
#include "scorekit/distort.hpp"
#include "scorekit/error.hpp"
#include "scorekit/features.hpp"
#include "scorekit/kernels.hpp"
#include "scorekit/metrics.hpp"
#include "scorekit/oracle.hpp"
#include "scorekit/schedule.hpp"
#include "scorekit/scorenet.hpp"
#include "scorekit/signal.hpp"
#include "scorekit/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace scorekit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UsageError*>(&e) ||
      dynamic_cast<const DomainError*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const UndefinedMetric*>(&e)) return kExitNumeric;
  return kExitOther;
}

const char* category_for(int code) {
  switch (code) {
    case kExitConfig:
      return "config";
    case kExitIo:
      return "io";
    case kExitNumeric:
      return "numeric";
    default:
      return "other";
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Non-empty, non-comment lines of a text file.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

class JsonLog {
 public:
  explicit JsonLog(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw IoError("cannot open log file " + path);
  }
  void write(const json& j) {
    out() << j.dump() << '\n';
    out().flush();
  }

 private:
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  std::ofstream file_;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::vector<std::string> overrides;
  std::string log_path;
};

// Config file, then --set overrides, then --seed.
ToolkitConfig resolve_config(const Globals& g) {
  ToolkitConfig c = g.config_path.empty() ? ToolkitConfig{} : ToolkitConfig::load(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    c.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

void echo_config(JsonLog& log, const std::string& command, const ToolkitConfig& c) {
  log.write({{"event", "config"},
             {"command", command},
             {"seed", c.seed},
             {"jobs", kernels::max_jobs()},
             {"config", c.to_json()}});
}

SamplingPlan plan_for(const NoiseSchedule& schedule, int steps, double epsilon) {
  return steps == 1 ? single_step_plan(schedule) : make_plan(schedule, steps, epsilon);
}

// A score model plus the schedule it was trained for.
struct Model {
  std::unique_ptr<ScoreFunction> score;
  NoiseSchedule schedule;
  std::size_t x_dim = 1;
  std::size_t c_dim = 0;
  std::string source;
};

Model load_model(const ToolkitConfig& c, const std::string& checkpoint, bool oracle, bool conditional) {
  if (oracle == !checkpoint.empty()) throw UsageError("give exactly one of --checkpoint or --oracle");
  Model m;
  if (oracle) {
    const auto prior = c.prior();
    m.schedule = c.schedule_for(prior.overall_mean_square());
    m.source = "oracle";
    if (conditional) {
      m.score = std::make_unique<PosteriorScore>(prior, c.task_noise_std);
      m.x_dim = m.c_dim = c.task_dim;
    } else {
      m.score = std::make_unique<GmmScore>(prior);
      m.x_dim = prior.dim();
    }
    return m;
  }
  const auto ck = Checkpoint::load(checkpoint);
  m.schedule = ck.schedule;
  m.x_dim = ck.net_config.x_dim;
  m.c_dim = ck.net_config.c_dim;
  m.score = std::make_unique<ScoreNet>(ck.make_net());
  m.source = checkpoint;
  return m;
}

// Frames the signal into blocks of x_dim, samples `realizations` estimates per block
// and averages them. Block f, realization r uses Rng(seed).split(f * realizations + r).
std::vector<double> enhance_samples(const Model& m, const std::vector<double>& noisy, const SamplingPlan& plan,
                                    int realizations, std::uint64_t seed) {
  if (m.c_dim != m.x_dim) throw ConfigError("enhance: model is not a conditional denoiser (x_dim != c_dim)");
  const std::size_t dim = m.x_dim;
  const std::size_t blocks = (noisy.size() + dim - 1) / dim;
  const auto reps = static_cast<std::size_t>(realizations);
  std::vector<double> conds(blocks * reps * dim, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t j = 0; j < dim && b * dim + j < noisy.size(); ++j) conds[(b * reps + r) * dim + j] = noisy[b * dim + j];
    }
  }
  const auto samples = kernels::omp::sample_many(*m.score, conds, dim, plan, dim, blocks * reps, Rng(seed));
  std::vector<double> out(noisy.size(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t j = 0; j < dim && b * dim + j < noisy.size(); ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < reps; ++r) acc += samples[(b * reps + r) * dim + j];
      out[b * dim + j] = acc / static_cast<double>(reps);
    }
  }
  return out;
}

json metrics_json(const MetricReport& m) {
  json terms = json::array();
  for (const auto& t : m.mrstft.terms) {
    terms.push_back({{"frame", t.resolution.frame},
                     {"hop", t.resolution.hop},
                     {"spectral_convergence", t.spectral_convergence},
                     {"log_magnitude", t.log_magnitude}});
  }
  return {{"snr", m.snr}, {"si_snr", m.si_snr}, {"lsd", m.lsd}, {"mrstft", m.mrstft.value}, {"mrstft_terms", terms}};
}

void check_same_shape(const Signal& a, const Signal& b, const std::string& what) {
  if (a.sample_rate != b.sample_rate) {
    throw ConfigError(what + ": sample rates differ (" + std::to_string(a.sample_rate) + " vs " +
                      std::to_string(b.sample_rate) + ")");
  }
  if (a.size() != b.size()) {
    throw ConfigError(what + ": lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number in list: '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

// ---------------------------------------------------------------------------
// distort

struct DistortArgs {
  std::string manifest;
  std::string replay;
  std::string out_dir;
};

struct FileResult {
  json record;
  int code = kExitOk;
};

FileResult distort_one(std::size_t index, const std::string& input, const DistortionChain& chain,
                       const DistortionResources& resources, const fs::path& out_dir) {
  FileResult r;
  char stem[32];
  std::snprintf(stem, sizeof stem, "%06zu", index);
  try {
    const Signal x = read_wav(input, WavReadOptions{true});
    const auto pair = apply_chain(x, chain, resources);
    // Logged names are relative to the output directory.
    const auto clean = std::string(stem) + "_clean.wav";
    const auto distorted = std::string(stem) + "_distorted.wav";
    write_wav((out_dir / clean).string(), pair.clean, WavEncoding::kFloat32);
    write_wav((out_dir / distorted).string(), pair.distorted, WavEncoding::kFloat32);
    r.record = {{"index", index},
                {"input", input},
                {"clean", clean},
                {"distorted", distorted},
                {"offset", pair.offset},
                {"chain", json::parse(chain_to_json(chain))}};
  } catch (const std::exception& e) {
    r.code = exit_code_for(e);
    r.record = {{"index", index}, {"input", input}, {"error", e.what()}, {"category", category_for(r.code)}};
  }
  return r;
}

int cmd_distort(const Globals& g, const DistortArgs& a) {
  auto cfg = resolve_config(g);
  JsonLog log(g.log_path);
  echo_config(log, "distort", cfg);
  if (a.manifest.empty() == a.replay.empty()) throw UsageError("distort: give exactly one of --manifest or --replay");

  std::vector<std::string> inputs;
  std::vector<DistortionChain> chains;
  if (!a.manifest.empty()) {
    inputs = read_lines(a.manifest);
    chains.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      Rng rng = Rng(cfg.seed).split(i);
      chains[i] = sample_chain(cfg.distortion, rng);
    }
  } else {
    for (const auto& line : read_lines(a.replay)) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("distort: malformed replay line: ") + e.what());
      }
      if (!j.contains("chain")) continue;
      inputs.push_back(j.at("input").get<std::string>());
      chains.push_back(chain_from_json(j.at("chain").dump()));
    }
  }

  fs::create_directories(a.out_dir);
  const auto resources = DistortionResources::load(cfg.distortion.noise_pool, cfg.distortion.rir_pool);
  std::vector<FileResult> results(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    results[k] = distort_one(k, inputs[k], chains[k], resources, a.out_dir);
  }

  const auto chain_log = (fs::path(a.out_dir) / "chains.jsonl").string();
  std::ofstream chain_file(chain_log);
  if (!chain_file) throw IoError("cannot write " + chain_log);
  int code = kExitOk;
  std::size_t failed = 0;
  for (const auto& r : results) {
    chain_file << r.record.dump() << '\n';
    log.write(r.record);
    if (r.code != kExitOk) {
      ++failed;
      if (code == kExitOk) code = r.code;
    }
  }
  log.write({{"event", "done"}, {"files", results.size()}, {"failed", failed}, {"chain_log", chain_log}});
  std::cerr << "distort: " << results.size() - failed << " of " << results.size() << " files written to "
            << a.out_dir << "\n";
  return code;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string out;
  std::string resume;
  std::string trace;
  std::size_t log_every = 100;
  std::optional<std::size_t> max_steps;
  bool serial = false;
};

std::unique_ptr<TrainingData> make_task(const ToolkitConfig& c) {
  if (c.task_kind == "denoise") return std::make_unique<DenoisingTask>(c.prior(), c.task_dim, c.task_noise_std);
  return std::make_unique<GmmData>(c.prior());
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  const auto cfg = resolve_config(g);
  JsonLog log(g.log_path);
  echo_config(log, "train", cfg);
  const auto data = make_task(cfg);

  std::optional<ScoreNet> net;
  Adam optimizer;
  NoiseSchedule schedule = cfg.schedule_for(data->data_mean_square());
  if (!a.resume.empty()) {
    const auto ck = Checkpoint::load(a.resume);
    net.emplace(ck.make_net());
    optimizer = ck.make_optimizer(cfg.adam(cfg.iterations));
    schedule = ck.schedule;
    log.write({{"event", "resume"}, {"checkpoint", a.resume}, {"step", optimizer.step()}});
  } else {
    ScoreNetConfig nc = cfg.model;
    nc.x_dim = data->x_dim();
    nc.c_dim = data->c_dim();
    nc.init_seed = cfg.seed;
    net.emplace(nc);
    optimizer = Adam(cfg.adam(cfg.iterations), net->decay_mask());
  }
  log.write({{"event", "schedule"}, {"sigma_min", schedule.sigma_min()}, {"sigma_max", schedule.sigma_max()}});

  std::ofstream trace;
  if (!a.trace.empty()) {
    trace.open(a.trace);
    if (!trace) throw IoError("cannot write trace " + a.trace);
  }
  // train.iterations is the total schedule length; a resumed run finishes it.
  TrainOptions opts;
  opts.iterations = cfg.iterations > optimizer.step() ? cfg.iterations - optimizer.step() : 0;
  if (a.max_steps) opts.iterations = std::min(opts.iterations, *a.max_steps);
  opts.batch = cfg.batch;
  opts.seed = cfg.seed;
  opts.parallel = !a.serial;
  double window = 0.0;
  std::size_t in_window = 0;
  opts.on_step = [&](std::size_t step, double loss, double lr) {
    if (trace.is_open()) trace << json{{"step", step}, {"loss", loss}, {"lr", lr}}.dump() << '\n';
    window += loss;
    ++in_window;
    if (a.log_every > 0 && (step + 1) % a.log_every == 0) {
      log.write({{"event", "progress"}, {"step", step + 1}, {"mean_loss", window / static_cast<double>(in_window)}, {"lr", lr}});
      window = 0.0;
      in_window = 0;
    }
  };
  try {
    train(*net, optimizer, *data, schedule, opts);
  } catch (const NumericError& e) {
    if (trace.is_open()) trace.flush();
    log.write({{"event", "abort"}, {"error", e.what()}});
    throw;
  }
  Checkpoint::capture(*net, schedule, &optimizer, cfg.to_text()).save(a.out);
  json done{{"event", "done"}, {"checkpoint", a.out}, {"step", optimizer.step()}};
  if (cfg.task_kind == "gmm" && data->x_dim() == 1) {
    const auto prior = cfg.prior();
    const double m = prior.overall_mean(0);
    const double s = std::sqrt(prior.overall_variance(0));
    json errs = json::object();
    for (double sigma : {0.1, 0.5, 1.0}) {
      errs[nlohmann::json(sigma).dump()] = relative_score_error(*net, prior, sigma, m - 6.0 * s, m + 6.0 * s, 2001);
    }
    done["relative_score_error"] = errs;
  }
  log.write(done);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// enhance / sweep

struct ModelArgs {
  std::string checkpoint;
  bool oracle = false;
};

struct EnhanceArgs {
  ModelArgs model;
  std::string input;
  std::string output;
  std::string reference;
  std::optional<int> steps;
  std::optional<double> epsilon;
  std::optional<int> realizations;
};

int cmd_enhance(const Globals& g, const EnhanceArgs& a) {
  auto cfg = resolve_config(g);
  if (a.steps) cfg.steps = *a.steps;
  if (a.epsilon) cfg.epsilon = *a.epsilon;
  if (a.realizations) cfg.realizations = *a.realizations;
  cfg.validate();
  JsonLog log(g.log_path);
  echo_config(log, "enhance", cfg);

  const auto model = load_model(cfg, a.model.checkpoint, a.model.oracle, true);
  const Signal noisy = read_wav(a.input);
  noisy.validate();
  std::optional<Signal> reference;
  if (!a.reference.empty()) {
    reference = read_wav(a.reference);
    check_same_shape(*reference, noisy, "enhance");
  }
  const auto plan = plan_for(model.schedule, cfg.steps, cfg.epsilon);
  const auto t0 = std::chrono::steady_clock::now();
  Signal out{enhance_samples(model, noisy.samples, plan, cfg.realizations, cfg.seed), noisy.sample_rate};
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_wav(a.output, out, WavEncoding::kFloat32);

  json rec{{"event", "enhanced"},
           {"model", model.source},
           {"input", a.input},
           {"output", a.output},
           {"steps", cfg.steps},
           {"epsilon", cfg.epsilon},
           {"realizations", cfg.realizations},
           {"seconds", seconds},
           {"rtf", seconds / noisy.duration()}};
  if (reference) {
    const double before = snr(reference->samples, noisy.samples);
    const auto after = evaluate_metrics(reference->samples, out.samples, cfg.resolutions);
    rec["input_snr"] = before;
    rec["metrics"] = metrics_json(after);
    rec["snr_improvement"] = after.snr - before;
    std::cerr << "enhance: SNR " << before << " dB -> " << after.snr << " dB\n";
  }
  log.write(rec);
  return kExitOk;
}

struct SweepArgs {
  ModelArgs model;
  std::string input;
  std::string reference;
  std::string steps = "1,2,4,8,16,32,64";
  std::string epsilons = "1.5,2.3,3.0";
};

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  const auto cfg = resolve_config(g);
  JsonLog log(g.log_path);
  echo_config(log, "sweep", cfg);
  const auto model = load_model(cfg, a.model.checkpoint, a.model.oracle, true);
  const Signal noisy = read_wav(a.input);
  const Signal reference = read_wav(a.reference);
  check_same_shape(reference, noisy, "sweep");
  std::vector<int> steps;
  for (double v : parse_list(a.steps)) {
    if (v < 1.0 || v != std::floor(v)) throw UsageError("sweep: steps must be positive integers");
    steps.push_back(static_cast<int>(v));
  }
  const auto epsilons = parse_list(a.epsilons);

  const double input_snr = snr(reference.samples, noisy.samples);
  std::fprintf(stderr, "%6s %6s %10s %10s %10s %10s\n", "N", "eps", "RTF", "SNR", "SI-SNR", "MRSTFT");
  for (double eps : epsilons) {
    for (int n : steps) {
      const auto plan = plan_for(model.schedule, n, eps);
      const auto t0 = std::chrono::steady_clock::now();
      const auto out = enhance_samples(model, noisy.samples, plan, cfg.realizations, cfg.seed);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto m = evaluate_metrics(reference.samples, out, cfg.resolutions);
      const double rtf = seconds / noisy.duration();
      log.write({{"event", "sweep_row"},
                 {"steps", n},
                 {"epsilon", eps},
                 {"realizations", cfg.realizations},
                 {"seconds", seconds},
                 {"rtf", rtf},
                 {"input_snr", input_snr},
                 {"metrics", metrics_json(m)}});
      std::fprintf(stderr, "%6d %6.2f %10.4g %10.3f %10.3f %10.4f\n", n, eps, rtf, m.snr, m.si_snr, m.mrstft.value);
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample-prior

struct SamplePriorArgs {
  ModelArgs model;
  std::size_t count = 1000;
  std::string out;
  std::string noisy;
  bool exact = false;
};

void write_values(const std::string& path, const std::vector<double>& v) {
  if (fs::path(path).extension() == ".wav") {
    write_wav(path, Signal{v, kDefaultSampleRate}, WavEncoding::kFloat32);
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f.precision(17);
  for (double x : v) f << x << '\n';
}

int cmd_sample_prior(const Globals& g, const SamplePriorArgs& a) {
  const auto cfg = resolve_config(g);
  JsonLog log(g.log_path);
  echo_config(log, "sample-prior", cfg);
  if (a.count == 0) throw UsageError("sample-prior: --count must be positive");

  std::vector<double> values;
  std::size_t dim = 1;
  std::string source = "exact";
  const auto prior = cfg.prior();
  if (a.exact) {
    if (!a.model.checkpoint.empty() || a.model.oracle) throw UsageError("sample-prior: --exact takes no model");
    values.resize(a.count);
    Rng rng(cfg.seed);
    for (auto& v : values) prior.sample(rng, std::span<double>(&v, 1));
  } else {
    const auto model = load_model(cfg, a.model.checkpoint, a.model.oracle, false);
    if (model.c_dim != 0) throw ConfigError("sample-prior: model is conditional; use enhance");
    dim = model.x_dim;
    source = model.source;
    const auto plan = plan_for(model.schedule, cfg.steps, cfg.epsilon);
    values = kernels::omp::sample_many(*model.score, {}, 0, plan, dim, a.count, Rng(cfg.seed));
  }
  write_values(a.out, values);

  json rec{{"event", "samples"}, {"source", source}, {"count", a.count}, {"dim", dim}, {"out", a.out}};
  double mean = 0.0, sq = 0.0;
  for (double v : values) {
    mean += v;
    sq += v * v;
  }
  mean /= static_cast<double>(values.size());
  rec["mean"] = mean;
  rec["variance"] = sq / static_cast<double>(values.size()) - mean * mean;
  if (dim == 1) {
    // Hard assignment by the posterior responsibility at the smallest noise level.
    std::vector<double> freq(prior.components(), 0.0);
    for (double v : values) {
      const auto resp = prior.responsibilities(std::span<const double>(&v, 1), 0.0);
      freq[static_cast<std::size_t>(std::max_element(resp.begin(), resp.end()) - resp.begin())] += 1.0;
    }
    for (auto& f : freq) f /= static_cast<double>(values.size());
    rec["component_frequencies"] = freq;
  }
  if (!a.noisy.empty()) {
    Rng rng = Rng(cfg.seed).split(~std::uint64_t{0});
    std::vector<double> noisy(values);
    for (auto& v : noisy) v += cfg.task_noise_std * rng.normal();
    write_values(a.noisy, noisy);
    rec["noisy"] = a.noisy;
  }
  log.write(rec);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string reference;
  std::string estimate;
  std::string pairs;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const auto cfg = resolve_config(g);
  JsonLog log(g.log_path);
  echo_config(log, "eval", cfg);
  std::vector<std::pair<std::string, std::string>> pairs;
  if (!a.pairs.empty()) {
    for (const auto& line : read_lines(a.pairs)) {
      std::istringstream ss(line);
      std::string r, e;
      if (!(ss >> r >> e)) throw ConfigError("eval: pair lines need '<reference> <estimate>': " + line);
      pairs.emplace_back(r, e);
    }
  } else if (!a.reference.empty() && !a.estimate.empty()) {
    pairs.emplace_back(a.reference, a.estimate);
  } else {
    throw UsageError("eval: give --pairs or both --reference and --estimate");
  }

  std::vector<FileResult> results(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& [r, e] = pairs[static_cast<std::size_t>(i)];
    auto& out = results[static_cast<std::size_t>(i)];
    try {
      const auto ref = read_wav(r, WavReadOptions{true});
      const auto est = read_wav(e, WavReadOptions{true});
      check_same_shape(ref, est, "eval");
      out.record = {{"reference", r}, {"estimate", e}, {"metrics", metrics_json(evaluate_metrics(ref.samples, est.samples, cfg.resolutions))}};
    } catch (const std::exception& ex) {
      out.code = exit_code_for(ex);
      out.record = {{"reference", r}, {"estimate", e}, {"error", ex.what()}, {"category", category_for(out.code)}};
    }
  }
  int code = kExitOk;
  std::fprintf(stderr, "%10s %10s %10s %10s  %s\n", "SNR", "SI-SNR", "LSD", "MRSTFT", "pair");
  for (const auto& r : results) {
    log.write(r.record);
    if (r.code != kExitOk) {
      if (code == kExitOk) code = r.code;
      std::fprintf(stderr, "%43s  %s: %s\n", "error", r.record["estimate"].get<std::string>().c_str(),
                   r.record["error"].get<std::string>().c_str());
      continue;
    }
    const auto& m = r.record["metrics"];
    std::fprintf(stderr, "%10.3f %10.3f %10.3f %10.4f  %s\n", m["snr"].get<double>(), m["si_snr"].get<double>(),
                 m["lsd"].get<double>(), m["mrstft"].get<double>(), r.record["estimate"].get<std::string>().c_str());
  }
  return code;
}

// ---------------------------------------------------------------------------
// features

struct FeaturesArgs {
  std::string input;
  std::string out;
  std::string kind = "logmel";
  bool with_deltas = false;
};

int cmd_features(const Globals& g, const FeaturesArgs& a) {
  const auto cfg = resolve_config(g);
  JsonLog log(g.log_path);
  echo_config(log, "features", cfg);
  const Signal x = read_wav(a.input, WavReadOptions{true});
  FeatureMatrix m;
  if (a.kind == "logmel") {
    MelConfig mc;
    mc.sample_rate = x.sample_rate;
    mc.fmax = x.sample_rate / 2.0;
    m = log_mel(x, mc);
  } else if (a.kind == "vad") {
    LoudnessVadConfig vc;
    vc.sample_rate = x.sample_rate;
    m = loudness_vad(x, vc);
  } else {
    throw UsageError("features: --kind must be logmel or vad");
  }
  if (a.with_deltas) m = hconcat(m, deltas(m));
  const std::string name = a.kind + (a.with_deltas ? "+deltas" : "");
  write_feature_dump(a.out, name, m);
  log.write({{"event", "features"}, {"input", a.input}, {"out", a.out}, {"name", name}, {"rows", m.rows}, {"cols", m.cols}});
  return kExitOk;
}

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--checkpoint", m.checkpoint, "Trained checkpoint");
  cmd->add_flag("--oracle", m.oracle, "Use the analytic score of the configured toy task");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scorekit: score-based enhancement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Config file (key = value lines)");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--jobs", g.jobs, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
  app.add_option("--log", g.log_path, "Write JSON lines here instead of stdout");

  DistortArgs da;
  auto* distort = app.add_subcommand("distort", "Generate clean/distorted pairs from a manifest of WAV files");
  distort->add_option("--manifest", da.manifest, "Text file, one WAV path per line");
  distort->add_option("--replay", da.replay, "Re-apply the chains of an earlier chains.jsonl");
  distort->add_option("--out", da.out_dir, "Output directory")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the toy score network with denoising score matching");
  train_cmd->add_option("--out", ta.out, "Checkpoint to write")->required();
  train_cmd->add_option("--resume", ta.resume, "Continue from this checkpoint");
  train_cmd->add_option("--trace", ta.trace, "Per-step loss trace (JSON lines)");
  train_cmd->add_option("--log-every", ta.log_every, "Progress line interval (0: off)");
  train_cmd->add_option("--max-steps", ta.max_steps, "Stop after this many updates in this run");
  train_cmd->add_flag("--serial", ta.serial, "Use the serial gradient kernel");

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "Enhance a noisy toy signal by conditional sampling");
  add_model_options(enhance, ea.model);
  enhance->add_option("--input", ea.input, "Noisy WAV")->required();
  enhance->add_option("--output", ea.output, "Enhanced WAV (float32)")->required();
  enhance->add_option("--reference", ea.reference, "Clean WAV for metrics");
  enhance->add_option("--steps", ea.steps, "Diffusion steps N");
  enhance->add_option("--epsilon", ea.epsilon, "Step hyper-parameter epsilon >= 1");
  enhance->add_option("--realizations", ea.realizations, "Samples averaged per block");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Real-time factor and quality over a grid of (N, epsilon)");
  add_model_options(sweep, sa.model);
  sweep->add_option("--input", sa.input, "Noisy WAV")->required();
  sweep->add_option("--reference", sa.reference, "Clean WAV")->required();
  sweep->add_option("--steps", sa.steps, "Comma-separated N values")->capture_default_str();
  sweep->add_option("--epsilons", sa.epsilons, "Comma-separated epsilon values")->capture_default_str();

  SamplePriorArgs pa;
  auto* sample_prior = app.add_subcommand("sample-prior", "Draw unconditional samples from the toy prior");
  add_model_options(sample_prior, pa.model);
  sample_prior->add_option("--count", pa.count, "Number of samples")->capture_default_str();
  sample_prior->add_option("--out", pa.out, "Output (.wav for float32 WAV, otherwise one value per line)")->required();
  sample_prior->add_option("--noisy", pa.noisy, "Also write the samples observed in task noise");
  sample_prior->add_flag("--exact", pa.exact, "Draw directly from the configured mixture");

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "Objective metrics between reference and estimate WAVs");
  eval->add_option("--reference", va.reference, "Reference WAV");
  eval->add_option("--estimate", va.estimate, "Estimate WAV");
  eval->add_option("--pairs", va.pairs, "Text file of '<reference> <estimate>' lines");

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Dump log-mel or loudness/VAD features");
  features->add_option("--input", fa.input, "WAV file")->required();
  features->add_option("--out", fa.out, "Feature dump")->required();
  features->add_option("--kind", fa.kind, "logmel or vad")->capture_default_str();
  features->add_flag("--deltas", fa.with_deltas, "Append first-order deltas");

  auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration as key = value lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    kernels::set_jobs(g.jobs);
    if (*distort) return cmd_distort(g, da);
    if (*train_cmd) return cmd_train(g, ta);
    if (*enhance) return cmd_enhance(g, ea);
    if (*sweep) return cmd_sweep(g, sa);
    if (*sample_prior) return cmd_sample_prior(g, pa);
    if (*eval) return cmd_eval(g, va);
    if (*features) return cmd_features(g, fa);
    if (*config_cmd) {
      std::cout << resolve_config(g).to_text();
      return kExitOk;
    }
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << "scorekit: " << category_for(code) << " error: " << e.what() << "\n";
    return code;
  }
  return kExitOther;
}
