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

#include "scorekit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "scorekit/error.hpp"

namespace scorekit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError("config: " + key + ": not a number: '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ConfigError("config: " + key + ": not a non-negative integer: '" + v + "'");
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

const char* scale_name(ParamScale s) {
  switch (s) {
    case ParamScale::kLog:
      return "log";
    case ParamScale::kInteger:
      return "int";
    case ParamScale::kLinear:
      break;
  }
  return "linear";
}

ParamScale parse_scale(const std::string& key, const std::string& v) {
  if (v == "linear") return ParamScale::kLinear;
  if (v == "log") return ParamScale::kLog;
  if (v == "int") return ParamScale::kInteger;
  throw ConfigError("config: " + key + ": scale must be linear, log or int");
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

ToolkitConfig ToolkitConfig::parse(const std::string& text) {
  ToolkitConfig c;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

ToolkitConfig ToolkitConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void ToolkitConfig::set(const std::string& key, const std::string& v) {
  auto as_size = [&] { return static_cast<std::size_t>(to_uint(key, v)); };
  auto as_int = [&] {
    const auto u = to_uint(key, v);
    if (u > 1000000000) throw ConfigError("config: " + key + ": value too large");
    return static_cast<int>(u);
  };
  if (key == "seed") {
    seed = to_uint(key, v);
  } else if (key == "schedule.sigma_min") {
    sigma_min = to_double(key, v);
  } else if (key == "schedule.sigma_max") {
    sigma_max = to_double(key, v);
  } else if (key == "schedule.fit_data") {
    if (v == "true" || v == "1") {
      fit_schedule = true;
    } else if (v == "false" || v == "0") {
      fit_schedule = false;
    } else {
      throw ConfigError("config: " + key + ": expected true or false");
    }
  } else if (key == "sampling.steps") {
    steps = as_int();
  } else if (key == "sampling.epsilon") {
    epsilon = to_double(key, v);
  } else if (key == "sampling.realizations") {
    realizations = as_int();
  } else if (key == "model.hidden") {
    model.hidden.clear();
    for (const auto& item : split(v, ',')) model.hidden.push_back(static_cast<std::size_t>(to_uint(key, item)));
  } else if (key == "model.embed_dim") {
    model.embed_dim = as_size();
  } else if (key == "model.n_pairs") {
    model.n_pairs = as_size();
  } else if (key == "model.data_std") {
    model.data_std = to_double(key, v);
  } else if (key == "optimizer.peak_lr") {
    peak_lr = to_double(key, v);
  } else if (key == "optimizer.start_lr") {
    start_lr = to_double(key, v);
  } else if (key == "optimizer.warmup_fraction") {
    warmup_fraction = to_double(key, v);
  } else if (key == "optimizer.weight_decay") {
    weight_decay = to_double(key, v);
  } else if (key == "optimizer.beta1") {
    beta1 = to_double(key, v);
  } else if (key == "optimizer.beta2") {
    beta2 = to_double(key, v);
  } else if (key == "optimizer.eps") {
    adam_eps = to_double(key, v);
  } else if (key == "train.iterations") {
    iterations = as_size();
  } else if (key == "train.batch") {
    batch = as_size();
  } else if (key == "task.kind") {
    task_kind = v;
  } else if (key == "task.weights") {
    task_weights = to_doubles(key, v);
  } else if (key == "task.means") {
    task_means = to_doubles(key, v);
  } else if (key == "task.variances") {
    task_variances = to_doubles(key, v);
  } else if (key == "task.dim") {
    task_dim = as_size();
  } else if (key == "task.noise_std") {
    task_noise_std = to_double(key, v);
  } else if (key == "distort.count_probabilities") {
    distortion.count_probabilities = to_doubles(key, v);
  } else if (key == "distort.noise") {
    distortion.noise_pool = split(v, ',');
  } else if (key == "distort.rir") {
    distortion.rir_pool = split(v, ',');
  } else if (key.rfind("distort.weight.", 0) == 0) {
    const auto type = key.substr(15);
    distortion_kind(type);
    distortion.weights[type] = to_double(key, v);
  } else if (key.rfind("distort.bound.", 0) == 0) {
    const auto rest = key.substr(14);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ConfigError("config: " + key + ": expected distort.bound.<type>.<param>");
    const auto type = rest.substr(0, dot);
    const auto name = rest.substr(dot + 1);
    distortion_kind(type);
    const auto parts = split(v, ',');
    if (parts.size() != 2 && parts.size() != 3) throw ConfigError("config: " + key + ": expected 'lo, hi[, scale]'");
    auto& list = distortion.bounds[type];
    auto it = std::find_if(list.begin(), list.end(), [&](const ParamBound& b) { return b.name == name; });
    if (it == list.end()) throw ConfigError("config: " + key + ": '" + type + "' has no parameter '" + name + "'");
    it->lo = to_double(key, parts[0]);
    it->hi = to_double(key, parts[1]);
    if (parts.size() == 3) it->scale = parse_scale(key, parts[2]);
  } else if (key == "metrics.resolutions") {
    resolutions.clear();
    for (const auto& item : split(v, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("config: " + key + ": expected frame:hop pairs");
      resolutions.push_back({static_cast<std::size_t>(to_uint(key, trim(item.substr(0, colon)))),
                             static_cast<std::size_t>(to_uint(key, trim(item.substr(colon + 1))))});
    }
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void ToolkitConfig::validate() const {
  NoiseSchedule(sigma_min, sigma_max);
  if (steps < 1) throw ConfigError("config: sampling.steps must be >= 1");
  if (!(epsilon >= 1.0)) throw ConfigError("config: sampling.epsilon must be >= 1");
  if (realizations < 1) throw ConfigError("config: sampling.realizations must be >= 1");
  if (model.hidden.empty() || model.embed_dim == 0 || model.n_pairs == 0) {
    throw ConfigError("config: model sizes must be positive");
  }
  if (!(model.data_std > 0.0)) throw ConfigError("config: model.data_std must be positive");
  if (!(peak_lr > 0.0) || !(start_lr >= 0.0)) throw ConfigError("config: learning rates must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) throw ConfigError("config: optimizer.warmup_fraction must be in [0, 1]");
  if (weight_decay < 0.0) throw ConfigError("config: optimizer.weight_decay must be >= 0");
  if (batch == 0) throw ConfigError("config: train.batch must be positive");
  if (task_kind != "gmm" && task_kind != "denoise") throw ConfigError("config: task.kind must be gmm or denoise");
  if (task_dim == 0) throw ConfigError("config: task.dim must be positive");
  if (!(task_noise_std > 0.0)) throw ConfigError("config: task.noise_std must be positive");
  prior();
  distortion.validate();
  if (resolutions.empty()) throw ConfigError("config: metrics.resolutions is empty");
  for (const auto& r : resolutions) {
    if (r.hop == 0 || r.hop > r.frame) throw ConfigError("config: metrics.resolutions needs 0 < hop <= frame");
  }
}

AdamConfig ToolkitConfig::adam(std::size_t total_steps) const {
  AdamConfig a;
  a.lr = LrSchedule::with_fraction(peak_lr, start_lr, warmup_fraction, std::max<std::size_t>(1, total_steps));
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.eps = adam_eps;
  a.weight_decay = weight_decay;
  return a;
}

NoiseSchedule ToolkitConfig::schedule_for(double data_mean_square) const {
  return fit_schedule ? NoiseSchedule::for_data(data_mean_square) : schedule();
}

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) { return nlohmann::json(v).dump(); }

template <class T>
std::string list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if constexpr (std::is_floating_point_v<T>) {
      out += (i ? ", " : "") + num(v[i]);
    } else {
      out += (i ? ", " : "") + std::to_string(v[i]);
    }
  }
  return out;
}

}  // namespace

std::string ToolkitConfig::to_text() const {
  std::ostringstream o;
  o << "seed = " << seed << "\n";
  o << "schedule.sigma_min = " << num(sigma_min) << "\n";
  o << "schedule.sigma_max = " << num(sigma_max) << "\n";
  o << "schedule.fit_data = " << (fit_schedule ? "true" : "false") << "\n";
  o << "sampling.steps = " << steps << "\n";
  o << "sampling.epsilon = " << num(epsilon) << "\n";
  o << "sampling.realizations = " << realizations << "\n";
  o << "model.hidden = " << list(model.hidden) << "\n";
  o << "model.embed_dim = " << model.embed_dim << "\n";
  o << "model.n_pairs = " << model.n_pairs << "\n";
  o << "model.data_std = " << num(model.data_std) << "\n";
  o << "optimizer.peak_lr = " << num(peak_lr) << "\n";
  o << "optimizer.start_lr = " << num(start_lr) << "\n";
  o << "optimizer.warmup_fraction = " << num(warmup_fraction) << "\n";
  o << "optimizer.weight_decay = " << num(weight_decay) << "\n";
  o << "optimizer.beta1 = " << num(beta1) << "\n";
  o << "optimizer.beta2 = " << num(beta2) << "\n";
  o << "optimizer.eps = " << num(adam_eps) << "\n";
  o << "train.iterations = " << iterations << "\n";
  o << "train.batch = " << batch << "\n";
  o << "task.kind = " << task_kind << "\n";
  o << "task.weights = " << list(task_weights) << "\n";
  o << "task.means = " << list(task_means) << "\n";
  o << "task.variances = " << list(task_variances) << "\n";
  o << "task.dim = " << task_dim << "\n";
  o << "task.noise_std = " << num(task_noise_std) << "\n";
  o << "distort.count_probabilities = " << list(distortion.count_probabilities) << "\n";
  o << "distort.noise = " << join(distortion.noise_pool) << "\n";
  o << "distort.rir = " << join(distortion.rir_pool) << "\n";
  for (const auto& [type, w] : distortion.weights) o << "distort.weight." << type << " = " << num(w) << "\n";
  for (const auto& [type, bounds] : distortion.bounds) {
    for (const auto& b : bounds) {
      o << "distort.bound." << type << "." << b.name << " = " << num(b.lo) << ", " << num(b.hi) << ", "
        << scale_name(b.scale) << "\n";
    }
  }
  o << "metrics.resolutions = ";
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    o << (i ? ", " : "") << resolutions[i].frame << ":" << resolutions[i].hop;
  }
  o << "\n";
  return o.str();
}

GmmPrior ToolkitConfig::prior() const { return GmmPrior::scalar(task_weights, task_means, task_variances); }

nlohmann::ordered_json ToolkitConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["schedule"] = {{"sigma_min", sigma_min}, {"sigma_max", sigma_max}, {"fit_data", fit_schedule}};
  j["sampling"] = {{"steps", steps}, {"epsilon", epsilon}, {"realizations", realizations}};
  j["model"] = {{"hidden", model.hidden},
                {"embed_dim", model.embed_dim},
                {"n_pairs", model.n_pairs},
                {"data_std", model.data_std}};
  j["optimizer"] = {{"peak_lr", peak_lr},           {"start_lr", start_lr}, {"warmup_fraction", warmup_fraction},
                    {"weight_decay", weight_decay}, {"beta1", beta1},       {"beta2", beta2},
                    {"eps", adam_eps}};
  j["train"] = {{"iterations", iterations}, {"batch", batch}};
  j["task"] = {{"kind", task_kind},
               {"weights", task_weights},
               {"means", task_means},
               {"variances", task_variances},
               {"dim", task_dim},
               {"noise_std", task_noise_std}};
  nlohmann::ordered_json weights = nlohmann::ordered_json::object();
  nlohmann::ordered_json bounds = nlohmann::ordered_json::object();
  for (const auto& [type, w] : distortion.weights) weights[type] = w;
  for (const auto& [type, list] : distortion.bounds) {
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    for (const auto& p : list) b[p.name] = {p.lo, p.hi, scale_name(p.scale)};
    bounds[type] = b;
  }
  j["distort"] = {{"count_probabilities", distortion.count_probabilities},
                  {"noise", distortion.noise_pool},
                  {"rir", distortion.rir_pool},
                  {"weights", weights},
                  {"bounds", bounds}};
  nlohmann::ordered_json res = nlohmann::ordered_json::array();
  for (const auto& r : resolutions) res.push_back({r.frame, r.hop});
  j["metrics"] = {{"resolutions", res}};
  return j;
}

}  // namespace scorekit
