// Copyright 2026 The eventpf Authors
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

#ifndef EVENTPF_CONFIG_HPP_
#define EVENTPF_CONFIG_HPP_

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eventpf/errors.hpp"
#include "eventpf/sim.hpp"

namespace eventpf {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kSweepCsvSchema = "eventpf-sweep-v1";
inline constexpr const char* kHorizonCsvSchema = "eventpf-horizon-v1";
inline constexpr const char* kOracleCsvSchema = "eventpf-oracle-v1";

// Flat key = value experiment description. Comma lists on the sweepable keys
// (delta, particles, filter, evaluator, c) expand to a cartesian grid;
// unknown keys are hard errors so sweep typos cannot pass silently.
struct ExperimentConfig {
  // model
  std::string model = "benchmark";
  double process_var = 1.0;
  double meas_var = 0.1;
  double prior_mean = 0.0;
  double prior_var = 25.0;
  double lg_a = 0.9;
  double lg_c = 1.0;
  double lg_q = 1.0;
  double lg_r = 0.5;
  // trigger
  std::string trigger = "ibt";
  std::vector<double> delta{2.5};
  double f_weight = 1.0;
  // filter / evaluator
  std::vector<std::string> filter{"bpf"};
  std::vector<std::string> evaluator{"analytic"};
  int mc_samples = 1;
  int mixture_d = 3;
  // run shape
  std::vector<int> particles{100};
  int secondary_particles = 0;
  int steps = 10000;
  std::string protocol = "periodic";
  // precompute horizon
  std::string horizon_rule = "heuristic";
  std::vector<double> c{0.1};
  double alpha = 0.9;
  int fixed_n = 10;
  int n_max = 0;
  // study controls
  int study_reps = 100;
  int mc_reps = 10000;
  int max_n = 40;

  std::map<std::string, std::string> raw;  // as parsed, for the manifest
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline double parse_double(const std::string& v, const std::string& key,
                           int line) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects a number, got '" + v + "'");
  }
}

inline int parse_int(const std::string& v, const std::string& key, int line) {
  try {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects an integer, got '" + v + "'");
  }
}

inline void require_choice(const std::string& v,
                           const std::set<std::string>& allowed,
                           const std::string& key, int line) {
  if (allowed.count(v) == 0) {
    std::string opts;
    for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' must be one of " + opts + ", got '" + v + "'");
  }
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg);

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw_line;
  int line = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw_line)) {
    ++line;
    std::string s = raw_line;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) +
                        ": expected 'key = value'");
    }
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line) +
                        ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" +
                        key + "'");
    }
    cfg.raw[key] = value;

    if (key == "model") {
      detail::require_choice(value, {"benchmark", "lg"}, key, line);
      cfg.model = value;
    } else if (key == "process_var") {
      cfg.process_var = detail::parse_double(value, key, line);
    } else if (key == "meas_var") {
      cfg.meas_var = detail::parse_double(value, key, line);
    } else if (key == "prior_mean") {
      cfg.prior_mean = detail::parse_double(value, key, line);
    } else if (key == "prior_var") {
      cfg.prior_var = detail::parse_double(value, key, line);
    } else if (key == "lg_a") {
      cfg.lg_a = detail::parse_double(value, key, line);
    } else if (key == "lg_c") {
      cfg.lg_c = detail::parse_double(value, key, line);
    } else if (key == "lg_q") {
      cfg.lg_q = detail::parse_double(value, key, line);
    } else if (key == "lg_r") {
      cfg.lg_r = detail::parse_double(value, key, line);
    } else if (key == "trigger") {
      detail::require_choice(value, {"ibt", "sod"}, key, line);
      cfg.trigger = value;
    } else if (key == "delta") {
      cfg.delta.clear();
      for (const auto& v : detail::split_list(value)) {
        cfg.delta.push_back(detail::parse_double(v, key, line));
      }
    } else if (key == "f_weight") {
      cfg.f_weight = detail::parse_double(value, key, line);
    } else if (key == "filter") {
      cfg.filter.clear();
      for (const auto& v : detail::split_list(value)) {
        detail::require_choice(v, {"bpf", "apf"}, key, line);
        cfg.filter.push_back(v);
      }
    } else if (key == "evaluator") {
      cfg.evaluator.clear();
      for (const auto& v : detail::split_list(value)) {
        detail::require_choice(v, {"analytic", "mixture", "mc"}, key, line);
        cfg.evaluator.push_back(v);
      }
    } else if (key == "mc_samples") {
      cfg.mc_samples = detail::parse_int(value, key, line);
    } else if (key == "mixture_d") {
      cfg.mixture_d = detail::parse_int(value, key, line);
    } else if (key == "particles") {
      cfg.particles.clear();
      for (const auto& v : detail::split_list(value)) {
        cfg.particles.push_back(detail::parse_int(v, key, line));
      }
    } else if (key == "secondary_particles") {
      cfg.secondary_particles = detail::parse_int(value, key, line);
    } else if (key == "steps") {
      cfg.steps = detail::parse_int(value, key, line);
    } else if (key == "protocol") {
      detail::require_choice(value, {"periodic", "precompute", "openloop"},
                             key, line);
      cfg.protocol = value;
    } else if (key == "horizon_rule") {
      detail::require_choice(value, {"heuristic", "quantile", "fixed"}, key,
                             line);
      cfg.horizon_rule = value;
    } else if (key == "c") {
      cfg.c.clear();
      for (const auto& v : detail::split_list(value)) {
        cfg.c.push_back(detail::parse_double(v, key, line));
      }
    } else if (key == "alpha") {
      cfg.alpha = detail::parse_double(value, key, line);
    } else if (key == "fixed_n") {
      cfg.fixed_n = detail::parse_int(value, key, line);
    } else if (key == "n_max") {
      cfg.n_max = detail::parse_int(value, key, line);
    } else if (key == "study_reps") {
      cfg.study_reps = detail::parse_int(value, key, line);
    } else if (key == "mc_reps") {
      cfg.mc_reps = detail::parse_int(value, key, line);
    } else if (key == "max_n") {
      cfg.max_n = detail::parse_int(value, key, line);
    } else {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" +
                        key + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
  if (cfg.delta.empty()) throw ConfigError("delta list is empty");
  for (double d : cfg.delta) {
    if (!(d > 0.0)) throw ConfigError("delta values must be > 0");
  }
  if (cfg.particles.empty()) throw ConfigError("particles list is empty");
  for (int n : cfg.particles) {
    if (n < 2) throw ConfigError("particles values must be >= 2");
  }
  if (cfg.filter.empty()) throw ConfigError("filter list is empty");
  if (cfg.evaluator.empty()) throw ConfigError("evaluator list is empty");
  if (cfg.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (cfg.mixture_d < 1) throw ConfigError("mixture_d must be >= 1");
  if (!(cfg.f_weight > 0.0)) throw ConfigError("f_weight must be > 0");
  if (cfg.protocol == "openloop" && cfg.trigger != "sod") {
    throw ConfigError("protocol openloop requires trigger = sod");
  }
  if (cfg.protocol == "precompute") {
    for (double cv : cfg.c) {
      if (!(cv > 0.0 && cv < 1.0)) throw ConfigError("c values must be in (0,1)");
    }
    if (cfg.horizon_rule == "quantile" &&
        !(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
      throw ConfigError("alpha must be in (0,1]");
    }
    if (cfg.horizon_rule == "fixed" && cfg.fixed_n < 1) {
      throw ConfigError("fixed_n must be >= 1");
    }
  }
  if (cfg.study_reps < 1) throw ConfigError("study_reps must be >= 1");
  if (cfg.mc_reps < 1) throw ConfigError("mc_reps must be >= 1");
  if (cfg.max_n < 1) throw ConfigError("max_n must be >= 1");
  if (cfg.model == "lg" && !(cfg.lg_q > 0.0 && cfg.lg_r > 0.0)) {
    throw ConfigError("lg_q and lg_r must be > 0");
  }
}

inline std::shared_ptr<const StateSpaceModel> make_model(
    const ExperimentConfig& cfg) {
  if (cfg.model == "benchmark") {
    return std::make_shared<BenchmarkModel>(cfg.process_var, cfg.meas_var,
                                            cfg.prior_mean, cfg.prior_var);
  }
  return std::make_shared<LinearGaussianModel>(LinearGaussianModel::scalar(
      cfg.lg_a, cfg.lg_q, cfg.lg_c, cfg.lg_r, cfg.prior_mean, cfg.prior_var));
}

// One point of the sweep grid.
struct RunPoint {
  double delta = 0.0;
  int particles = 0;
  std::string filter;
  std::string evaluator;
  double c = 0.0;
};

inline std::vector<RunPoint> expand_sweep(const ExperimentConfig& cfg) {
  std::vector<RunPoint> points;
  for (double d : cfg.delta) {
    for (int n : cfg.particles) {
      for (const auto& f : cfg.filter) {
        for (const auto& e : cfg.evaluator) {
          for (double cv : cfg.c) {
            points.push_back({d, n, f, e, cv});
          }
        }
      }
    }
  }
  return points;
}

inline LikelihoodEvaluator make_evaluator(const ExperimentConfig& cfg,
                                          const std::string& kind) {
  if (kind == "analytic") return LikelihoodEvaluator::analytic();
  if (kind == "mixture") return LikelihoodEvaluator::mixture(cfg.mixture_d);
  return LikelihoodEvaluator::monte_carlo(cfg.mc_samples);
}

inline SimConfig make_sim_config(const ExperimentConfig& cfg,
                                 const RunPoint& point, std::uint64_t seed) {
  SimConfig sim;
  sim.model = make_model(cfg);
  Eigen::VectorXd weight(1);
  weight << cfg.f_weight;
  sim.trigger = TriggerRule(
      cfg.trigger == "ibt" ? TriggerKind::kIbt : TriggerKind::kSod,
      point.delta, weight);
  sim.filter.kind =
      point.filter == "apf" ? FilterKind::kApfFa : FilterKind::kBpf;
  sim.filter.apf_mixture_components = cfg.mixture_d;
  sim.filter.evaluator = make_evaluator(cfg, point.evaluator);
  sim.num_particles = point.particles;
  sim.secondary_particles = cfg.secondary_particles;
  sim.num_steps = cfg.steps;
  sim.seed = seed;
  sim.protocol = cfg.protocol == "periodic" ? Protocol::kPeriodicDownlink
                 : cfg.protocol == "precompute" ? Protocol::kPrecompute
                                                : Protocol::kOpenLoopSod;
  sim.horizon.kind = cfg.horizon_rule == "heuristic"
                         ? HorizonRuleKind::kHeuristic
                     : cfg.horizon_rule == "quantile"
                         ? HorizonRuleKind::kQuantile
                         : HorizonRuleKind::kFixed;
  sim.horizon.c = point.c;
  sim.horizon.alpha = cfg.alpha;
  sim.horizon.fixed_n = cfg.fixed_n;
  sim.horizon.n_max = cfg.n_max;
  return sim;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  if (spec.find(',') == std::string::npos) {
    const int k = detail::parse_int(spec, "seeds", 0);
    if (k < 1) throw ConfigError("seed count must be >= 1");
    for (int i = 1; i <= k; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
    return seeds;
  }
  for (const auto& tok : detail::split_list(spec)) {
    seeds.push_back(
        static_cast<std::uint64_t>(detail::parse_int(tok, "seeds", 0)));
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

}  // namespace eventpf

#endif  // EVENTPF_CONFIG_HPP_
