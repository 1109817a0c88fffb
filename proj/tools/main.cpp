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

// Batch experiment runner: parameter sweeps, the precomputation-horizon
// study and naive Monte Carlo calibration, all emitting CSV plus a JSON
// manifest that pins config, seeds and library version.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eventpf/config.hpp"
#include "eventpf/oracle.hpp"
#include "eventpf/sim.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void handle_interrupt(int) { g_interrupted.store(true); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

nlohmann::json base_manifest(const eventpf::ExperimentConfig& cfg,
                             const std::string& config_path,
                             const std::string& command,
                             const std::string& schema, int workers) {
  nlohmann::json m;
  m["command"] = command;
  m["config_path"] = config_path;
  m["config"] = cfg.raw;
  m["library_version"] = eventpf::kLibraryVersion;
  m["csv_schema"] = schema;
  m["workers"] = workers;
  m["interrupted"] = false;
  return m;
}

void write_manifest(const nlohmann::json& m, const std::string& out_dir) {
  std::ofstream out(out_dir + "/manifest.json");
  out << m.dump(2) << "\n";
}

int run_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& seed_spec, int workers) {
  const eventpf::ExperimentConfig cfg = eventpf::parse_config_file(config_path);
  const std::vector<eventpf::RunPoint> points = eventpf::expand_sweep(cfg);
  const std::vector<std::uint64_t> seeds = eventpf::parse_seeds(seed_spec);

  struct Job {
    eventpf::RunPoint point;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& p : points) {
    for (const auto s : seeds) jobs.push_back({p, s});
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/sweep.csv");
  csv << "delta,N,filter,evaluator,c,seed,C_r,ce_all,ce_events,ce_noevents,"
         "mean_n_hat,forced_fraction,wall_time\n";

  const size_t n_jobs = jobs.size();
  std::vector<std::string> rows(n_jobs);
  std::unique_ptr<std::atomic<bool>[]> done(new std::atomic<bool>[n_jobs]);
  for (size_t i = 0; i < n_jobs; ++i) done[i].store(false);
  std::atomic<size_t> next{0};
  std::atomic<int> active{0};

  std::atomic<bool> failed{false};
  auto worker = [&]() {
    active.fetch_add(1);
    while (!g_interrupted.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= n_jobs) break;
      const Job& job = jobs[i];
      try {
        const eventpf::SimConfig sim =
            eventpf::make_sim_config(cfg, job.point, job.seed);
        const eventpf::SimResult res = eventpf::run(sim);
        const auto& s = res.summary;
        std::string row;
        row += fmt(job.point.delta) + "," +
               std::to_string(job.point.particles) + "," + job.point.filter +
               "," + job.point.evaluator + "," + fmt(job.point.c) + "," +
               std::to_string(job.seed) + "," + fmt(s.c_r) + "," +
               fmt(s.ce_all) + "," + fmt(s.ce_events) + "," +
               fmt(s.ce_noevents) + "," + fmt(s.mean_n_hat) + "," +
               fmt(s.forced_fraction) + "," + fmt(s.wall_seconds);
        rows[i] = std::move(row);
      } catch (const std::exception& e) {
        std::cerr << "run failed (seed " << job.seed << "): " << e.what()
                  << "\n";
        failed.store(true);
        g_interrupted.store(true);
      }
      done[i].store(true, std::memory_order_release);
    }
    active.fetch_sub(1);
  };

  const int w = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int t = 0; t < w; ++t) pool.emplace_back(worker);

  // Stream rows to disk in job order so reruns are byte-stable at any worker
  // count; on interrupt the contiguous completed prefix is flushed.
  size_t flushed = 0;
  while (flushed < n_jobs) {
    if (done[flushed].load(std::memory_order_acquire)) {
      csv << rows[flushed] << "\n";
      csv.flush();
      ++flushed;
      continue;
    }
    if (g_interrupted.load() && active.load() == 0) break;
    if (next.load() > n_jobs && active.load() == 0 &&
        !done[flushed].load(std::memory_order_acquire)) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  for (auto& t : pool) t.join();
  while (flushed < n_jobs && done[flushed].load(std::memory_order_acquire)) {
    csv << rows[flushed] << "\n";
    ++flushed;
  }

  nlohmann::json manifest = base_manifest(cfg, config_path, "sweep",
                                          eventpf::kSweepCsvSchema, w);
  manifest["seeds"] = seeds;
  manifest["rows_written"] = flushed;
  manifest["rows_total"] = n_jobs;
  manifest["interrupted"] = g_interrupted.load();
  manifest["outputs"] = {"sweep.csv"};
  write_manifest(manifest, out_dir);
  std::cout << "sweep: wrote " << flushed << "/" << n_jobs << " rows to "
            << out_dir << "/sweep.csv\n";
  if (failed.load()) return 1;
  return g_interrupted.load() ? 130 : 0;
}

int run_horizon_study(const std::string& config_path,
                      const std::string& out_dir, std::uint64_t seed,
                      int workers) {
  const eventpf::ExperimentConfig cfg = eventpf::parse_config_file(config_path);
  const auto model = eventpf::make_model(cfg);
  // Study default when the config leaves c unset.
  const std::vector<double> c_values =
      cfg.raw.count("c") ? cfg.c : std::vector<double>{0.05, 0.1, 0.25};
  const int n_particles = cfg.particles.front();
  const eventpf::LikelihoodEvaluator prob_eval =
      eventpf::make_evaluator(cfg, cfg.evaluator.front());

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/horizon.csv");
  csv << "delta,c,n,tc_mc,tc_pf,quantile_n,true_argmax_n,heuristic_n\n";

  for (double delta : cfg.delta) {
    Eigen::VectorXd weight(1);
    weight << cfg.f_weight;
    const eventpf::TriggerRule rule(
        cfg.trigger == "ibt" ? eventpf::TriggerKind::kIbt
                             : eventpf::TriggerKind::kSod,
        delta, weight);

    const auto mc = eventpf::oracle::naive_mc_trigger_pmf(
        *model, rule, false, n_particles, cfg.mc_reps, cfg.max_n, seed);

    // Mean PF estimate over repeated precompute passes, parallel over reps.
    eventpf::FilterConfig fcfg;
    fcfg.kind = cfg.filter.front() == "apf" ? eventpf::FilterKind::kApfFa
                                            : eventpf::FilterKind::kBpf;
    fcfg.apf_mixture_components = cfg.mixture_d;
    fcfg.evaluator = prob_eval;
    std::vector<double> hazard_sum(static_cast<size_t>(cfg.max_n), 0.0);
    std::vector<double> pmf_sum(static_cast<size_t>(cfg.max_n), 0.0);
    std::mutex mu;
    std::atomic<int> rep_next{0};
    auto pf_worker = [&]() {
      std::vector<double> hz(static_cast<size_t>(cfg.max_n), 0.0);
      std::vector<double> pm(static_cast<size_t>(cfg.max_n), 0.0);
      while (true) {
        const int r = rep_next.fetch_add(1);
        if (r >= cfg.study_reps || g_interrupted.load()) break;
        const auto est = eventpf::estimate_first_trigger_pf(
            *model, rule, fcfg, prob_eval, n_particles, cfg.max_n,
            seed * 100003u + static_cast<std::uint64_t>(r));
        for (int i = 0; i < cfg.max_n; ++i) {
          hz[size_t(i)] += est.per_step[size_t(i)];
          pm[size_t(i)] += est.pmf[size_t(i)];
        }
      }
      std::lock_guard<std::mutex> lock(mu);
      for (int i = 0; i < cfg.max_n; ++i) {
        hazard_sum[size_t(i)] += hz[size_t(i)];
        pmf_sum[size_t(i)] += pm[size_t(i)];
      }
    };
    {
      std::vector<std::thread> pool;
      for (int t = 0; t < std::max(1, workers); ++t) {
        pool.emplace_back(pf_worker);
      }
      for (auto& t : pool) t.join();
    }
    std::vector<double> pf_hazard(static_cast<size_t>(cfg.max_n));
    std::vector<double> pf_pmf(static_cast<size_t>(cfg.max_n));
    for (int i = 0; i < cfg.max_n; ++i) {
      pf_hazard[size_t(i)] = hazard_sum[size_t(i)] / cfg.study_reps;
      pf_pmf[size_t(i)] = pmf_sum[size_t(i)] / cfg.study_reps;
    }

    for (double c : c_values) {
      const auto quant = eventpf::quantile_horizon(mc.pmf, 1.0 - c);
      const auto best = eventpf::oracle::exhaustive_tc_argmax(mc.pmf, c,
                                                              cfg.max_n);
      size_t hz_idx = 0;
      const auto heur = eventpf::heuristic_horizon(
          [&](int) { return pf_hazard[hz_idx++ % pf_hazard.size()]; }, c,
          cfg.max_n);
      for (int n = 1; n <= cfg.max_n; ++n) {
        csv << fmt(delta) << "," << fmt(c) << "," << n << ","
            << fmt(eventpf::tc_value(mc.pmf, c, n)) << ","
            << fmt(eventpf::tc_value(pf_pmf, c, n)) << ","
            << (quant ? *quant : -1) << "," << best.n_star << "," << heur.n_hat
            << "\n";
      }
    }
  }

  nlohmann::json manifest = base_manifest(cfg, config_path, "horizon",
                                          eventpf::kHorizonCsvSchema, workers);
  manifest["seed"] = seed;
  manifest["outputs"] = {"horizon.csv"};
  manifest["interrupted"] = g_interrupted.load();
  write_manifest(manifest, out_dir);
  std::cout << "horizon: wrote " << out_dir << "/horizon.csv\n";
  return g_interrupted.load() ? 130 : 0;
}

int run_oracle(const std::string& config_path, const std::string& out_dir,
               std::uint64_t seed) {
  const eventpf::ExperimentConfig cfg = eventpf::parse_config_file(config_path);
  const auto model = eventpf::make_model(cfg);
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/oracle_pmf.csv");
  csv << "delta,N,R,n,p_mc,lo90,hi90,censored_mass\n";
  for (double delta : cfg.delta) {
    for (int n_particles : cfg.particles) {
      Eigen::VectorXd weight(1);
      weight << cfg.f_weight;
      const eventpf::TriggerRule rule(
          cfg.trigger == "ibt" ? eventpf::TriggerKind::kIbt
                               : eventpf::TriggerKind::kSod,
          delta, weight);
      const auto mc = eventpf::oracle::naive_mc_trigger_pmf(
          *model, rule, false, n_particles, cfg.mc_reps, cfg.max_n, seed);
      for (int n = 1; n <= cfg.max_n; ++n) {
        csv << fmt(delta) << "," << n_particles << "," << cfg.mc_reps << ","
            << n << "," << fmt(mc.pmf[size_t(n - 1)]) << ","
            << fmt(mc.lo90[size_t(n - 1)]) << "," << fmt(mc.hi90[size_t(n - 1)])
            << "," << fmt(mc.censored_mass) << "\n";
      }
    }
  }
  nlohmann::json manifest = base_manifest(cfg, config_path, "oracle",
                                          eventpf::kOracleCsvSchema, 1);
  manifest["seed"] = seed;
  manifest["outputs"] = {"oracle_pmf.csv"};
  write_manifest(manifest, out_dir);
  std::cout << "oracle: wrote " << out_dir << "/oracle_pmf.csv\n";
  return 0;
}

int run_validate(const std::string& config_path) {
  try {
    const eventpf::ExperimentConfig cfg =
        eventpf::parse_config_file(config_path);
    const auto points = eventpf::expand_sweep(cfg);
    std::cout << "config ok: " << points.size() << " sweep point(s)\n";
    for (const auto& p : points) {
      std::cout << "  delta=" << p.delta << " N=" << p.particles
                << " filter=" << p.filter << " evaluator=" << p.evaluator
                << " c=" << p.c << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-based particle filtering experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string seed_spec = "20";
  std::uint64_t seed = 1;
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;

  auto* sweep = app.add_subcommand("sweep", "run the parameter sweep");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seeds", seed_spec,
                    "seed count K (seeds 1..K) or explicit list '3,5,8'");
  sweep->add_option("--workers", workers, "worker threads");

  auto* horizon = app.add_subcommand(
      "horizon", "precomputation-horizon study (T_c curves and maximizers)");
  horizon->add_option("--config", config_path, "config file")->required();
  horizon->add_option("--out", out_dir, "output directory");
  horizon->add_option("--seed", seed, "base seed");
  horizon->add_option("--workers", workers, "worker threads");

  auto* oracle_cmd = app.add_subcommand(
      "oracle", "naive Monte Carlo first-trigger pmf calibration");
  oracle_cmd->add_option("--config", config_path, "config file")->required();
  oracle_cmd->add_option("--out", out_dir, "output directory");
  oracle_cmd->add_option("--seed", seed, "base seed");

  auto* validate = app.add_subcommand("validate-config",
                                      "parse and validate a config file");
  validate->add_option("--config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, handle_interrupt);
  try {
    if (sweep->parsed()) {
      return run_sweep(config_path, out_dir, seed_spec, workers);
    }
    if (horizon->parsed()) {
      return run_horizon_study(config_path, out_dir, seed, workers);
    }
    if (oracle_cmd->parsed()) {
      return run_oracle(config_path, out_dir, seed);
    }
    if (validate->parsed()) {
      return run_validate(config_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
