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

#ifndef EVENTPF_SIM_HPP_
#define EVENTPF_SIM_HPP_

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "eventpf/filter.hpp"
#include "eventpf/horizon.hpp"
#include "eventpf/likelihood.hpp"
#include "eventpf/model.hpp"
#include "eventpf/trigger.hpp"

namespace eventpf {

enum class Protocol { kPeriodicDownlink, kPrecompute, kOpenLoopSod };

enum class HorizonRuleKind { kHeuristic, kQuantile, kFixed };

struct HorizonRule {
  HorizonRuleKind kind = HorizonRuleKind::kHeuristic;
  double c = 0.1;    // t_s / h, required in (0, 1)
  double alpha = 0.9;
  int fixed_n = 10;
  int n_max = 0;     // 0 -> default cap 10 * ceil(1/c)

  int cap() const { return n_max > 0 ? n_max : default_horizon_cap(c); }
};

struct SimConfig {
  std::shared_ptr<const StateSpaceModel> model;
  TriggerRule trigger;
  FilterConfig filter;
  int num_particles = 100;
  int secondary_particles = 0;  // 0 -> num_particles
  int num_steps = 1000;
  std::uint64_t seed = 1;
  Protocol protocol = Protocol::kPeriodicDownlink;
  HorizonRule horizon;
  bool keep_particle_history = false;

  void validate() const {
    if (!model) throw std::invalid_argument("sim: model not set");
    if (num_steps < 1) throw std::invalid_argument("sim: T must be >= 1");
    if (num_particles < 2) throw std::invalid_argument("sim: N must be >= 2");
    filter.evaluator.validate();
    if (protocol == Protocol::kOpenLoopSod &&
        trigger.kind != TriggerKind::kSod) {
      throw std::invalid_argument("open-loop protocol requires the SOD rule");
    }
    if (protocol == Protocol::kPrecompute) {
      if (!(horizon.c > 0.0 && horizon.c < 1.0)) {
        throw std::invalid_argument("sim: c must be in (0,1)");
      }
      if (horizon.kind == HorizonRuleKind::kQuantile &&
          !(horizon.alpha > 0.0 && horizon.alpha <= 1.0)) {
        throw std::invalid_argument("sim: alpha must be in (0,1]");
      }
      if (horizon.kind == HorizonRuleKind::kFixed && horizon.fixed_n < 1) {
        throw std::invalid_argument("sim: fixed horizon must be >= 1");
      }
    }
  }
};

struct EventLogRecord {
  int k = 0;
  Eigen::VectorXd x_true;
  Eigen::VectorXd y;
  int gamma = 0;
  bool forced = false;  // horizon-exhaustion trigger
  Box h;
  Eigen::VectorXd posterior_mean;
  double posterior_log_density = 0.0;
  int n_hat = 0;       // horizon chosen at the last event (precompute only)
  bool degenerate = false;
  double step_prob = std::numeric_limits<double>::quiet_NaN();
  int accepted = -1;   // Monte Carlo M=1 accounting; -1 when not applicable
};

struct SimSummary {
  double c_r = 0.0;
  double ce_all = 0.0;
  double ce_events = std::numeric_limits<double>::quiet_NaN();
  double ce_noevents = std::numeric_limits<double>::quiet_NaN();
  double mean_n_hat = std::numeric_limits<double>::quiet_NaN();
  double forced_fraction = std::numeric_limits<double>::quiet_NaN();
  double mean_radio_off = std::numeric_limits<double>::quiet_NaN();
  int degenerate_steps = 0;
  int event_count = 0;
  double expected_particles_formula = std::numeric_limits<double>::quiet_NaN();
  double empirical_accepted_mean = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct SimResult {
  std::vector<EventLogRecord> records;
  SimSummary summary;
  std::vector<ParticleSet> particle_history;  // filled on request
};

// Average-particle-count prediction for the rejection-sampling evaluator:
// E(N_r) = (N/T) sum_{k=2..T} (1 - p_k) + N/T with p_k the per-step trigger
// probability estimates.
inline double expected_particle_count(const std::vector<double>& step_probs,
                                      int num_particles, int num_steps) {
  double acc = 0.0;
  for (double p : step_probs) acc += 1.0 - p;
  return num_particles * (acc + 1.0) / static_cast<double>(num_steps);
}

namespace detail {

struct PlanEntry {
  Box h;
  ParticleSet ps;
  double step_prob = 0.0;
  bool degenerate = false;
  int accepted = -1;
};

struct Cycle {
  std::vector<PlanEntry> plan;
  int n_hat = 0;
  bool cap_reached = false;
};

class SimRunner {
 public:
  explicit SimRunner(const SimConfig& cfg)
      : cfg_(cfg),
        model_(*cfg.model),
        rngs_(cfg.seed),
        n_sec_(cfg.secondary_particles > 0 ? cfg.secondary_particles
                                           : cfg.num_particles) {}

  SimResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    cfg_.validate();
    traj_ = simulate(model_, cfg_.num_steps, rngs_);
    ce_bandwidth_ = ce_kde_bandwidth();
    Rng r_init = rngs_.at(Stream::kInit, 0);
    ParticleSet posterior = init_particles(model_, cfg_.num_particles, r_init);

    result_.records.resize(static_cast<size_t>(cfg_.num_steps));
    if (cfg_.keep_particle_history) {
      result_.particle_history.resize(static_cast<size_t>(cfg_.num_steps));
    }

    if (cfg_.protocol == Protocol::kPrecompute) {
      run_precompute(std::move(posterior));
    } else {
      run_per_step(std::move(posterior));
    }
    summarize();
    result_.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return std::move(result_);
  }

 private:
  Eigen::VectorXd y_at(int k) const { return traj_.measurements.col(k - 1); }

  // Cross-entropy smoothing: Silverman's rule at the run's state scale, held
  // fixed over steps and filter kinds. A per-posterior bandwidth collapses
  // whenever an event concentrates the particles, and the resulting spikes
  // dominate the time average; a shared state-scale bandwidth keeps every
  // step's contribution finite and the filter comparison meaningful.
  Eigen::VectorXd ce_kde_bandwidth() const {
    const int d = model_.state_dim();
    const Eigen::VectorXd mu = traj_.states.rowwise().mean();
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < traj_.steps(); ++k) {
      const Eigen::VectorXd diff = traj_.states.col(k) - mu;
      var += diff.cwiseProduct(diff);
    }
    var /= traj_.steps();
    const double n_factor =
        std::pow(static_cast<double>(cfg_.num_particles), -0.2);
    Eigen::VectorXd h = 1.06 * n_factor * var.cwiseMax(0.0).cwiseSqrt();
    return h.cwiseMax(1e-9);
  }

  Eigen::VectorXd trigger_center(const ParticleSet& posterior_prev, int k,
                                 const Eigen::VectorXd& y_last,
                                 ParticleSet* secondary_out) {
    ParticleSet secondary =
        propagate_secondary(posterior_prev, model_, rngs_, k, n_sec_);
    Eigen::VectorXd center = cfg_.trigger.kind == TriggerKind::kIbt
                                 ? ibt_center(secondary, model_, k)
                                 : y_last;
    if (secondary_out != nullptr) *secondary_out = std::move(secondary);
    return center;
  }

  // Membership count of per-particle proposal measurements, drawn from the
  // same keyed stream the Monte Carlo likelihood uses at this step.
  int count_accepted(const ParticleSet& ps, const Box& h, int k) {
    int count = 0;
    for (int i = 0; i < ps.size(); ++i) {
      Rng r = rngs_.at(Stream::kFilterWeight, std::uint64_t(k),
                       std::uint64_t(i));
      if (h.contains(model_.sample_measurement(ps.particles.col(i), k, r))) {
        ++count;
      }
    }
    return count;
  }

  bool mc_accounting() const {
    return cfg_.filter.evaluator.kind == EvaluatorKind::kMonteCarlo &&
           cfg_.filter.evaluator.mc_samples == 1;
  }

  void record_step(int k, int gamma, bool forced, const Box& h,
                   const ParticleSet& ps, int n_hat, bool degenerate,
                   double step_prob, int accepted) {
    EventLogRecord& rec = result_.records[static_cast<size_t>(k - 1)];
    rec.k = k;
    rec.x_true = traj_.states.col(k - 1);
    rec.y = y_at(k);
    rec.gamma = gamma;
    rec.forced = forced;
    rec.h = h;
    rec.posterior_mean = ps.mean();
    rec.posterior_log_density = posterior_log_density(ps, rec.x_true,
                                                      ce_bandwidth_);
    rec.n_hat = n_hat;
    rec.degenerate = degenerate;
    rec.step_prob = step_prob;
    rec.accepted = accepted;
    if (cfg_.keep_particle_history) {
      result_.particle_history[static_cast<size_t>(k - 1)] = ps;
    }
  }

  // Periodic downlink and open-loop SOD share the per-step loop; only the
  // box center differs.
  void run_per_step(ParticleSet posterior) {
    Eigen::VectorXd y_last = y_at(1);
    for (int k = 1; k <= cfg_.num_steps; ++k) {
      const Eigen::VectorXd y = y_at(k);
      ParticleSet secondary;
      const Eigen::VectorXd center =
          trigger_center(posterior, k, y_last, &secondary);
      const Box h = build_set(cfg_.trigger, center);
      double step_prob = std::numeric_limits<double>::quiet_NaN();
      if (k > 1) {
        step_prob = estimate_step_probability(secondary, h,
                                              cfg_.filter.evaluator, model_,
                                              rngs_, k);
      }
      const bool gamma = (k == 1) || !h.contains(y);
      StepOutput st;
      if (gamma) {
        st = filter_step(posterior, Event{y}, model_, cfg_.filter, rngs_, k);
        y_last = y;
        if (mc_accounting()) {
          st.accepted = (k == 1) ? cfg_.num_particles
                                 : count_accepted(st.ps, h, k);
        }
      } else {
        st = filter_step(posterior, NoEvent{h}, model_, cfg_.filter, rngs_, k);
      }
      record_step(k, gamma ? 1 : 0, false, h, st.ps, 0, st.degenerate,
                  step_prob, st.accepted);
      posterior = std::move(st.ps);
    }
  }

  // One precompute cycle after an event at step t: extend boxes, trigger
  // probabilities and no-event posteriors until the horizon rule stops.
  Cycle run_cycle(int t, const ParticleSet& posterior_t,
                  const Eigen::VectorXd& y_event) {
    Cycle cycle;
    auto source = [&](int i) -> double {
      const int kk = t + i;
      const ParticleSet& prev =
          (i == 1) ? posterior_t : cycle.plan[static_cast<size_t>(i - 2)].ps;
      ParticleSet secondary;
      Eigen::VectorXd center;
      {
        ParticleSet sec =
            propagate_secondary(prev, model_, rngs_, kk, n_sec_);
        center = cfg_.trigger.kind == TriggerKind::kIbt
                     ? ibt_center(sec, model_, kk)
                     : y_event;
        secondary = std::move(sec);
      }
      PlanEntry entry;
      entry.h = build_set(cfg_.trigger, center);
      entry.step_prob = estimate_step_probability(
          secondary, entry.h, cfg_.filter.evaluator, model_, rngs_, kk);
      StepOutput st =
          filter_step(prev, NoEvent{entry.h}, model_, cfg_.filter, rngs_, kk);
      entry.ps = std::move(st.ps);
      entry.degenerate = st.degenerate;
      entry.accepted = st.accepted;
      cycle.plan.push_back(std::move(entry));
      return cycle.plan.back().step_prob;
    };

    const int cap = cfg_.horizon.cap();
    switch (cfg_.horizon.kind) {
      case HorizonRuleKind::kHeuristic: {
        const HeuristicResult res =
            heuristic_horizon(source, cfg_.horizon.c, cap);
        cycle.n_hat = res.n_hat;
        cycle.cap_reached = res.cap_reached;
        break;
      }
      case HorizonRuleKind::kQuantile: {
        TriggerProbabilities tp;
        cycle.cap_reached = true;
        for (int n = 1; n <= cap; ++n) {
          tp.push(clamp_step_probability(source(n)));
          double acc = 0.0;
          for (double v : tp.first_trigger) acc += v;
          if (acc >= cfg_.horizon.alpha) {
            cycle.n_hat = n;
            cycle.cap_reached = false;
            break;
          }
        }
        if (cycle.cap_reached) cycle.n_hat = cap;
        break;
      }
      case HorizonRuleKind::kFixed: {
        cycle.n_hat = std::min(cfg_.horizon.fixed_n, cap);
        for (int n = 1; n <= cycle.n_hat; ++n) source(n);
        break;
      }
    }
    return cycle;
  }

  void run_precompute(ParticleSet posterior) {
    const int t_end = cfg_.num_steps;
    // Forced initial transmission at k = 1.
    Eigen::VectorXd y_last = y_at(1);
    {
      ParticleSet secondary;
      const Eigen::VectorXd center =
          trigger_center(posterior, 1, y_last, &secondary);
      const Box h1 = build_set(cfg_.trigger, center);
      StepOutput st =
          filter_step(posterior, Event{y_last}, model_, cfg_.filter, rngs_, 1);
      if (mc_accounting()) st.accepted = cfg_.num_particles;
      posterior = std::move(st.ps);
      Cycle cycle = run_cycle(1, posterior, y_last);
      record_step(1, 1, false, h1, posterior, cycle.n_hat, st.degenerate,
                  std::numeric_limits<double>::quiet_NaN(), st.accepted);
      cycle_ = std::move(cycle);
    }
    int t = 1;
    int i = 1;
    while (t + i <= t_end) {
      const int k = t + i;
      const PlanEntry& entry = cycle_.plan[static_cast<size_t>(i - 1)];
      const Eigen::VectorXd y = y_at(k);
      const bool natural = !entry.h.contains(y);
      if (natural || i == cycle_.n_hat) {
        const bool forced = !natural;
        const ParticleSet& prev =
            (i == 1) ? posterior : cycle_.plan[static_cast<size_t>(i - 2)].ps;
        StepOutput st =
            filter_step(prev, Event{y}, model_, cfg_.filter, rngs_, k);
        if (mc_accounting()) st.accepted = count_accepted(st.ps, entry.h, k);
        periods_ += 1;
        forced_count_ += forced ? 1 : 0;
        radio_off_sum_ +=
            std::max(double(i) - cfg_.horizon.c * cycle_.n_hat, 0.0);
        posterior = std::move(st.ps);
        y_last = y;
        t = k;
        i = 1;
        Cycle next = run_cycle(t, posterior, y_last);
        record_step(k, 1, forced, entry.h, posterior, next.n_hat,
                    st.degenerate, entry.step_prob, st.accepted);
        cycle_ = std::move(next);
      } else {
        record_step(k, 0, false, entry.h, entry.ps, cycle_.n_hat,
                    entry.degenerate, entry.step_prob, entry.accepted);
        i += 1;
      }
    }
  }

  void summarize() {
    SimSummary& s = result_.summary;
    const int t_len = cfg_.num_steps;
    std::vector<double> logdens(static_cast<size_t>(t_len));
    std::vector<int> gammas(static_cast<size_t>(t_len));
    int events = 0;
    int degenerate = 0;
    std::vector<double> step_probs;
    bool have_probs = t_len > 1;
    bool have_accepted = mc_accounting();
    long accepted_sum = 0;
    std::vector<int> n_hats;
    for (const auto& rec : result_.records) {
      logdens[static_cast<size_t>(rec.k - 1)] = rec.posterior_log_density;
      gammas[static_cast<size_t>(rec.k - 1)] = rec.gamma;
      events += rec.gamma;
      degenerate += rec.degenerate ? 1 : 0;
      if (rec.k > 1) {
        if (std::isnan(rec.step_prob)) {
          have_probs = false;
        } else {
          step_probs.push_back(rec.step_prob);
        }
        if (rec.accepted < 0) {
          have_accepted = false;
        } else {
          accepted_sum += rec.accepted;
        }
      }
      if (rec.gamma == 1 && rec.n_hat > 0) n_hats.push_back(rec.n_hat);
    }
    s.event_count = events;
    s.c_r = static_cast<double>(events) / t_len;
    s.degenerate_steps = degenerate;
    s.ce_all = cross_entropy(logdens, gammas, CeMask::kAll);
    try {
      s.ce_events = cross_entropy(logdens, gammas, CeMask::kEvents);
    } catch (const EmptyMask&) {
    }
    try {
      s.ce_noevents = cross_entropy(logdens, gammas, CeMask::kNoEvents);
    } catch (const EmptyMask&) {
    }
    if (cfg_.protocol == Protocol::kPrecompute) {
      if (!n_hats.empty()) {
        double acc = 0.0;
        for (int n : n_hats) acc += n;
        s.mean_n_hat = acc / n_hats.size();
      }
      if (periods_ > 0) {
        s.forced_fraction = static_cast<double>(forced_count_) / periods_;
        s.mean_radio_off = radio_off_sum_ / periods_;
      }
    }
    if (have_probs) {
      s.expected_particles_formula =
          expected_particle_count(step_probs, cfg_.num_particles, t_len);
    }
    if (have_accepted) {
      s.empirical_accepted_mean =
          (cfg_.num_particles + static_cast<double>(accepted_sum)) / t_len;
    }
  }

  SimConfig cfg_;
  const StateSpaceModel& model_;
  RngFactory rngs_;
  int n_sec_;
  Trajectory traj_;
  Eigen::VectorXd ce_bandwidth_;
  SimResult result_;
  Cycle cycle_;
  long periods_ = 0;
  long forced_count_ = 0;
  double radio_off_sum_ = 0.0;
};

}  // namespace detail

inline SimResult run(const SimConfig& cfg) {
  detail::SimRunner runner(cfg);
  return runner.run();
}

struct PfTriggerEstimate {
  std::vector<double> per_step;
  std::vector<double> pmf;
};

// Observer-side estimate of the first-trigger distribution from the prior:
// one precompute pass conditioned on no triggering, recording the per-step
// probabilities. The cheap counterpart of the naive Monte Carlo pmf.
inline PfTriggerEstimate estimate_first_trigger_pf(
    const StateSpaceModel& model, const TriggerRule& rule,
    const FilterConfig& filter, const LikelihoodEvaluator& prob_eval,
    int num_particles, int max_n, std::uint64_t seed) {
  RngFactory rngs(seed);
  Rng r0 = rngs.at(Stream::kInit, 0);
  ParticleSet ps = init_particles(model, num_particles, r0);
  TriggerProbabilities tp;
  for (int k = 1; k <= max_n; ++k) {
    const ParticleSet secondary = propagate_secondary(ps, model, rngs, k);
    const Eigen::VectorXd center =
        rule.kind == TriggerKind::kIbt
            ? ibt_center(secondary, model, k)
            : model.measurement_mean(model.initial().mean, 0);
    const Box h = build_set(rule, center);
    tp.push(clamp_step_probability(
        estimate_step_probability(secondary, h, prob_eval, model, rngs, k)));
    ps = filter_step(ps, NoEvent{h}, model, filter, rngs, k).ps;
  }
  return {tp.per_step, tp.first_trigger};
}

}  // namespace eventpf

#endif  // EVENTPF_SIM_HPP_
