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

#ifndef EVENTPF_HORIZON_HPP_
#define EVENTPF_HORIZON_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "eventpf/filter.hpp"
#include "eventpf/likelihood.hpp"
#include "eventpf/particles.hpp"

namespace eventpf {

// First-trigger probabilities p_T(1..L) maintained incrementally together
// with the running no-trigger product.
struct TriggerProbabilities {
  std::vector<double> per_step;       // p(gamma+_{k+i} = 1 | no trigger yet)
  std::vector<double> first_trigger;  // p_T(i)
  double no_trigger_product = 1.0;

  void push(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("step probability outside [0,1]");
    }
    per_step.push_back(p);
    first_trigger.push_back(p * no_trigger_product);
    no_trigger_product *= (1.0 - p);
  }

  int length() const { return static_cast<int>(per_step.size()); }
};

// Estimated probabilities are kept off the exact {0,1} endpoints so running
// products cannot freeze under Monte Carlo likelihood noise.
inline double clamp_step_probability(double p, double eps = 1e-9) {
  return std::min(std::max(p, eps), 1.0 - eps);
}

inline std::vector<double> first_trigger_pmf(
    const std::vector<double>& per_step) {
  std::vector<double> pmf;
  pmf.reserve(per_step.size());
  double no_trigger = 1.0;
  for (double p : per_step) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("step probability outside [0,1]");
    }
    pmf.push_back(p * no_trigger);
    no_trigger *= (1.0 - p);
  }
  return pmf;
}

// Generalized inverse distribution function: smallest n with
// sum_{i<=n} p_T(i) >= alpha. Empty result signals the list was exhausted
// first and the caller must extend the sequence.
inline std::optional<int> quantile_horizon(const std::vector<double>& p_t,
                                           double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  double acc = 0.0;
  for (size_t i = 0; i < p_t.size(); ++i) {
    acc += p_t[i];
    if (acc >= alpha) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

namespace detail {

inline double pt_at(const std::vector<double>& p_t, long i) {
  // 1-based; absent entries are zero.
  if (i < 1 || i > static_cast<long>(p_t.size())) return 0.0;
  return p_t[static_cast<size_t>(i - 1)];
}

}  // namespace detail

// Direct (brute-force reference) form of the expected radio-off time per
// event period: T_c(n_hat) = sum_{i > c n_hat}^{n_hat} (i - c n_hat) p(i|n_hat)
// with the first-trigger pmf padded by the forced-trigger mass at n_hat.
inline double tc_value(const std::vector<double>& p_t, double c, int n_hat) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must be in (0,1)");
  if (n_hat < 1) throw std::invalid_argument("n_hat must be >= 1");
  double head = 0.0;  // mass strictly before n_hat
  for (long i = 1; i < n_hat; ++i) head += detail::pt_at(p_t, i);
  const double terminal = std::max(0.0, 1.0 - head);
  const double cn = c * n_hat;
  const long i_min = static_cast<long>(std::floor(cn)) + 1;
  double total = 0.0;
  for (long i = std::max(1L, i_min); i <= n_hat; ++i) {
    const double mass = (i == n_hat) ? terminal : detail::pt_at(p_t, i);
    total += (static_cast<double>(i) - cn) * mass;
  }
  return total;
}

// Closed-form forward difference T_c(n_hat + 1) - T_c(n_hat). The correction
// term alpha(n_hat) carries the fractional part of c(n_hat+1) as its leading
// factor; the single index that leaves the summation window between n_hat and
// n_hat + 1 is floor(c(n_hat+1)).
inline double tc_forward_difference(const std::vector<double>& p_t, double c,
                                    int n_hat) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must be in (0,1)");
  if (n_hat < 1) throw std::invalid_argument("n_hat must be >= 1");
  double sum_n = 0.0;
  for (long i = 1; i <= n_hat; ++i) sum_n += detail::pt_at(p_t, i);
  const long cn_floor = static_cast<long>(std::floor(c * n_hat));
  double sum_c = 0.0;
  for (long i = 1; i <= cn_floor; ++i) sum_c += detail::pt_at(p_t, i);
  const double cn1 = c * (n_hat + 1);
  const long q = static_cast<long>(std::floor(cn1));
  const double alpha = (cn1 - static_cast<double>(q)) * detail::pt_at(p_t, q) *
                       static_cast<double>(q - cn_floor);
  return alpha + 1.0 - sum_n - c * (1.0 - sum_c);
}

// Lower bound on the global argmax of T_c: the (1 - c) quantile of p_T.
inline std::optional<int> tc_argmax_lower_bound(const std::vector<double>& p_t,
                                               double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must be in (0,1)");
  return quantile_horizon(p_t, 1.0 - c);
}

struct HeuristicResult {
  int n_hat = 0;
  bool cap_reached = false;
  TriggerProbabilities probs;
};

// First-maximizer heuristic: extend the estimated p_T one step at a time and
// stop at the first n_hat with a negative forward difference. The source
// callback runs one filter precomputation step and returns the estimated
// per-step trigger probability.
inline HeuristicResult heuristic_horizon(
    const std::function<double(int)>& step_prob_source, double c, int n_max) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must be in (0,1)");
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  HeuristicResult res;
  for (int n = 1; n <= n_max; ++n) {
    res.probs.push(clamp_step_probability(step_prob_source(n)));
    if (tc_forward_difference(res.probs.first_trigger, c, n) < 0.0) {
      res.n_hat = n;
      return res;
    }
  }
  res.n_hat = n_max;
  res.cap_reached = true;
  return res;
}

inline int default_horizon_cap(double c) {
  return 10 * static_cast<int>(std::ceil(1.0 / c));
}

// Particle estimate of the one-step trigger probability from the propagated
// secondary set: sum_i W_i (1 - P(y in h | X_i)).
inline double estimate_step_probability(const ParticleSet& secondary,
                                        const Box& h_next,
                                        const LikelihoodEvaluator& ev,
                                        const StateSpaceModel& model,
                                        const RngFactory& rngs, int k) {
  if (secondary.size() == 0) throw EmptyParticleSet();
  const Eigen::VectorXd w = secondary.weights();
  double p = 0.0;
  for (int i = 0; i < secondary.size(); ++i) {
    Rng r = rngs.at(Stream::kTriggerProb, std::uint64_t(k), std::uint64_t(i));
    const double ll =
        log_likelihood(ev, model, NoEvent{h_next}, secondary.particles.col(i),
                       k, &r);
    p += w[i] * (1.0 - (ll == kNegInf ? 0.0 : std::exp(ll)));
  }
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace eventpf

#endif  // EVENTPF_HORIZON_HPP_
