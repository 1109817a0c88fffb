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

#ifndef EVENTPF_LIKELIHOOD_HPP_
#define EVENTPF_LIKELIHOOD_HPP_

#include <cmath>
#include <optional>

#include "eventpf/gaussian.hpp"
#include "eventpf/model.hpp"
#include "eventpf/trigger.hpp"

namespace eventpf {

enum class EvaluatorKind { kAnalytic, kMixture, kMonteCarlo };

// Evaluators of the switching likelihood p(Y_k | x_k). All no-event paths
// return (an approximation of) the unnormalized integral of p(y|x) over H_k,
// so weight ratios are comparable across evaluators.
struct LikelihoodEvaluator {
  EvaluatorKind kind = EvaluatorKind::kAnalytic;
  int mixture_components = 3;                    // D
  std::optional<double> mixture_variance_scale;  // default: half_width/D
  int mc_samples = 1;                            // M

  static LikelihoodEvaluator analytic() { return {}; }
  static LikelihoodEvaluator mixture(int d,
                                     std::optional<double> vs = std::nullopt) {
    LikelihoodEvaluator ev;
    ev.kind = EvaluatorKind::kMixture;
    ev.mixture_components = d;
    ev.mixture_variance_scale = vs;
    return ev;
  }
  static LikelihoodEvaluator monte_carlo(int m) {
    LikelihoodEvaluator ev;
    ev.kind = EvaluatorKind::kMonteCarlo;
    ev.mc_samples = m;
    return ev;
  }

  void validate() const {
    if (kind == EvaluatorKind::kMixture && mixture_components < 1) {
      throw std::invalid_argument("mixture evaluator needs D >= 1");
    }
    if (kind == EvaluatorKind::kMonteCarlo && mc_samples < 1) {
      throw std::invalid_argument("monte carlo evaluator needs M >= 1");
    }
  }
};

namespace detail {

inline double log_noevent_analytic(const StateSpaceModel& model, const Box& h,
                                   const Eigen::Ref<const Eigen::VectorXd>& x,
                                   int k) {
  if (model.is_scalar()) {
    const double mean = model.measurement_mean1(x[0], k);
    const double sd = model.meas_std1(k);
    if (sd <= 0.0) {
      return (mean >= h.lower[0] && mean <= h.upper[0]) ? 0.0 : kNegInf;
    }
    return log_normal_interval((h.lower[0] - mean) / sd,
                               (h.upper[0] - mean) / sd);
  }
  return log_box_probability_diag(model.measurement_mean(x, k),
                                  model.measurement_noise_diag(k), h);
}

// Mixture path: log |H| + log sum_j a_j N(z_j | h(x), V_j + R). The volume
// factor turns the normalized mixture value into the unnormalized integral.
inline double log_noevent_mixture(const StateSpaceModel& model, const Box& h,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  int k, const LikelihoodEvaluator& ev) {
  const GaussianMixture mix =
      mixture_from_box(h, ev.mixture_components, ev.mixture_variance_scale);
  const Eigen::VectorXd mean = model.measurement_mean(x, k);
  const Eigen::VectorXd var = model.measurement_noise_diag(k);
  Eigen::VectorXd terms(mix.size());
  for (int j = 0; j < mix.size(); ++j) {
    const Gaussian& comp = mix.components[j];
    double lp = std::log(mix.weights[j]);
    for (int i = 0; i < mean.size(); ++i) {
      lp += log_normal_pdf_1d(comp.mean[i], mean[i], comp.cov(i, i) + var[i]);
    }
    terms[j] = lp;
  }
  return h.log_volume() + log_sum_exp(terms);
}

inline double log_noevent_monte_carlo(
    const StateSpaceModel& model, const Box& h,
    const Eigen::Ref<const Eigen::VectorXd>& x, int k,
    const LikelihoodEvaluator& ev, Rng& rng) {
  int count = 0;
  for (int j = 0; j < ev.mc_samples; ++j) {
    const Eigen::VectorXd y = model.sample_measurement(x, k, rng);
    if (h.contains(y)) ++count;
  }
  if (count == 0) return kNegInf;
  return std::log(static_cast<double>(count) /
                  static_cast<double>(ev.mc_samples));
}

}  // namespace detail

// log p(Y_k | x_k). Events use the point likelihood for every evaluator kind;
// the evaluators differ only in how the no-event integral is computed.
// -inf marks a rejected particle (Monte Carlo count 0 or zero-mass box).
inline double log_likelihood(const LikelihoodEvaluator& ev,
                             const StateSpaceModel& model,
                             const HybridMeasurement& meas,
                             const Eigen::Ref<const Eigen::VectorXd>& x, int k,
                             Rng* rng = nullptr) {
  if (is_event(meas)) {
    return model.measurement_log_density(event_value(meas), x, k);
  }
  const Box& h = noevent_box(meas);
  switch (ev.kind) {
    case EvaluatorKind::kAnalytic:
      return detail::log_noevent_analytic(model, h, x, k);
    case EvaluatorKind::kMixture:
      return detail::log_noevent_mixture(model, h, x, k, ev);
    case EvaluatorKind::kMonteCarlo: {
      if (rng == nullptr) {
        throw std::invalid_argument("monte carlo evaluator needs an rng");
      }
      return detail::log_noevent_monte_carlo(model, h, x, k, ev, *rng);
    }
  }
  return kNegInf;
}

// log(1 - P(y in h | x)): the per-particle trigger probability in log space.
inline double log_complement(const LikelihoodEvaluator& ev,
                             const StateSpaceModel& model, const Box& h,
                             const Eigen::Ref<const Eigen::VectorXd>& x, int k,
                             Rng* rng = nullptr) {
  const double ll = log_likelihood(ev, model, NoEvent{h}, x, k, rng);
  if (ll == kNegInf) return 0.0;
  if (ll >= 0.0) return kNegInf;
  const double p = std::exp(ll);
  if (p >= 1.0) return kNegInf;
  return std::log1p(-p);
}

}  // namespace eventpf

#endif  // EVENTPF_LIKELIHOOD_HPP_
