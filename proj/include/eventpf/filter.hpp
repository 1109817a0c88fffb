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

#ifndef EVENTPF_FILTER_HPP_
#define EVENTPF_FILTER_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "eventpf/errors.hpp"
#include "eventpf/gaussian.hpp"
#include "eventpf/likelihood.hpp"
#include "eventpf/model.hpp"
#include "eventpf/particles.hpp"
#include "eventpf/rng.hpp"
#include "eventpf/trigger.hpp"

namespace eventpf {

enum class FilterKind { kBpf, kApfFa };

struct FilterConfig {
  FilterKind kind = FilterKind::kBpf;
  // Gamma = 0 proposal/predictive mixture resolution for the adapted filter.
  int apf_mixture_components = 3;
  std::optional<double> apf_variance_scale;
  LikelihoodEvaluator evaluator;
};

// Multinomial resampling: i.i.d. categorical draws, as in the listings.
// No ESS-thresholded adaptive resampling; resampling happens every step.
inline std::vector<int> resample_categorical(
    const Eigen::Ref<const Eigen::VectorXd>& log_weights, int n_out, Rng& rng) {
  const int n = static_cast<int>(log_weights.size());
  Eigen::VectorXd cdf(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::exp(log_weights[i]);
    cdf[i] = acc;
  }
  const double total = cdf[n - 1];
  std::vector<int> out(static_cast<size_t>(n_out));
  for (int i = 0; i < n_out; ++i) {
    const double u = rng.uniform() * total;
    const double* it = std::upper_bound(cdf.data(), cdf.data() + n, u);
    int idx = static_cast<int>(it - cdf.data());
    if (idx >= n) idx = n - 1;
    out[static_cast<size_t>(i)] = idx;
  }
  return out;
}

inline ParticleSet init_particles(const StateSpaceModel& model, int n,
                                  Rng& rng) {
  ParticleSet ps;
  ps.particles.resize(model.state_dim(), n);
  const Gaussian prior = model.initial();
  for (int i = 0; i < n; ++i) ps.particles.col(i) = sample(prior, rng);
  ps.log_weights = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  ps.step = 0;
  return ps;
}

namespace detail {

inline Eigen::MatrixXd propagate_from(const Eigen::MatrixXd& particles,
                                      const std::vector<int>& ancestors,
                                      const StateSpaceModel& model, int k,
                                      Rng& rng) {
  const int n = static_cast<int>(ancestors.size());
  Eigen::MatrixXd out(particles.rows(), n);
  if (model.is_scalar()) {
    const double sd = model.process_std1(k);
    for (int i = 0; i < n; ++i) {
      out(0, i) = model.transition_mean1(particles(0, ancestors[size_t(i)]), k) +
                  sd * rng.normal();
    }
    return out;
  }
  for (int i = 0; i < n; ++i) {
    out.col(i) =
        model.sample_transition(particles.col(ancestors[size_t(i)]), k, rng);
  }
  return out;
}

}  // namespace detail

struct StepOutput {
  ParticleSet ps;
  bool degenerate = false;
  // Particles with nonzero Monte Carlo likelihood at no-event steps under
  // M = 1; -1 when the accounting does not apply.
  int accepted = -1;
};

// Bootstrap step: resample by W, propagate with the transition density,
// weight with p(Y_k | X_k).
inline StepOutput step_bpf(const ParticleSet& prev,
                           const HybridMeasurement& meas,
                           const StateSpaceModel& model,
                           const LikelihoodEvaluator& ev,
                           const RngFactory& rngs, int k) {
  const int n = prev.size();
  StepOutput out;
  Rng r_res = rngs.at(Stream::kFilterResample, std::uint64_t(k));
  const std::vector<int> anc = resample_categorical(prev.log_weights, n, r_res);
  Rng r_prop = rngs.at(Stream::kFilterPropose, std::uint64_t(k));
  out.ps.particles = detail::propagate_from(prev.particles, anc, model, k, r_prop);
  out.ps.step = k;

  Eigen::VectorXd log_w(n);
  const bool mc = ev.kind == EvaluatorKind::kMonteCarlo;
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    Rng r_w = rngs.at(Stream::kFilterWeight, std::uint64_t(k), std::uint64_t(i));
    log_w[i] = log_likelihood(ev, model, meas, out.ps.particles.col(i), k, &r_w);
    if (log_w[i] > kNegInf) ++accepted;
  }
  if (mc && !is_event(meas) && ev.mc_samples == 1) out.accepted = accepted;
  if (normalize_log_weights(log_w) == kNegInf) {
    out.degenerate = true;
    log_w = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  }
  out.ps.log_weights = std::move(log_w);
  return out;
}

namespace detail {

// Per-parent quantities reused by the adapted filter at gamma = 0; computed
// lazily for parents that were actually selected.
struct ApfParentCache {
  JointGaussian joint;
  double log_pred = 0.0;             // log p_hat(Y_k | x_{k-1})
  Eigen::VectorXd log_beta;          // component selection log-probs
  std::vector<Gaussian> conditionals;
  std::vector<Eigen::MatrixXd> cond_chol;
  bool full = false;
};

inline void apf_fill_conditionals(ApfParentCache& pc,
                                  const GaussianMixture* mix) {
  if (pc.full) return;
  if (mix == nullptr) {
    pc.cond_chol.resize(1);
    pc.cond_chol[0] =
        Eigen::LLT<Eigen::MatrixXd>(pc.conditionals[0].cov).matrixL();
    pc.full = true;
    return;
  }
  const int d_comp = mix->size();
  pc.conditionals.resize(size_t(d_comp));
  pc.cond_chol.resize(size_t(d_comp));
  for (int j = 0; j < d_comp; ++j) {
    JointGaussian jg = pc.joint;
    jg.cov_yy += mix->components[size_t(j)].cov;
    pc.conditionals[size_t(j)] = condition(jg, mix->components[size_t(j)].mean);
    pc.cond_chol[size_t(j)] =
        Eigen::LLT<Eigen::MatrixXd>(pc.conditionals[size_t(j)].cov).matrixL();
  }
  pc.full = true;
}

}  // namespace detail

// Approximate fully adapted auxiliary step. Events: resample on the
// linearized predictive likelihood N(y | mu_y, S_yy) and propose from the
// conditional N(mu_p, S_p). No-events: both densities come from the
// D-component mixture placed on H_k; proposal sampling picks a component and
// draws its conditional exactly, so the auxiliary weights stay correct.
inline StepOutput step_apf_fa(const ParticleSet& prev,
                              const HybridMeasurement& meas,
                              const StateSpaceModel& model,
                              const FilterConfig& cfg, const RngFactory& rngs,
                              int k) {
  const int n = prev.size();
  const bool event = is_event(meas);
  StepOutput out;

  std::optional<GaussianMixture> mix;
  if (!event) {
    mix = mixture_from_box(noevent_box(meas), cfg.apf_mixture_components,
                           cfg.apf_variance_scale);
  }

  std::vector<detail::ApfParentCache> cache(static_cast<size_t>(n));
  Eigen::VectorXd log_aux(n);
  for (int i = 0; i < n; ++i) {
    auto& pc = cache[size_t(i)];
    pc.joint = model.joint_gaussian_at(prev.particles.col(i), k);
    if (event) {
      pc.log_pred = log_normal_pdf(event_value(meas), pc.joint.mean_y,
                                   pc.joint.cov_yy);
    } else {
      Eigen::VectorXd terms(mix->size());
      for (int j = 0; j < mix->size(); ++j) {
        const Gaussian& comp = mix->components[size_t(j)];
        terms[j] = std::log(mix->weights[size_t(j)]) +
                   log_normal_pdf(comp.mean, pc.joint.mean_y,
                                  pc.joint.cov_yy + comp.cov);
      }
      pc.log_pred = log_sum_exp(terms);
      pc.log_beta = terms.array() - pc.log_pred;
    }
    log_aux[i] = prev.log_weights[i] + pc.log_pred;
  }
  if (normalize_log_weights(log_aux) == kNegInf) {
    // Every predictive likelihood vanished; keep the filter alive with a
    // plain bootstrap fallback.
    StepOutput fb = step_bpf(prev, meas, model, cfg.evaluator, rngs, k);
    fb.degenerate = true;
    return fb;
  }

  Rng r_res = rngs.at(Stream::kFilterResample, std::uint64_t(k));
  const std::vector<int> anc = resample_categorical(log_aux, n, r_res);

  out.ps.particles.resize(model.state_dim(), n);
  out.ps.step = k;
  Rng r_prop = rngs.at(Stream::kFilterPropose, std::uint64_t(k));
  for (int i = 0; i < n; ++i) {
    auto& pc = cache[size_t(anc[size_t(i)])];
    if (event) {
      if (!pc.full) {
        pc.conditionals.assign(1, condition(pc.joint, event_value(meas)));
        detail::apf_fill_conditionals(pc, nullptr);
      }
      const Gaussian& cond = pc.conditionals[0];
      Eigen::VectorXd z(cond.dim());
      for (int d = 0; d < cond.dim(); ++d) z[d] = r_prop.normal();
      out.ps.particles.col(i) = cond.mean + pc.cond_chol[0] * z;
    } else {
      detail::apf_fill_conditionals(pc, &*mix);
      // Component selection with probability beta_j, then the conditional.
      const double u = r_prop.uniform();
      double acc = 0.0;
      int j = mix->size() - 1;
      for (int jj = 0; jj < mix->size(); ++jj) {
        acc += std::exp(pc.log_beta[jj]);
        if (u < acc) {
          j = jj;
          break;
        }
      }
      const Gaussian& cond = pc.conditionals[size_t(j)];
      Eigen::VectorXd z(cond.dim());
      for (int d = 0; d < cond.dim(); ++d) z[d] = r_prop.normal();
      out.ps.particles.col(i) = cond.mean + pc.cond_chol[size_t(j)] * z;
    }
  }

  Eigen::VectorXd log_w(n);
  const bool mc = cfg.evaluator.kind == EvaluatorKind::kMonteCarlo;
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    const auto& pc = cache[size_t(anc[size_t(i)])];
    Rng r_w = rngs.at(Stream::kFilterWeight, std::uint64_t(k), std::uint64_t(i));
    const double ll = log_likelihood(cfg.evaluator, model, meas,
                                     out.ps.particles.col(i), k, &r_w);
    if (ll > kNegInf) ++accepted;
    const double lt = model.transition_log_density(
        out.ps.particles.col(i), prev.particles.col(anc[size_t(i)]), k);
    double log_q;
    if (event) {
      log_q = log_normal_pdf(out.ps.particles.col(i), pc.conditionals[0].mean,
                             pc.conditionals[0].cov);
    } else {
      Eigen::VectorXd terms(mix->size());
      for (int j = 0; j < mix->size(); ++j) {
        terms[j] = pc.log_beta[j] +
                   log_normal_pdf(out.ps.particles.col(i),
                                  pc.conditionals[size_t(j)].mean,
                                  pc.conditionals[size_t(j)].cov);
      }
      log_q = log_sum_exp(terms);
    }
    log_w[i] = ll + lt - pc.log_pred - log_q;
  }
  if (mc && !event && cfg.evaluator.mc_samples == 1) out.accepted = accepted;
  if (normalize_log_weights(log_w) == kNegInf) {
    out.degenerate = true;
    log_w = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  }
  out.ps.log_weights = std::move(log_w);
  return out;
}

inline StepOutput filter_step(const ParticleSet& prev,
                              const HybridMeasurement& meas,
                              const StateSpaceModel& model,
                              const FilterConfig& cfg, const RngFactory& rngs,
                              int k) {
  if (cfg.kind == FilterKind::kBpf) {
    return step_bpf(prev, meas, model, cfg.evaluator, rngs, k);
  }
  return step_apf_fa(prev, meas, model, cfg, rngs, k);
}

// Bootstrap-propagated second set used for the IBT center and the trigger
// probability estimates; uniform weights by construction.
inline ParticleSet propagate_secondary(const ParticleSet& prev,
                                       const StateSpaceModel& model,
                                       const RngFactory& rngs, int k,
                                       int n_out = 0) {
  if (prev.size() == 0) throw EmptyParticleSet();
  const int n = n_out > 0 ? n_out : prev.size();
  Rng r_res = rngs.at(Stream::kSecondaryResample, std::uint64_t(k));
  const std::vector<int> anc = resample_categorical(prev.log_weights, n, r_res);
  Rng r_prop = rngs.at(Stream::kSecondaryPropagate, std::uint64_t(k));
  ParticleSet out;
  out.particles = detail::propagate_from(prev.particles, anc, model, k, r_prop);
  out.log_weights = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  out.step = k;
  return out;
}

// Silverman bandwidth per axis, computed on the unweighted support spread.
// The weighted std collapses to zero when an event concentrates all weight on
// one particle (effective sample size 1); the propagated positions keep their
// transition-noise spread, so the density stays proper at exactly the steps
// the cross-entropy metric is supposed to grade.
inline Eigen::VectorXd kde_bandwidth(const ParticleSet& ps) {
  const double n_factor = std::pow(static_cast<double>(ps.size()), -0.2);
  const Eigen::VectorXd mu = ps.particles.rowwise().mean();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(ps.dim());
  for (int i = 0; i < ps.size(); ++i) {
    const Eigen::VectorXd d = ps.particles.col(i) - mu;
    var += d.cwiseProduct(d);
  }
  var /= ps.size();
  Eigen::VectorXd h = 1.06 * n_factor * var.cwiseMax(0.0).cwiseSqrt();
  return h.cwiseMax(1e-9);
}

// Weighted Gaussian KDE evaluated at x with an explicit bandwidth.
inline double posterior_log_density(const ParticleSet& ps,
                                    const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& h) {
  if (ps.size() < 2) {
    throw std::invalid_argument("posterior_log_density needs N >= 2");
  }
  const Eigen::VectorXd h2 = h.cwiseProduct(h);
  Eigen::VectorXd terms(ps.size());
  for (int i = 0; i < ps.size(); ++i) {
    double lp = ps.log_weights[i];
    for (int d = 0; d < ps.dim(); ++d) {
      lp += log_normal_pdf_1d(x[d], ps.particles(d, i), h2[d]);
    }
    terms[i] = lp;
  }
  return log_sum_exp(terms);
}

// Default bandwidth: Silverman's rule on the particle support.
inline double posterior_log_density(const ParticleSet& ps,
                                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  return posterior_log_density(ps, x, kde_bandwidth(ps));
}

enum class CeMask { kAll, kEvents, kNoEvents };

// Average negative log posterior density at the true state over the selected
// steps; reproduces the all / gamma=1 / gamma=0 panels.
inline double cross_entropy(const std::vector<double>& log_densities,
                            const std::vector<int>& gammas, CeMask mask) {
  if (log_densities.size() != gammas.size()) {
    throw std::invalid_argument("cross_entropy: length mismatch");
  }
  double sum = 0.0;
  long count = 0;
  for (size_t i = 0; i < log_densities.size(); ++i) {
    const bool take = mask == CeMask::kAll ||
                      (mask == CeMask::kEvents && gammas[i] == 1) ||
                      (mask == CeMask::kNoEvents && gammas[i] == 0);
    if (take) {
      sum += log_densities[i];
      ++count;
    }
  }
  if (count == 0) throw EmptyMask();
  return -sum / static_cast<double>(count);
}

}  // namespace eventpf

#endif  // EVENTPF_FILTER_HPP_
