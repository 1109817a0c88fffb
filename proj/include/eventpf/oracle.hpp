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

#ifndef EVENTPF_ORACLE_HPP_
#define EVENTPF_ORACLE_HPP_

// Brute-force reference implementations for tests and calibration. These
// deliberately avoid the filter/likelihood/horizon numeric kernels: box
// integrals are computed from std::erf directly, resampling and the
// closed-loop propagation are re-implemented locally, and T_c is evaluated
// from its defining expectation.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "eventpf/errors.hpp"
#include "eventpf/model.hpp"
#include "eventpf/rng.hpp"
#include "eventpf/trigger.hpp"

namespace eventpf::oracle {

struct McTriggerPmf {
  std::vector<double> pmf;   // p_hat(n), n = 1..max_n
  std::vector<double> lo90;  // binomial 90% band
  std::vector<double> hi90;
  double censored_mass = 0.0;  // mass escaping past max_n
  int repetitions = 0;
};

namespace detail {

inline double phi(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752); }

inline double interval_prob(double mean, double sd, double lo, double hi) {
  if (sd <= 0.0) return (mean >= lo && mean <= hi) ? 1.0 : 0.0;
  return phi((hi - mean) / sd) - phi((lo - mean) / sd);
}

inline int draw_categorical(const std::vector<double>& cdf, double u) {
  int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
  const double target = u * cdf.back();
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (cdf[static_cast<size_t>(mid)] <= target) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace detail

// First-trigger distribution of the closed-loop event-sampled system by
// repeated forward simulation: draw x_0 and a fresh particle cloud from the
// prior, run the bootstrap no-event recursion that drives the trigger rule,
// and register the step of the first event. filterless = true skips the
// no-event reweighting (pure prediction cloud).
inline McTriggerPmf naive_mc_trigger_pmf(const StateSpaceModel& model,
                                         const TriggerRule& rule,
                                         bool filterless, int num_particles,
                                         int repetitions, int max_n,
                                         std::uint64_t seed) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  const int n_p = num_particles;
  const int m = model.meas_dim();
  const bool scalar = model.is_scalar();
  std::vector<long> counts(static_cast<size_t>(max_n), 0);
  long censored = 0;

  const Gaussian prior = model.initial();
  std::vector<double> cdf(static_cast<size_t>(n_p));
  Eigen::MatrixXd cloud(model.state_dim(), n_p);
  Eigen::MatrixXd scratch(model.state_dim(), n_p);
  Eigen::VectorXd weights(n_p);

  for (int rep = 0; rep < repetitions; ++rep) {
    Rng rng(mix64(mix64(seed ^ 0xa5e3f19cULL) ^ static_cast<std::uint64_t>(rep)));
    Eigen::VectorXd x = sample(prior, rng);
    for (int i = 0; i < n_p; ++i) cloud.col(i) = sample(prior, rng);
    weights.setConstant(1.0 / n_p);
    int first = 0;
    for (int n = 1; n <= max_n; ++n) {
      x = model.sample_transition(x, n, rng);
      const Eigen::VectorXd y = model.sample_measurement(x, n, rng);

      // Secondary prediction cloud for the trigger center.
      double acc = 0.0;
      for (int i = 0; i < n_p; ++i) {
        acc += weights[i];
        cdf[static_cast<size_t>(i)] = acc;
      }
      Eigen::VectorXd center = Eigen::VectorXd::Zero(m);
      if (scalar) {
        const double sd = model.process_std1(n);
        double c = 0.0;
        for (int i = 0; i < n_p; ++i) {
          const int a = detail::draw_categorical(cdf, rng.uniform());
          const double xs =
              model.transition_mean1(cloud(0, a), n) + sd * rng.normal();
          c += model.measurement_mean1(xs, n);
        }
        center[0] = c / n_p;
      } else {
        for (int i = 0; i < n_p; ++i) {
          const int a = detail::draw_categorical(cdf, rng.uniform());
          const Eigen::VectorXd xs =
              model.sample_transition(cloud.col(a), n, rng);
          center += model.measurement_mean(xs, n);
        }
        center /= n_p;
      }
      if (rule.kind == TriggerKind::kSod) {
        // First-trigger study starts from an event; SOD centers on that
        // measurement, which for the pmf oracle is the prior-mean proxy.
        center = model.measurement_mean(prior.mean, 0);
      }
      Eigen::VectorXd lo(m), hi(m);
      for (int i = 0; i < m; ++i) {
        const double f = rule.weight_diag.size() > 0 ? rule.weight_diag[i] : 1.0;
        lo[i] = center[i] - rule.delta / f;
        hi[i] = center[i] + rule.delta / f;
      }
      bool inside = true;
      for (int i = 0; i < m; ++i) {
        if (y[i] < lo[i] || y[i] > hi[i]) inside = false;
      }
      if (!inside) {
        first = n;
        break;
      }
      // Posterior update given the no-event information.
      for (int i = 0; i < n_p; ++i) {
        const int a = detail::draw_categorical(cdf, rng.uniform());
        if (scalar) {
          scratch(0, i) = model.transition_mean1(cloud(0, a), n) +
                          model.process_std1(n) * rng.normal();
        } else {
          scratch.col(i) = model.sample_transition(cloud.col(a), n, rng);
        }
      }
      cloud.swap(scratch);
      if (!filterless) {
        double wsum = 0.0;
        for (int i = 0; i < n_p; ++i) {
          double w = 1.0;
          if (scalar) {
            w = detail::interval_prob(model.measurement_mean1(cloud(0, i), n),
                                      model.meas_std1(n), lo[0], hi[0]);
          } else {
            const Eigen::VectorXd mean = model.measurement_mean(cloud.col(i), n);
            const Eigen::VectorXd sd =
                model.measurement_noise_diag(n).cwiseSqrt();
            for (int d = 0; d < m; ++d) {
              w *= detail::interval_prob(mean[d], sd[d], lo[d], hi[d]);
            }
          }
          weights[i] = w;
          wsum += w;
        }
        if (wsum > 0.0) {
          weights /= wsum;
        } else {
          weights.setConstant(1.0 / n_p);
        }
      } else {
        weights.setConstant(1.0 / n_p);
      }
    }
    if (first == 0) {
      ++censored;
    } else {
      ++counts[static_cast<size_t>(first - 1)];
    }
  }

  McTriggerPmf out;
  out.repetitions = repetitions;
  out.pmf.resize(static_cast<size_t>(max_n));
  out.lo90.resize(static_cast<size_t>(max_n));
  out.hi90.resize(static_cast<size_t>(max_n));
  const double r = static_cast<double>(repetitions);
  const double z = 1.6448536269514722;
  for (int n = 0; n < max_n; ++n) {
    const double p = counts[static_cast<size_t>(n)] / r;
    // Wilson score interval; the plain normal band degenerates to [p, p] at
    // zero counts.
    const double denom = 1.0 + z * z / r;
    const double center = (p + z * z / (2.0 * r)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / r + z * z / (4.0 * r * r)) / denom;
    out.pmf[static_cast<size_t>(n)] = p;
    out.lo90[static_cast<size_t>(n)] = std::max(0.0, center - half);
    out.hi90[static_cast<size_t>(n)] = std::min(1.0, center + half);
  }
  out.censored_mass = censored / r;
  return out;
}

// Adaptive Simpson integration of the (diagonal) Gaussian density over a box,
// one axis at a time.
namespace detail {

inline double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * 2.5066282746310005024);
}

inline double simpson(double mean, double sd, double a, double b) {
  const double c = 0.5 * (a + b);
  return (b - a) / 6.0 *
         (normal_pdf(a, mean, sd) + 4.0 * normal_pdf(c, mean, sd) +
          normal_pdf(b, mean, sd));
}

inline double adaptive_simpson(double mean, double sd, double a, double b,
                               double whole, double tol, int depth) {
  if (depth <= 0) throw ToleranceNotMet("quadrature_box_integral");
  const double c = 0.5 * (a + b);
  const double left = simpson(mean, sd, a, c);
  const double right = simpson(mean, sd, c, b);
  if (std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(mean, sd, a, c, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(mean, sd, c, b, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline double quadrature_box_integral(const Gaussian& g, const Box& box,
                                      double tol) {
  double total = 1.0;
  for (int i = 0; i < g.dim(); ++i) {
    const double sd = std::sqrt(g.cov(i, i));
    double a = box.lower[i];
    double b = box.upper[i];
    if (!(a < b)) return 0.0;
    // Clip the integration window to the effective support.
    a = std::max(a, g.mean[i] - 12.0 * sd);
    b = std::min(b, g.mean[i] + 12.0 * sd);
    if (!(a < b)) return 0.0;
    const double whole = detail::simpson(g.mean[i], sd, a, b);
    total *=
        detail::adaptive_simpson(g.mean[i], sd, a, b, whole, tol, 60);
  }
  return total;
}

struct TcArgmax {
  int n_star = 1;
  double value = 0.0;
};

// Exhaustive scan of the expected off-time objective, evaluated from its
// defining sum; first index wins ties.
inline TcArgmax exhaustive_tc_argmax(const std::vector<double>& p_t, double c,
                                     int n_max) {
  TcArgmax best;
  best.n_star = 1;
  best.value = -1.0;
  for (int n = 1; n <= n_max; ++n) {
    double head = 0.0;
    for (int i = 1; i < n; ++i) {
      head += (i <= static_cast<int>(p_t.size())) ? p_t[size_t(i - 1)] : 0.0;
    }
    const double terminal = std::max(0.0, 1.0 - head);
    const double cn = c * n;
    double value = 0.0;
    for (int i = 1; i <= n; ++i) {
      if (static_cast<double>(i) <= cn) continue;
      const double mass =
          (i == n) ? terminal
                   : ((i <= static_cast<int>(p_t.size())) ? p_t[size_t(i - 1)]
                                                          : 0.0);
      value += (static_cast<double>(i) - cn) * mass;
    }
    if (value > best.value) {
      best.value = value;
      best.n_star = n;
    }
  }
  return best;
}

struct KalmanResult {
  Eigen::MatrixXd means;       // filtered means, one column per step
  std::vector<Eigen::MatrixXd> covs;
  Eigen::MatrixXd pred_meas;   // predicted measurement means C m^-
  std::vector<Eigen::MatrixXd> innov_covs;
  Eigen::MatrixXd innovations;
};

// Standard predict/update recursion; the closed-form reference for the
// always-trigger equivalence checks.
inline KalmanResult kalman_filter(const LinearGaussianModel& model,
                                  const Eigen::MatrixXd& measurements) {
  const int t_len = static_cast<int>(measurements.cols());
  const int n = model.state_dim();
  const int m = model.meas_dim();
  const Eigen::MatrixXd& a = model.a();
  const Eigen::MatrixXd& q = model.q();
  const Eigen::MatrixXd& c = model.c();
  const Eigen::MatrixXd r = Eigen::MatrixXd(model.r_diag().asDiagonal());

  KalmanResult res;
  res.means.resize(n, t_len);
  res.covs.resize(static_cast<size_t>(t_len));
  res.pred_meas.resize(m, t_len);
  res.innov_covs.resize(static_cast<size_t>(t_len));
  res.innovations.resize(m, t_len);

  Eigen::VectorXd mean = model.initial().mean;
  Eigen::MatrixXd cov = model.initial().cov;
  for (int k = 0; k < t_len; ++k) {
    mean = a * mean;
    cov = a * cov * a.transpose() + q;
    const Eigen::MatrixXd s = c * cov * c.transpose() + r;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
    if (!lu.isInvertible()) throw SingularCovariance("kalman innovation");
    const Eigen::MatrixXd gain = cov * c.transpose() * lu.inverse();
    const Eigen::VectorXd pred_y = c * mean;
    const Eigen::VectorXd innov = measurements.col(k) - pred_y;
    mean += gain * innov;
    cov = cov - gain * c * cov;
    cov = 0.5 * (cov + cov.transpose());
    res.means.col(k) = mean;
    res.covs[static_cast<size_t>(k)] = cov;
    res.pred_meas.col(k) = pred_y;
    res.innov_covs[static_cast<size_t>(k)] = s;
    res.innovations.col(k) = innov;
  }
  return res;
}

}  // namespace eventpf::oracle

#endif  // EVENTPF_ORACLE_HPP_
