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

#ifndef EVENTPF_GAUSSIAN_HPP_
#define EVENTPF_GAUSSIAN_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "eventpf/errors.hpp"
#include "eventpf/rng.hpp"

namespace eventpf {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline void check_psd(const Eigen::MatrixXd& sym, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (sym.rows() <= 3) {
    es.computeDirect(sym, Eigen::EigenvaluesOnly);
  } else {
    es.compute(sym, Eigen::EigenvaluesOnly);
  }
  if (es.eigenvalues().minCoeff() < -tol) {
    throw std::invalid_argument("covariance is not positive semidefinite");
  }
}

// Smallest/largest eigenvalue ratio test used as the invertibility gate for
// conditioning and products.
inline void check_invertible(const Eigen::MatrixXd& sym, const char* where) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (sym.rows() <= 3) {
    es.computeDirect(sym, Eigen::EigenvaluesOnly);
  } else {
    es.compute(sym, Eigen::EigenvaluesOnly);
  }
  const double lo = std::abs(es.eigenvalues().minCoeff());
  const double hi = std::abs(es.eigenvalues().maxCoeff());
  if (!(lo > 1e-12 * hi) || hi == 0.0) {
    throw SingularCovariance(where);
  }
}

}  // namespace detail

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric PSD, symmetrized on construction

  Gaussian() = default;
  Gaussian(Eigen::VectorXd mean_in, Eigen::MatrixXd cov_in)
      : mean(std::move(mean_in)), cov(detail::symmetrized(cov_in)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
      throw std::invalid_argument("gaussian dimension mismatch");
    }
    detail::check_psd(cov);
  }

  int dim() const { return static_cast<int>(mean.size()); }
};

// Block form of a joint density over (x, y); houses the per-particle moments
// of the linearized transition/measurement pair.
struct JointGaussian {
  Eigen::VectorXd mean_x;
  Eigen::VectorXd mean_y;
  Eigen::MatrixXd cov_xx;
  Eigen::MatrixXd cov_xy;
  Eigen::MatrixXd cov_yy;

  int xdim() const { return static_cast<int>(mean_x.size()); }
  int ydim() const { return static_cast<int>(mean_y.size()); }

  Eigen::MatrixXd assembled_cov() const {
    const int n = xdim(), m = ydim();
    Eigen::MatrixXd full(n + m, n + m);
    full.topLeftCorner(n, n) = cov_xx;
    full.topRightCorner(n, m) = cov_xy;
    full.bottomLeftCorner(m, n) = cov_xy.transpose();
    full.bottomRightCorner(m, m) = cov_yy;
    return detail::symmetrized(full);
  }

  void validate() const { detail::check_psd(assembled_cov()); }
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Gaussian> components;

  GaussianMixture() = default;
  GaussianMixture(std::vector<double> w, std::vector<Gaussian> c)
      : weights(std::move(w)), components(std::move(c)) {
    if (weights.size() != components.size() || weights.empty()) {
      throw std::invalid_argument("mixture size mismatch");
    }
    double sum = 0.0;
    for (double wi : weights) {
      if (wi < 0.0) throw std::invalid_argument("negative mixture weight");
      sum += wi;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("mixture weights do not sum to 1");
    }
  }

  int size() const { return static_cast<int>(weights.size()); }
};

// Axis-aligned measurement set induced by the infinity-norm trigger rules.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi)
      : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
      throw std::invalid_argument("box bound dimension mismatch");
    }
    for (int i = 0; i < lower.size(); ++i) {
      if (!(lower[i] <= upper[i])) {
        throw std::invalid_argument("box has lower > upper");
      }
    }
  }

  int dim() const { return static_cast<int>(lower.size()); }

  // Boundary counts as inside (the trigger sets are closed).
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    for (int i = 0; i < lower.size(); ++i) {
      if (y[i] < lower[i] || y[i] > upper[i]) return false;
    }
    return true;
  }

  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd half_width() const { return 0.5 * (upper - lower); }

  double log_volume() const {
    double lv = 0.0;
    for (int i = 0; i < lower.size(); ++i) {
      const double w = upper[i] - lower[i];
      if (w <= 0.0) return kNegInf;
      lv += std::log(w);
    }
    return lv;
  }
};

// ---------------------------------------------------------------------------
// Scalar normal helpers
// ---------------------------------------------------------------------------

inline double log_normal_pdf_1d(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

// log of the upper-tail probability P(Z > z) for a standard normal; stable
// far into the tail where erfc underflows.
inline double log_normal_tail(double z) {
  if (z < 30.0) {
    return std::log(0.5 * std::erfc(z * 0.7071067811865475244));
  }
  const double z2 = z * z;
  return -0.5 * z2 - 0.5 * kLog2Pi - std::log(z) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

// P(a < Z <= b) for a standard normal, linear scale.
inline double normal_interval_prob(double a, double b) {
  if (!(a < b)) return 0.0;
  if (b <= 0.0) return normal_interval_prob(-b, -a);
  if (a >= 0.0) {
    return 0.5 * (std::erfc(a * 0.7071067811865475244) -
                  std::erfc(b * 0.7071067811865475244));
  }
  // a < 0 < b: both CDF terms are well conditioned here.
  const double phi_b = 1.0 - 0.5 * std::erfc(b * 0.7071067811865475244);
  const double phi_a = 0.5 * std::erfc(-a * 0.7071067811865475244);
  return phi_b - phi_a;
}

inline double log_normal_interval(double a, double b) {
  if (!(a < b)) return kNegInf;
  if (b <= 0.0) return log_normal_interval(-b, -a);
  if (a >= 0.0) {
    const double la = log_normal_tail(a);
    const double lb = log_normal_tail(b);
    const double diff = lb - la;  // <= 0
    return la + std::log1p(-std::exp(diff));
  }
  const double p = normal_interval_prob(a, b);
  return p > 0.0 ? std::log(p) : kNegInf;
}

// ---------------------------------------------------------------------------
// Multivariate density / sampling
// ---------------------------------------------------------------------------

inline double log_normal_pdf(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& mean,
                             const Eigen::MatrixXd& cov) {
  const int d = static_cast<int>(x.size());
  if (d == 1) return log_normal_pdf_1d(x[0], mean[0], cov(0, 0));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) throw SingularCovariance("log_normal_pdf");
  const Eigen::VectorXd diff = x - mean;
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    const double di = ldlt.vectorD()[i];
    if (di <= 0.0) throw SingularCovariance("log_normal_pdf");
    logdet += std::log(di);
  }
  const double quad = diff.dot(ldlt.solve(diff));
  return -0.5 * (d * kLog2Pi + logdet + quad);
}

inline double log_normal_pdf(double x, double mean, double var) {
  return log_normal_pdf_1d(x, mean, var);
}

inline Eigen::VectorXd sample(const Gaussian& g, Rng& rng) {
  const int d = g.dim();
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  if (d == 1) {
    const double sd = std::sqrt(std::max(g.cov(0, 0), 0.0));
    return g.mean + sd * z;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
  if (llt.info() == Eigen::Success) {
    return g.mean + llt.matrixL() * z;
  }
  // PSD but rank-deficient: eigen square root with negative drift clamped.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
  Eigen::VectorXd sqrt_ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return g.mean + es.eigenvectors() * sqrt_ev.asDiagonal() * z;
}

// ---------------------------------------------------------------------------
// Conditioning (joint -> conditional given y)
// ---------------------------------------------------------------------------

inline Gaussian condition(const JointGaussian& joint,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != joint.ydim()) {
    throw std::invalid_argument("condition: y dimension mismatch");
  }
  detail::check_invertible(joint.cov_yy, "condition cov_yy");
  const Eigen::MatrixXd gain =
      joint.cov_xy * joint.cov_yy.ldlt().solve(
                         Eigen::MatrixXd::Identity(joint.ydim(), joint.ydim()));
  Eigen::VectorXd mean = joint.mean_x + gain * (y - joint.mean_y);
  Eigen::MatrixXd cov = joint.cov_xx - gain * joint.cov_xy.transpose();
  return Gaussian(std::move(mean), std::move(cov));
}

// ---------------------------------------------------------------------------
// Product of two Gaussian densities (pointwise), as a scaled Gaussian
// ---------------------------------------------------------------------------

struct ScaledGaussian {
  double log_scale;
  Gaussian density;
};

inline ScaledGaussian product(const Gaussian& a, const Gaussian& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("product: dimension mismatch");
  }
  const Eigen::MatrixXd sum = a.cov + b.cov;
  detail::check_invertible(sum, "product cov sum");
  const auto ldlt = sum.ldlt();
  // mu3 = Sigma2 (S)^-1 mu1 + Sigma1 (S)^-1 mu2,  Sigma3 = Sigma1 (S)^-1 Sigma2
  const Eigen::MatrixXd k1 = a.cov * ldlt.solve(Eigen::MatrixXd::Identity(
                                         a.dim(), a.dim()));
  Eigen::VectorXd mean = a.mean + k1 * (b.mean - a.mean);
  Eigen::MatrixXd cov = k1 * b.cov;
  const double log_scale = log_normal_pdf(a.mean, b.mean, sum);
  return {log_scale, Gaussian(std::move(mean), std::move(cov))};
}

// ---------------------------------------------------------------------------
// Box probability for diagonal-covariance Gaussians
// ---------------------------------------------------------------------------

namespace detail {

inline void require_diagonal(const Eigen::MatrixXd& cov) {
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  for (int i = 0; i < cov.rows(); ++i) {
    for (int j = 0; j < cov.cols(); ++j) {
      if (i != j && std::abs(cov(i, j)) > 1e-14 * scale) {
        throw NonDiagonalCovariance("box_probability");
      }
    }
  }
}

}  // namespace detail

// log P(y in box) for y ~ N(mean, diag(var)). Exact CDF differences per axis.
inline double log_box_probability_diag(
    const Eigen::Ref<const Eigen::VectorXd>& mean,
    const Eigen::Ref<const Eigen::VectorXd>& var, const Box& box) {
  double lp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double sd = std::sqrt(var[i]);
    if (sd <= 0.0) {
      // Degenerate axis: atom at the mean.
      if (mean[i] < box.lower[i] || mean[i] > box.upper[i]) return kNegInf;
      continue;
    }
    const double a = (box.lower[i] - mean[i]) / sd;
    const double b = (box.upper[i] - mean[i]) / sd;
    lp += log_normal_interval(a, b);
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

inline double box_probability(const Gaussian& g, const Box& box) {
  if (g.dim() != box.dim()) {
    throw std::invalid_argument("box_probability: dimension mismatch");
  }
  detail::require_diagonal(g.cov);
  return std::exp(log_box_probability_diag(g.mean, g.cov.diagonal(), box));
}

// ---------------------------------------------------------------------------
// Gaussian-mixture approximation of the uniform distribution over a box
// ---------------------------------------------------------------------------

// D^m components on the tensor grid of per-axis cell centers (midpoint rule),
// uniform weights. Per-axis variance defaults to half_width/D; an explicit
// variance_scale overrides all axes.
inline GaussianMixture mixture_from_box(
    const Box& box, int D,
    std::optional<double> variance_scale = std::nullopt) {
  if (D < 1) throw std::invalid_argument("mixture_from_box: D must be >= 1");
  const int m = box.dim();
  long total = 1;
  for (int i = 0; i < m; ++i) {
    total *= D;
    if (total > 1000000L) {
      throw std::invalid_argument("mixture_from_box: D^m too large");
    }
  }
  Eigen::VectorXd var(m);
  for (int i = 0; i < m; ++i) {
    var[i] = variance_scale ? *variance_scale
                            : 0.5 * (box.upper[i] - box.lower[i]) / D;
    if (!(var[i] > 0.0)) {
      // Zero-width axis still needs a proper density; fall back to a sliver.
      var[i] = 1e-12;
    }
  }
  const double w = 1.0 / static_cast<double>(total);
  std::vector<double> weights(static_cast<size_t>(total), w);
  std::vector<Gaussian> comps;
  comps.reserve(static_cast<size_t>(total));
  std::vector<int> idx(m, 0);
  for (long c = 0; c < total; ++c) {
    Eigen::VectorXd center(m);
    for (int i = 0; i < m; ++i) {
      const double cell = (box.upper[i] - box.lower[i]) / D;
      center[i] = box.lower[i] + (idx[i] + 0.5) * cell;
    }
    comps.emplace_back(center, Eigen::MatrixXd(var.asDiagonal()));
    for (int i = 0; i < m; ++i) {
      if (++idx[i] < D) break;
      idx[i] = 0;
    }
  }
  return GaussianMixture(std::move(weights), std::move(comps));
}

// log-sum-exp over a vector; -inf inputs are handled.
inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace eventpf

#endif  // EVENTPF_GAUSSIAN_HPP_
