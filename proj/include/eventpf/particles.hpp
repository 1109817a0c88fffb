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

#ifndef EVENTPF_PARTICLES_HPP_
#define EVENTPF_PARTICLES_HPP_

#include <Eigen/Dense>
#include <cmath>

#include "eventpf/errors.hpp"
#include "eventpf/gaussian.hpp"

namespace eventpf {

// Weighted empirical approximation of the posterior. Weights live in log
// space and are kept normalized (log-sum-exp == 0); no-event likelihoods can
// underflow linear weights over long no-event runs.
struct ParticleSet {
  Eigen::MatrixXd particles;    // one column per particle
  Eigen::VectorXd log_weights;  // normalized
  int step = 0;

  int size() const { return static_cast<int>(particles.cols()); }
  int dim() const { return static_cast<int>(particles.rows()); }

  Eigen::VectorXd weights() const { return log_weights.array().exp(); }

  Eigen::VectorXd mean() const {
    const Eigen::VectorXd w = weights();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
    for (int i = 0; i < size(); ++i) m += w[i] * particles.col(i);
    return m;
  }

  double effective_sample_size() const {
    const Eigen::VectorXd w = weights();
    return 1.0 / w.squaredNorm();
  }
};

// Normalizes in place; returns the pre-normalization log-sum-exp.
inline double normalize_log_weights(Eigen::VectorXd& log_w) {
  const double lse = log_sum_exp(log_w);
  if (lse == kNegInf) return lse;
  log_w.array() -= lse;
  return lse;
}

// Per-axis weighted standard deviation (used for KDE bandwidths).
inline Eigen::VectorXd weighted_std(const ParticleSet& ps) {
  const Eigen::VectorXd w = ps.weights();
  const Eigen::VectorXd mu = ps.mean();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(ps.dim());
  for (int i = 0; i < ps.size(); ++i) {
    const Eigen::VectorXd d = ps.particles.col(i) - mu;
    var += w[i] * d.cwiseProduct(d);
  }
  return var.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace eventpf

#endif  // EVENTPF_PARTICLES_HPP_
