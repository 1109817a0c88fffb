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

#include "eventpf/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace eventpf {
namespace {

TEST(Simulate, DeterministicGivenSeed) {
  const BenchmarkModel model;
  const Trajectory a = simulate(model, 50, 42u);
  const Trajectory b = simulate(model, 50, 42u);
  EXPECT_TRUE(a.states == b.states);
  EXPECT_TRUE(a.measurements == b.measurements);
  const Trajectory c = simulate(model, 50, 43u);
  EXPECT_FALSE(a.states == c.states);
}

TEST(Simulate, ZeroNoiseDriftTerm) {
  // All variances zero, x_0 = 0: the first produced state is the pure drift
  // 8 cos(1.2 * 1).
  const BenchmarkModel model(0.0, 0.0, 0.0, 0.0);
  const Trajectory t = simulate(model, 1, 7u);
  EXPECT_NEAR(t.states(0, 0), 8.0 * std::cos(1.2), 1e-12);
  EXPECT_NEAR(t.measurements(0, 0),
              std::pow(8.0 * std::cos(1.2), 2) / 20.0, 1e-12);
}

TEST(Simulate, Ar1MomentsMatchClosedForm) {
  const double a = 0.9, q = 1.0, p0 = 1.0, m0 = 2.0;
  const auto model = LinearGaussianModel::scalar(a, q, 1.0, 0.5, m0, p0);
  const int t_len = 10;
  const int runs = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < runs; ++r) {
    const Trajectory t = simulate(model, t_len, 1000u + r);
    const double x = t.states(0, t_len - 1);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / runs;
  const double var = sum2 / runs - mean * mean;
  const double a2t = std::pow(a * a, t_len);
  const double expect_mean = std::pow(a, t_len) * m0;
  const double expect_var = a2t * p0 + q * (1.0 - a2t) / (1.0 - a * a);
  const double se_mean = std::sqrt(expect_var / runs);
  const double se_var = expect_var * std::sqrt(2.0 / (runs - 1.0));
  EXPECT_NEAR(mean, expect_mean, 3.0 * se_mean);
  EXPECT_NEAR(var, expect_var, 3.0 * se_var);
}

TEST(JointGaussianAt, ExactForLinearGaussian) {
  Eigen::MatrixXd a(2, 2), q(2, 2), c(1, 2);
  a << 0.9, 0.1, -0.2, 0.8;
  q << 0.5, 0.1, 0.1, 0.4;
  c << 1.0, -0.5;
  Eigen::VectorXd r(1);
  r << 0.3;
  Eigen::VectorXd pm = Eigen::VectorXd::Zero(2);
  const LinearGaussianModel model(a, q, c, r,
                                  Gaussian(pm, Eigen::MatrixXd::Identity(2, 2)));
  Eigen::VectorXd x_prev(2);
  x_prev << 1.0, -2.0;
  const JointGaussian j = model.joint_gaussian_at(x_prev, 3);
  const Eigen::VectorXd mu_x = a * x_prev;
  EXPECT_LT((j.mean_x - mu_x).norm(), 1e-12);
  EXPECT_LT((j.mean_y - c * mu_x).norm(), 1e-12);
  EXPECT_LT((j.cov_xx - q).norm(), 1e-12);
  EXPECT_LT((j.cov_xy - q * c.transpose()).norm(), 1e-12);
  const Eigen::MatrixXd syy = c * q * c.transpose() +
                              Eigen::MatrixXd(r.asDiagonal());
  EXPECT_LT((j.cov_yy - syy).norm(), 1e-12);
}

TEST(JointGaussianAt, BenchmarkHandValues) {
  const BenchmarkModel model;
  Eigen::VectorXd x0(1);
  x0 << 0.0;
  const JointGaussian j = model.joint_gaussian_at(x0, 1);
  const double mu_x = 8.0 * std::cos(1.2);
  const double jac = mu_x / 10.0;
  EXPECT_NEAR(j.mean_x[0], mu_x, 1e-12);
  EXPECT_NEAR(j.cov_xx(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(j.mean_y[0], mu_x * mu_x / 20.0, 1e-12);
  EXPECT_NEAR(j.cov_xy(0, 0), jac, 1e-12);
  EXPECT_NEAR(j.cov_yy(0, 0), jac * jac + 0.1, 1e-12);
}

TEST(JointGaussianAt, LinearizedMomentsAreProperDensity) {
  const BenchmarkModel model;
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd xp(1);
    xp << rng.normal(0.0, 8.0);
    const JointGaussian j = model.joint_gaussian_at(xp, 4);
    j.validate();
    // Linearized measurement variance never falls below the noise floor.
    EXPECT_GE(j.cov_yy(0, 0), 0.1 - 1e-15);
    // Sample moments of the true joint keep the KL to the linearized
    // Gaussian finite: x-marginal moments agree exactly, covariances are PD.
    const int draws = 100000;
    double sx = 0.0, sxx = 0.0;
    Rng sampler(100 + rep);
    for (int i = 0; i < draws; ++i) {
      const Eigen::VectorXd x = model.sample_transition(xp, 4, sampler);
      sx += x[0];
      sxx += x[0] * x[0];
    }
    const double mean = sx / draws;
    const double var = sxx / draws - mean * mean;
    EXPECT_NEAR(mean, j.mean_x[0], 3.0 * std::sqrt(1.0 / draws));
    EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / draws));
  }
}

TEST(Model, ScalarFastPathMatchesVectorPath) {
  const BenchmarkModel model;
  Eigen::VectorXd x(1);
  for (double xv : {-7.3, -0.2, 0.0, 1.7, 12.0}) {
    x << xv;
    for (int k : {1, 5, 40}) {
      EXPECT_DOUBLE_EQ(model.transition_mean1(xv, k),
                       model.transition_mean(x, k)[0]);
      EXPECT_DOUBLE_EQ(model.measurement_mean1(xv, k),
                       model.measurement_mean(x, k)[0]);
    }
  }
}

TEST(Model, TransitionDensityIsFiniteOnSampledStates) {
  const BenchmarkModel model;
  Rng rng(3);
  Eigen::VectorXd x(1);
  x << 0.5;
  for (int k = 1; k <= 100; ++k) {
    const Eigen::VectorXd next = model.sample_transition(x, k, rng);
    EXPECT_TRUE(std::isfinite(model.transition_log_density(next, x, k)));
    const Eigen::VectorXd y = model.sample_measurement(next, k, rng);
    EXPECT_TRUE(std::isfinite(model.measurement_log_density(y, next, k)));
    x = next;
  }
}

}  // namespace
}  // namespace eventpf
