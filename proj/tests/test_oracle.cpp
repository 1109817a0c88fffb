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

#include "eventpf/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace eventpf {
namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

Eigen::MatrixXd mat1(double x) {
  Eigen::MatrixXd m(1, 1);
  m << x;
  return m;
}

TEST(Quadrature, CentralNinetyFive) {
  const Gaussian g(vec1(0.0), mat1(1.0));
  const double p =
      oracle::quadrature_box_integral(g, Box(vec1(-1.96), vec1(1.96)), 1e-10);
  EXPECT_NEAR(p, 0.9500042097, 1e-8);
}

TEST(Quadrature, PointBoxIsZero) {
  const Gaussian g(vec1(0.0), mat1(1.0));
  EXPECT_DOUBLE_EQ(
      oracle::quadrature_box_integral(g, Box(vec1(0.3), vec1(0.3)), 1e-10),
      0.0);
}

TEST(Quadrature, FullSupportProxyIsOne) {
  const Gaussian g(vec1(2.0), mat1(3.0));
  const double p =
      oracle::quadrature_box_integral(g, Box(vec1(-1e9), vec1(1e9)), 1e-10);
  EXPECT_NEAR(p, 1.0, 1e-8);
}

TEST(Quadrature, UnreachableToleranceThrows) {
  const Gaussian g(vec1(0.0), mat1(1.0));
  EXPECT_THROW(
      oracle::quadrature_box_integral(g, Box(vec1(-1.0), vec1(1.0)), -1.0),
      ToleranceNotMet);
}

TEST(Quadrature, SeparableTwoDim) {
  Eigen::VectorXd mean(2);
  mean << 0.0, 1.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = 1.0;
  cov(1, 1) = 4.0;
  const Gaussian g(mean, cov);
  Eigen::VectorXd lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 3.0;
  const double p = oracle::quadrature_box_integral(g, Box(lo, hi), 1e-10);
  const double px = 0.6826894921370859;  // P(|Z| <= 1)
  EXPECT_NEAR(p, px * px, 1e-8);
}

TEST(Kalman, ZeroNoiseTracksExactly) {
  Eigen::MatrixXd a = mat1(0.8), q = mat1(1e-14), c = mat1(1.0);
  Eigen::VectorXd r = vec1(1e-14);
  const LinearGaussianModel model(a, q, c, r, Gaussian(vec1(1.0), mat1(1.0)));
  const Trajectory traj = simulate(LinearGaussianModel(
      a, mat1(0.0), c, vec1(0.0), Gaussian(vec1(1.0), mat1(0.0))), 20, 3u);
  const auto kf = oracle::kalman_filter(model, traj.measurements);
  for (int k = 5; k < 20; ++k) {
    EXPECT_NEAR(kf.means(0, k), traj.states(0, k), 1e-5);
  }
}

TEST(Kalman, StaticStatePosteriorVariance) {
  // x constant (A=1, Q=0), repeated measurements: posterior precision after k
  // steps is 1/P0 + k/R.
  const double p0 = 4.0, r = 0.5;
  const LinearGaussianModel model(mat1(1.0), mat1(0.0), mat1(1.0), vec1(r),
                                  Gaussian(vec1(0.0), mat1(p0)));
  Eigen::MatrixXd ys(1, 10);
  for (int i = 0; i < 10; ++i) ys(0, i) = 0.3 * i;
  const auto kf = oracle::kalman_filter(model, ys);
  for (int k = 0; k < 10; ++k) {
    const double expect = 1.0 / (1.0 / p0 + (k + 1) / r);
    EXPECT_NEAR(kf.covs[size_t(k)](0, 0), expect, 1e-12);
  }
}

TEST(Kalman, InnovationsAreWhite) {
  const auto model = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 0.5, 0.0, 5.0);
  const int t_len = 20000;
  const Trajectory traj = simulate(model, t_len, 77u);
  const auto kf = oracle::kalman_filter(model, traj.measurements);
  // Standardize, then check the lag-1..5 autocorrelations stay in the 3-sigma
  // band of white noise.
  Eigen::VectorXd z(t_len);
  for (int k = 0; k < t_len; ++k) {
    z[k] = kf.innovations(0, k) / std::sqrt(kf.innov_covs[size_t(k)](0, 0));
  }
  const int burn = 50;  // transient before the gain settles
  const int n = t_len - burn;
  const double mean = z.tail(n).mean();
  for (int lag = 1; lag <= 5; ++lag) {
    double acc = 0.0, var = 0.0;
    for (int k = burn; k < t_len - lag; ++k) {
      acc += (z[k] - mean) * (z[k + lag] - mean);
    }
    for (int k = burn; k < t_len; ++k) var += (z[k] - mean) * (z[k] - mean);
    const double rho = acc / var;
    EXPECT_LT(std::abs(rho), 3.0 / std::sqrt(double(n))) << "lag " << lag;
  }
}

TEST(Kalman, SingularInnovationThrows) {
  const LinearGaussianModel model(mat1(1.0), mat1(0.0), mat1(0.0), vec1(0.0),
                                  Gaussian(vec1(0.0), mat1(0.0)));
  Eigen::MatrixXd ys = Eigen::MatrixXd::Zero(1, 3);
  EXPECT_THROW(oracle::kalman_filter(model, ys), SingularCovariance);
}

TEST(NaiveMcTriggerPmf, HugeDeltaCensorsEverything) {
  const BenchmarkModel model;
  const TriggerRule rule(TriggerKind::kIbt, 1e9);
  const auto pmf =
      oracle::naive_mc_trigger_pmf(model, rule, false, 20, 200, 10, 1u);
  for (double p : pmf.pmf) EXPECT_DOUBLE_EQ(p, 0.0);
  EXPECT_DOUBLE_EQ(pmf.censored_mass, 1.0);
}

TEST(NaiveMcTriggerPmf, TinyDeltaTriggersImmediately) {
  const BenchmarkModel model;
  const TriggerRule rule(TriggerKind::kIbt, 1e-9);
  const auto pmf =
      oracle::naive_mc_trigger_pmf(model, rule, false, 20, 200, 10, 1u);
  EXPECT_DOUBLE_EQ(pmf.pmf[0], 1.0);
  EXPECT_DOUBLE_EQ(pmf.censored_mass, 0.0);
}

TEST(NaiveMcTriggerPmf, MassAndBandsAreConsistent) {
  const BenchmarkModel model;
  const TriggerRule rule(TriggerKind::kIbt, 7.5);
  const auto pmf =
      oracle::naive_mc_trigger_pmf(model, rule, false, 50, 2000, 25, 9u);
  double total = pmf.censored_mass;
  for (size_t i = 0; i < pmf.pmf.size(); ++i) {
    total += pmf.pmf[i];
    EXPECT_LE(pmf.lo90[i], pmf.pmf[i]);
    EXPECT_GE(pmf.hi90[i], pmf.pmf[i]);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Early mass dominates for the benchmark geometry.
  EXPECT_GT(pmf.pmf[0] + pmf.pmf[1] + pmf.pmf[2] + pmf.pmf[3] + pmf.pmf[4],
            0.3);
}

TEST(NaiveMcTriggerPmf, DeterministicPerSeed) {
  const BenchmarkModel model;
  const TriggerRule rule(TriggerKind::kIbt, 2.5);
  const auto a = oracle::naive_mc_trigger_pmf(model, rule, false, 30, 500, 15, 4u);
  const auto b = oracle::naive_mc_trigger_pmf(model, rule, false, 30, 500, 15, 4u);
  EXPECT_EQ(a.pmf, b.pmf);
}

TEST(ExhaustiveTcArgmax, FirstIndexWinsTies) {
  // Uniform-ish trailing zeros create flat stretches; the scan must keep the
  // first maximizer.
  const std::vector<double> p{1.0};
  const auto best = oracle::exhaustive_tc_argmax(p, 0.5, 50);
  EXPECT_EQ(best.n_star, 1);
  EXPECT_NEAR(best.value, 0.5, 1e-15);
}

}  // namespace
}  // namespace eventpf
