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

#include "eventpf/filter.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "eventpf/oracle.hpp"

namespace eventpf {
namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

ParticleSet make_set(std::initializer_list<double> xs,
                     std::initializer_list<double> ws) {
  ParticleSet ps;
  const int n = static_cast<int>(xs.size());
  ps.particles.resize(1, n);
  int i = 0;
  for (double x : xs) ps.particles(0, i++) = x;
  ps.log_weights.resize(n);
  i = 0;
  for (double w : ws) ps.log_weights[i++] = std::log(w);
  normalize_log_weights(ps.log_weights);
  return ps;
}

TEST(ResampleCategorical, DeltaWeightSelectsSingleIndex) {
  Eigen::VectorXd log_w = Eigen::VectorXd::Constant(6, kNegInf);
  log_w[3] = 0.0;
  Rng rng(1);
  for (int a : resample_categorical(log_w, 50, rng)) EXPECT_EQ(a, 3);
}

TEST(ResampleCategorical, UniformFrequenciesWithinMultinomialBands) {
  const int n = 10, draws = 100000;
  Eigen::VectorXd log_w = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  Rng rng(2);
  std::vector<int> counts(n, 0);
  for (int a : resample_categorical(log_w, draws, rng)) counts[size_t(a)]++;
  const double p = 1.0 / n;
  const double sd = std::sqrt(draws * p * (1 - p));
  for (int c : counts) EXPECT_NEAR(c, draws * p, 3.0 * sd);
}

TEST(ResampleCategorical, SkewedWeightsReproduceRatio) {
  Eigen::VectorXd log_w(2);
  log_w << std::log(0.25), std::log(0.75);
  Rng rng(3);
  const int draws = 100000;
  int ones = 0;
  for (int a : resample_categorical(log_w, draws, rng)) ones += a;
  const double sd = std::sqrt(draws * 0.75 * 0.25);
  EXPECT_NEAR(ones, draws * 0.75, 3.0 * sd);
}

TEST(StepBpf, FullSupportNoEventKeepsWeightsUniform) {
  const BenchmarkModel model;
  const RngFactory rngs(11);
  Rng r0 = rngs.at(Stream::kInit, 0);
  const ParticleSet prev = init_particles(model, 64, r0);
  const Box h(vec1(-1e9), vec1(1e9));
  const StepOutput st = step_bpf(prev, NoEvent{h}, model,
                                 LikelihoodEvaluator::analytic(), rngs, 1);
  for (int i = 0; i < st.ps.size(); ++i) {
    EXPECT_NEAR(st.ps.log_weights[i], -std::log(64.0), 1e-10);
  }
  EXPECT_FALSE(st.degenerate);
}

TEST(StepBpf, EventWeightsProportionalToPointLikelihood) {
  const BenchmarkModel model;
  const RngFactory rngs(13);
  const ParticleSet prev = make_set({-3.0, -1.0, 0.5, 2.5}, {1, 1, 1, 1});
  const Eigen::VectorXd y = vec1(0.4);
  const StepOutput st =
      step_bpf(prev, Event{y}, model, LikelihoodEvaluator::analytic(), rngs, 2);
  // Output weights must equal the normalized N(y | x^2/20, 0.1) evaluated on
  // the propagated particles.
  Eigen::VectorXd expect(st.ps.size());
  for (int i = 0; i < st.ps.size(); ++i) {
    const double hx = st.ps.particles(0, i) * st.ps.particles(0, i) / 20.0;
    expect[i] = log_normal_pdf_1d(y[0], hx, 0.1);
  }
  normalize_log_weights(expect);
  for (int i = 0; i < st.ps.size(); ++i) {
    EXPECT_NEAR(st.ps.log_weights[i], expect[i], 1e-12);
  }
}

TEST(StepBpf, AllRejectedFallsBackToUniformAndFlags) {
  const BenchmarkModel model;
  const RngFactory rngs(17);
  const ParticleSet prev = make_set({0.0, 0.1, -0.1}, {1, 1, 1});
  const Box h(vec1(500.0), vec1(501.0));  // unreachable measurement set
  const StepOutput st = step_bpf(prev, NoEvent{h}, model,
                                 LikelihoodEvaluator::monte_carlo(1), rngs, 1);
  EXPECT_TRUE(st.degenerate);
  EXPECT_EQ(st.accepted, 0);
  for (int i = 0; i < st.ps.size(); ++i) {
    EXPECT_NEAR(st.ps.log_weights[i], -std::log(3.0), 1e-12);
  }
}

TEST(StepBpf, TracksKalmanWhenEveryStepTriggers) {
  const auto model = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 0.5, 0.0, 2.0);
  const int n = 10000, t_len = 1000;
  const RngFactory rngs(29);
  const Trajectory traj = simulate(model, t_len, rngs);
  const auto kf = oracle::kalman_filter(model, traj.measurements);

  Rng r0 = rngs.at(Stream::kInit, 0);
  ParticleSet ps = init_particles(model, n, r0);
  double rms = 0.0, mean_post_sd = 0.0;
  for (int k = 1; k <= t_len; ++k) {
    const StepOutput st =
        step_bpf(ps, Event{traj.measurements.col(k - 1)}, model,
                 LikelihoodEvaluator::analytic(), rngs, k);
    ps = st.ps;
    const double d = ps.mean()[0] - kf.means(0, k - 1);
    rms += d * d;
    mean_post_sd += std::sqrt(kf.covs[size_t(k - 1)](0, 0));
  }
  rms = std::sqrt(rms / t_len);
  mean_post_sd /= t_len;
  EXPECT_LE(rms, 5.0 * mean_post_sd / std::sqrt(double(n)));
}

TEST(StepApfFa, UniformWeightsOnLinearGaussianEvents) {
  const auto model = LinearGaussianModel::scalar(0.9, 0.7, 1.3, 0.4, 0.0, 2.0);
  const RngFactory rngs(31);
  const Trajectory traj = simulate(model, 50, rngs);
  Rng r0 = rngs.at(Stream::kInit, 0);
  ParticleSet ps = init_particles(model, 200, r0);
  FilterConfig cfg;
  cfg.kind = FilterKind::kApfFa;
  for (int k = 1; k <= 50; ++k) {
    const StepOutput st = step_apf_fa(ps, Event{traj.measurements.col(k - 1)},
                                      model, cfg, rngs, k);
    ps = st.ps;
    const double mean = ps.log_weights.mean();
    double var = 0.0;
    for (int i = 0; i < ps.size(); ++i) {
      var += (ps.log_weights[i] - mean) * (ps.log_weights[i] - mean);
    }
    var /= ps.size();
    EXPECT_LE(var, 1e-8) << "step " << k;
  }
}

TEST(StepApfFa, WideSingleComponentReducesToBootstrap) {
  // Identical parents, full-support box, D = 1 with a huge component
  // variance: the proposal collapses to the transition density and the
  // weights to a constant.
  const auto model = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 0.5, 0.0, 1.0);
  const RngFactory rngs(37);
  const int n = 128;
  ParticleSet prev;
  prev.particles = Eigen::MatrixXd::Constant(1, n, 1.7);
  prev.log_weights = Eigen::VectorXd::Constant(n, -std::log(double(n)));

  const double width = 1e8;
  const Box h(vec1(-width), vec1(width));
  FilterConfig cfg;
  cfg.kind = FilterKind::kApfFa;
  cfg.apf_mixture_components = 1;
  cfg.apf_variance_scale = width;

  const JointGaussian joint = model.joint_gaussian_at(prev.particles.col(0), 1);
  const StepOutput st = step_apf_fa(prev, NoEvent{h}, model, cfg, rngs, 1);
  ASSERT_FALSE(st.degenerate);
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) mean += st.ps.particles(0, i);
  mean /= n;
  for (int i = 0; i < n; ++i) {
    var += std::pow(st.ps.particles(0, i) - mean, 2);
  }
  var /= n;
  EXPECT_NEAR(mean, joint.mean_x[0], 4.0 / std::sqrt(double(n)));
  EXPECT_NEAR(var, joint.cov_xx(0, 0), 0.5);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(st.ps.log_weights[i], -std::log(double(n)), 1e-6);
  }
}

TEST(PropagateSecondary, SingleParticleDrawsFromItsTransition) {
  const auto model = LinearGaussianModel::scalar(0.5, 0.2, 1.0, 1.0, 0.0, 1.0);
  const RngFactory rngs(41);
  ParticleSet ps;
  ps.particles = Eigen::MatrixXd::Constant(1, 1, 2.0);
  ps.log_weights = Eigen::VectorXd::Zero(1);
  const ParticleSet sec = propagate_secondary(ps, model, rngs, 3);
  ASSERT_EQ(sec.size(), 1);
  EXPECT_NEAR(sec.particles(0, 0), 1.0, 4.0 * std::sqrt(0.2) * 3.0);
  EXPECT_DOUBLE_EQ(sec.log_weights[0], 0.0);
}

TEST(PropagateSecondary, DeterministicUnderFixedSeed) {
  const BenchmarkModel model;
  const RngFactory rngs(43);
  Rng r0 = rngs.at(Stream::kInit, 0);
  const ParticleSet ps = init_particles(model, 32, r0);
  const ParticleSet a = propagate_secondary(ps, model, rngs, 5);
  const ParticleSet b = propagate_secondary(ps, model, rngs, 5);
  EXPECT_TRUE(a.particles == b.particles);
}

TEST(PropagateSecondary, MeanApproachesKalmanPrediction) {
  const auto model = LinearGaussianModel::scalar(0.9, 0.4, 1.0, 0.3, 1.0, 2.0);
  const RngFactory rngs(47);
  const int n = 100000;
  Rng rng(12);
  ParticleSet ps;
  ps.particles.resize(1, n);
  for (int i = 0; i < n; ++i) ps.particles(0, i) = rng.normal(0.8, 0.5);
  ps.log_weights = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  const ParticleSet sec = propagate_secondary(ps, model, rngs, 2);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += sec.particles(0, i);
  mean /= n;
  const double pred_sd = std::sqrt(0.9 * 0.9 * 0.25 + 0.4);
  EXPECT_NEAR(mean, 0.9 * 0.8, 3.0 * pred_sd / std::sqrt(double(n)));
}

TEST(PosteriorLogDensity, PointMassMatchesKernelAtZero) {
  ParticleSet ps;
  ps.particles = Eigen::MatrixXd::Constant(1, 10, 1.3);
  ps.log_weights = Eigen::VectorXd::Constant(10, -std::log(10.0));
  const double h = kde_bandwidth(ps)[0];
  EXPECT_NEAR(posterior_log_density(ps, vec1(1.3)),
              log_normal_pdf_1d(0.0, 0.0, h * h), 1e-10);
}

TEST(PosteriorLogDensity, ConvolutionIdentityOnNormalCloud) {
  const int n = 100000;
  Rng rng(51);
  ParticleSet ps;
  ps.particles.resize(1, n);
  for (int i = 0; i < n; ++i) ps.particles(0, i) = rng.normal();
  ps.log_weights = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  const double h = kde_bandwidth(ps)[0];
  EXPECT_NEAR(posterior_log_density(ps, vec1(0.0)),
              log_normal_pdf_1d(0.0, 0.0, 1.0 + h * h), 0.02);
}

TEST(PosteriorLogDensity, FarQueryVeryNegativeButFinite) {
  const int n = 500;
  Rng rng(53);
  ParticleSet ps;
  ps.particles.resize(1, n);
  for (int i = 0; i < n; ++i) ps.particles(0, i) = rng.normal();
  ps.log_weights = Eigen::VectorXd::Constant(n, -std::log(double(n)));
  const double h = kde_bandwidth(ps)[0];
  const double far = ps.particles.maxCoeff() + 20.0 * h;
  const double lp = posterior_log_density(ps, vec1(far));
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, -20.0);
}

TEST(CrossEntropy, HandCases) {
  EXPECT_DOUBLE_EQ(cross_entropy({-2.0}, {1}, CeMask::kAll), 2.0);
  EXPECT_DOUBLE_EQ(cross_entropy({-1.5, -1.5, -1.5}, {0, 1, 0}, CeMask::kAll),
                   1.5);
  EXPECT_DOUBLE_EQ(cross_entropy({-0.3, -4.0}, {0, 1}, CeMask::kEvents), 4.0);
  EXPECT_THROW(cross_entropy({-1.0}, {1}, CeMask::kNoEvents), EmptyMask);
}

TEST(Weights, NormalizedAfterEveryStep) {
  const BenchmarkModel model;
  const RngFactory rngs(59);
  const Trajectory traj = simulate(model, 40, rngs);
  Rng r0 = rngs.at(Stream::kInit, 0);
  ParticleSet ps = init_particles(model, 50, r0);
  FilterConfig cfg;
  cfg.kind = FilterKind::kApfFa;
  const TriggerRule rule(TriggerKind::kIbt, 2.5);
  for (int k = 1; k <= 40; ++k) {
    const Eigen::VectorXd y = traj.measurements.col(k - 1);
    const HybridMeasurement meas =
        (k % 3 == 0) ? HybridMeasurement(Event{y})
                     : HybridMeasurement(NoEvent{build_set(rule, y)});
    ps = filter_step(ps, meas, model, cfg, rngs, k).ps;
    EXPECT_LE(std::abs(log_sum_exp(ps.log_weights)), 1e-10) << "step " << k;
  }
}

TEST(StepBpf, PosteriorMeanInvariantToInputPermutationInDistribution) {
  const BenchmarkModel model;
  const ParticleSet base =
      make_set({-4.0, -1.0, 0.0, 2.0, 5.0}, {0.1, 0.3, 0.2, 0.25, 0.15});
  ParticleSet permuted;
  permuted.particles.resize(1, 5);
  permuted.log_weights.resize(5);
  const int perm[5] = {3, 0, 4, 2, 1};
  for (int i = 0; i < 5; ++i) {
    permuted.particles(0, i) = base.particles(0, perm[i]);
    permuted.log_weights[i] = base.log_weights[perm[i]];
  }
  const Eigen::VectorXd y = vec1(0.6);
  const int seeds = 200;
  double diff_sum = 0.0, diff_sq = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const RngFactory ra(1000 + s);
    const RngFactory rb(5000 + s);
    const double ma =
        step_bpf(base, Event{y}, model, LikelihoodEvaluator::analytic(), ra, 1)
            .ps.mean()[0];
    const double mb = step_bpf(permuted, Event{y}, model,
                               LikelihoodEvaluator::analytic(), rb, 1)
                          .ps.mean()[0];
    const double d = ma - mb;
    diff_sum += d;
    diff_sq += d * d;
  }
  const double mean_diff = diff_sum / seeds;
  const double var_diff =
      (diff_sq / seeds - mean_diff * mean_diff) / (seeds - 1.0);
  EXPECT_NEAR(mean_diff, 0.0, 3.0 * std::sqrt(std::max(var_diff, 1e-12)));
}

}  // namespace
}  // namespace eventpf
