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

#ifndef EVENTPF_MODEL_HPP_
#define EVENTPF_MODEL_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "eventpf/gaussian.hpp"
#include "eventpf/rng.hpp"

namespace eventpf {

// Discrete-time state-space model with additive Gaussian noise:
//   x_k = f(x_{k-1}, k) + w_k,   w_k ~ N(0, Q_k)
//   y_k = h(x_k, k) + v_k,       v_k ~ N(0, diag(R_k))
// The step argument k is the index of the state being produced, k = 1..T.
// Measurement noise is diagonal by construction (the analytic box-integral
// path depends on it).
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual int state_dim() const = 0;
  virtual int meas_dim() const = 0;
  virtual Eigen::VectorXd transition_mean(
      const Eigen::Ref<const Eigen::VectorXd>& x_prev, int k) const = 0;
  virtual Eigen::MatrixXd process_cov(int k) const = 0;
  virtual Eigen::VectorXd measurement_mean(
      const Eigen::Ref<const Eigen::VectorXd>& x, int k) const = 0;
  virtual Eigen::VectorXd measurement_noise_diag(int k) const = 0;
  // Analytic Jacobian dh/dx; numeric differentiation stays in test oracles.
  virtual Eigen::MatrixXd measurement_jacobian(
      const Eigen::Ref<const Eigen::VectorXd>& x, int k) const = 0;
  virtual Gaussian initial() const = 0;

  // Scalar fast path for 1-D models; the defaults route through the vector
  // interface so only hot models need to override.
  virtual double transition_mean1(double x_prev, int k) const {
    Eigen::VectorXd v(1);
    v[0] = x_prev;
    return transition_mean(v, k)[0];
  }
  virtual double measurement_mean1(double x, int k) const {
    Eigen::VectorXd v(1);
    v[0] = x;
    return measurement_mean(v, k)[0];
  }
  virtual double process_std1(int k) const {
    return std::sqrt(process_cov(k)(0, 0));
  }
  virtual double meas_std1(int k) const {
    return std::sqrt(measurement_noise_diag(k)[0]);
  }

  bool is_scalar() const { return state_dim() == 1 && meas_dim() == 1; }

  // --- derived samplers / densities (additive Gaussian structure) ---

  Eigen::VectorXd sample_transition(
      const Eigen::Ref<const Eigen::VectorXd>& x_prev, int k, Rng& rng) const {
    if (is_scalar()) {
      Eigen::VectorXd out(1);
      out[0] = transition_mean1(x_prev[0], k) + process_std1(k) * rng.normal();
      return out;
    }
    Gaussian g(transition_mean(x_prev, k), process_cov(k));
    return sample(g, rng);
  }

  double transition_log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                                int k) const {
    if (is_scalar()) {
      const double sd = process_std1(k);
      return log_normal_pdf_1d(x[0], transition_mean1(x_prev[0], k), sd * sd);
    }
    return log_normal_pdf(x, transition_mean(x_prev, k), process_cov(k));
  }

  Eigen::VectorXd sample_measurement(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     int k, Rng& rng) const {
    if (is_scalar()) {
      Eigen::VectorXd out(1);
      out[0] = measurement_mean1(x[0], k) + meas_std1(k) * rng.normal();
      return out;
    }
    Eigen::VectorXd mean = measurement_mean(x, k);
    const Eigen::VectorXd sd = measurement_noise_diag(k).cwiseSqrt();
    for (int i = 0; i < mean.size(); ++i) mean[i] += sd[i] * rng.normal();
    return mean;
  }

  double measurement_log_density(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& x,
                                 int k) const {
    if (is_scalar()) {
      const double sd = meas_std1(k);
      return log_normal_pdf_1d(y[0], measurement_mean1(x[0], k), sd * sd);
    }
    const Eigen::VectorXd mean = measurement_mean(x, k);
    const Eigen::VectorXd var = measurement_noise_diag(k);
    double lp = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      lp += log_normal_pdf_1d(y[i], mean[i], var[i]);
    }
    return lp;
  }

  // First-order joint of (x_k, y_k) given x_{k-1}: the measurement model is
  // linearized at the propagated mean f(x_{k-1}), not at x_{k-1}.
  JointGaussian joint_gaussian_at(
      const Eigen::Ref<const Eigen::VectorXd>& x_prev, int k) const {
    JointGaussian j;
    j.mean_x = transition_mean(x_prev, k);
    j.cov_xx = process_cov(k);
    j.mean_y = measurement_mean(j.mean_x, k);
    const Eigen::MatrixXd jac = measurement_jacobian(j.mean_x, k);
    j.cov_xy = j.cov_xx * jac.transpose();
    j.cov_yy = detail::symmetrized(jac * j.cov_xx * jac.transpose());
    j.cov_yy += Eigen::MatrixXd(measurement_noise_diag(k).asDiagonal());
    return j;
  }
};

// The classical multimodal growth benchmark:
//   x_k = x/2 + 25x/(1+x^2) + 8cos(1.2k) + w,  y_k = x^2/20 + v.
class BenchmarkModel final : public StateSpaceModel {
 public:
  BenchmarkModel(double process_var = 1.0, double meas_var = 0.1,
                 double prior_mean = 0.0, double prior_var = 25.0)
      : process_var_(process_var),
        meas_var_(meas_var),
        prior_mean_(prior_mean),
        prior_var_(prior_var) {}

  int state_dim() const override { return 1; }
  int meas_dim() const override { return 1; }

  double transition_mean1(double x, int k) const override {
    return 0.5 * x + 25.0 * x / (1.0 + x * x) + 8.0 * std::cos(1.2 * k);
  }
  double measurement_mean1(double x, int) const override {
    return x * x / 20.0;
  }
  double process_std1(int) const override { return std::sqrt(process_var_); }
  double meas_std1(int) const override { return std::sqrt(meas_var_); }

  Eigen::VectorXd transition_mean(
      const Eigen::Ref<const Eigen::VectorXd>& x, int k) const override {
    Eigen::VectorXd out(1);
    out[0] = transition_mean1(x[0], k);
    return out;
  }
  Eigen::MatrixXd process_cov(int) const override {
    Eigen::MatrixXd q(1, 1);
    q(0, 0) = process_var_;
    return q;
  }
  Eigen::VectorXd measurement_mean(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   int k) const override {
    Eigen::VectorXd out(1);
    out[0] = measurement_mean1(x[0], k);
    return out;
  }
  Eigen::VectorXd measurement_noise_diag(int) const override {
    Eigen::VectorXd r(1);
    r[0] = meas_var_;
    return r;
  }
  Eigen::MatrixXd measurement_jacobian(
      const Eigen::Ref<const Eigen::VectorXd>& x, int) const override {
    Eigen::MatrixXd j(1, 1);
    j(0, 0) = x[0] / 10.0;
    return j;
  }
  Gaussian initial() const override {
    Eigen::VectorXd m(1);
    m[0] = prior_mean_;
    Eigen::MatrixXd c(1, 1);
    c(0, 0) = prior_var_;
    return Gaussian(m, c);
  }

 private:
  double process_var_;
  double meas_var_;
  double prior_mean_;
  double prior_var_;
};

// Linear-Gaussian test system x_k = A x + w, y_k = C x + v. The joint
// linearization is exact here, which the filter equivalence checks rely on.
class LinearGaussianModel final : public StateSpaceModel {
 public:
  LinearGaussianModel(Eigen::MatrixXd a, Eigen::MatrixXd q, Eigen::MatrixXd c,
                      Eigen::VectorXd r_diag, Gaussian prior)
      : a_(std::move(a)),
        q_(std::move(q)),
        c_(std::move(c)),
        r_diag_(std::move(r_diag)),
        prior_(std::move(prior)) {}

  static LinearGaussianModel scalar(double a, double q, double c, double r,
                                    double prior_mean = 0.0,
                                    double prior_var = 1.0) {
    Eigen::MatrixXd am(1, 1), qm(1, 1), cm(1, 1);
    am << a;
    qm << q;
    cm << c;
    Eigen::VectorXd rv(1);
    rv << r;
    Eigen::VectorXd pm(1);
    pm << prior_mean;
    Eigen::MatrixXd pv(1, 1);
    pv << prior_var;
    return LinearGaussianModel(am, qm, cm, rv, Gaussian(pm, pv));
  }

  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int meas_dim() const override { return static_cast<int>(c_.rows()); }

  double transition_mean1(double x, int) const override {
    return a_(0, 0) * x;
  }
  double measurement_mean1(double x, int) const override {
    return c_(0, 0) * x;
  }
  double process_std1(int) const override { return std::sqrt(q_(0, 0)); }
  double meas_std1(int) const override { return std::sqrt(r_diag_[0]); }

  Eigen::VectorXd transition_mean(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  int) const override {
    return a_ * x;
  }
  Eigen::MatrixXd process_cov(int) const override { return q_; }
  Eigen::VectorXd measurement_mean(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   int) const override {
    return c_ * x;
  }
  Eigen::VectorXd measurement_noise_diag(int) const override { return r_diag_; }
  Eigen::MatrixXd measurement_jacobian(
      const Eigen::Ref<const Eigen::VectorXd>&, int) const override {
    return c_;
  }
  Gaussian initial() const override { return prior_; }

  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::MatrixXd& c() const { return c_; }
  const Eigen::VectorXd& r_diag() const { return r_diag_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd c_;
  Eigen::VectorXd r_diag_;
  Gaussian prior_;
};

struct Trajectory {
  Eigen::VectorXd x0;
  Eigen::MatrixXd states;        // column k-1 holds x_k, k = 1..T
  Eigen::MatrixXd measurements;  // column k-1 holds y_k
  int steps() const { return static_cast<int>(states.cols()); }
};

// Deterministic given the factory seed: step k consumes only the
// (Trajectory, k) substream, so protocol variants replay identical paths.
inline Trajectory simulate(const StateSpaceModel& model, int T,
                           const RngFactory& rngs) {
  if (T < 1) throw std::invalid_argument("simulate: T must be >= 1");
  Trajectory traj;
  {
    Rng r0 = rngs.at(Stream::kTrajectory, 0);
    traj.x0 = sample(model.initial(), r0);
  }
  traj.states.resize(model.state_dim(), T);
  traj.measurements.resize(model.meas_dim(), T);
  Eigen::VectorXd x = traj.x0;
  for (int k = 1; k <= T; ++k) {
    Rng rk = rngs.at(Stream::kTrajectory, static_cast<std::uint64_t>(k));
    x = model.sample_transition(x, k, rk);
    traj.states.col(k - 1) = x;
    traj.measurements.col(k - 1) = model.sample_measurement(x, k, rk);
  }
  return traj;
}

inline Trajectory simulate(const StateSpaceModel& model, int T,
                           std::uint64_t seed) {
  return simulate(model, T, RngFactory(seed));
}

}  // namespace eventpf

#endif  // EVENTPF_MODEL_HPP_
