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

#ifndef EVENTPF_TRIGGER_HPP_
#define EVENTPF_TRIGGER_HPP_

#include <Eigen/Dense>
#include <variant>

#include "eventpf/errors.hpp"
#include "eventpf/gaussian.hpp"
#include "eventpf/model.hpp"
#include "eventpf/particles.hpp"

namespace eventpf {

// Transmitted measurement (gamma = 1) ...
struct Event {
  Eigen::VectorXd y;
};
// ... or the set the measurement is known to lie in (gamma = 0).
struct NoEvent {
  Box h;
};

using HybridMeasurement = std::variant<Event, NoEvent>;

inline bool is_event(const HybridMeasurement& m) {
  return std::holds_alternative<Event>(m);
}
inline const Eigen::VectorXd& event_value(const HybridMeasurement& m) {
  return std::get<Event>(m).y;
}
inline const Box& noevent_box(const HybridMeasurement& m) {
  return std::get<NoEvent>(m).h;
}

enum class TriggerKind { kSod, kIbt };

// Infinity-norm trigger: fires when ||F (center - y)||_inf > delta, i.e. the
// no-trigger set is the axis-aligned box [center_i - delta/F_ii, ...].
struct TriggerRule {
  TriggerKind kind = TriggerKind::kIbt;
  double delta = 1.0;
  Eigen::VectorXd weight_diag;  // F_k diagonal; empty means identity

  TriggerRule() = default;
  TriggerRule(TriggerKind kind_in, double delta_in,
              Eigen::VectorXd weight = Eigen::VectorXd())
      : kind(kind_in), delta(delta_in), weight_diag(std::move(weight)) {
    if (!(delta > 0.0)) throw std::invalid_argument("trigger delta must be > 0");
    for (int i = 0; i < weight_diag.size(); ++i) {
      if (!(weight_diag[i] > 0.0)) {
        throw std::invalid_argument("trigger weights must be positive");
      }
    }
  }
};

inline Box build_set(const TriggerRule& rule,
                     const Eigen::Ref<const Eigen::VectorXd>& center) {
  const int m = static_cast<int>(center.size());
  Eigen::VectorXd lo(m), hi(m);
  for (int i = 0; i < m; ++i) {
    const double f = rule.weight_diag.size() > 0 ? rule.weight_diag[i] : 1.0;
    const double r = rule.delta / f;
    lo[i] = center[i] - r;
    hi[i] = center[i] + r;
  }
  return Box(std::move(lo), std::move(hi));
}

// Boundary counts as inside: y exactly on the box edge does not trigger.
inline HybridMeasurement decide(const TriggerRule&,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Box& h) {
  if (h.contains(y)) return NoEvent{h};
  return Event{y};
}

// IBT center: mean of the predictive likelihood approximated through the
// propagated set, sum_i W_i h_k(X_i).
inline Eigen::VectorXd ibt_center(const ParticleSet& propagated,
                                  const StateSpaceModel& model, int k) {
  if (propagated.size() == 0) throw EmptyParticleSet();
  const Eigen::VectorXd w = propagated.weights();
  if (model.is_scalar()) {
    double c = 0.0;
    for (int i = 0; i < propagated.size(); ++i) {
      c += w[i] * model.measurement_mean1(propagated.particles(0, i), k);
    }
    Eigen::VectorXd out(1);
    out[0] = c;
    return out;
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(model.meas_dim());
  for (int i = 0; i < propagated.size(); ++i) {
    c += w[i] * model.measurement_mean(propagated.particles.col(i), k);
  }
  return c;
}

}  // namespace eventpf

#endif  // EVENTPF_TRIGGER_HPP_
