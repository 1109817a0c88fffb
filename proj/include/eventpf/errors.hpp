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

#ifndef EVENTPF_ERRORS_HPP_
#define EVENTPF_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace eventpf {

struct SingularCovariance : std::runtime_error {
  explicit SingularCovariance(const std::string& what)
      : std::runtime_error("singular covariance: " + what) {}
};

struct NonDiagonalCovariance : std::runtime_error {
  explicit NonDiagonalCovariance(const std::string& what)
      : std::runtime_error("non-diagonal covariance: " + what) {}
};

struct EmptyParticleSet : std::runtime_error {
  EmptyParticleSet() : std::runtime_error("empty particle set") {}
};

struct EmptyMask : std::runtime_error {
  EmptyMask() : std::runtime_error("mask selects no time steps") {}
};

struct ToleranceNotMet : std::runtime_error {
  explicit ToleranceNotMet(const std::string& what)
      : std::runtime_error("tolerance not met: " + what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what)
      : std::runtime_error("config error: " + what) {}
};

}  // namespace eventpf

#endif  // EVENTPF_ERRORS_HPP_
