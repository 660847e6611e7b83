/*
 * Copyright (C) 2026 The epigame authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace epigame {

/// Input outside the domain of an operation (simplex violation, bad params).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A fixed-step integration left the unit box by more than the projection
/// tolerance. Carries the simulation time of the failing step.
class StepSizeError : public std::runtime_error {
public:
  StepSizeError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

/// Sliding was requested on a surface that is not attractive.
class NoSlidingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Strong-immunity operation called with weak-immunity parameters or vice versa.
class WrongVariantError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Too many surface crossings without sliding engagement.
class ChatteringError : public std::runtime_error {
public:
  ChatteringError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

}  // namespace epigame
