// Copyright 2026 The em2g Authors
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

#ifndef EM2G_CORE_ERROR_HPP_
#define EM2G_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace em2g
{

enum class ErrorCode
{
  invalid_argument,
  dimension,
  not_spd,
  basin,
  not_converged,
  stage_failure,
  precondition,
  io,
};

/// Base exception for the library. The code survives the trip through the
/// C API as a status value.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

class DimensionError : public Error
{
public:
  explicit DimensionError(const std::string & what) : Error(ErrorCode::dimension, what) {}
};

class InvalidArgument : public Error
{
public:
  explicit InvalidArgument(const std::string & what) : Error(ErrorCode::invalid_argument, what) {}
};

/// Raised by the finite-sample pipeline. `stage()` is one of "centering",
/// "initialization", "main".
class StageError : public Error
{
public:
  StageError(std::string stage, const std::string & what)
  : Error(ErrorCode::stage_failure, stage + ": " + what), stage_(std::move(stage))
  {
  }
  const std::string & stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

inline void require(bool condition, const std::string & message)
{
  if (!condition) {
    throw InvalidArgument(message);
  }
}

inline void require_dimension(long expected, long actual, const char * what)
{
  if (expected != actual) {
    throw DimensionError(
      std::string(what) + ": expected dimension " + std::to_string(expected) + ", got " +
      std::to_string(actual));
  }
}

}  // namespace em2g

#endif  // EM2G_CORE_ERROR_HPP_
