/* Copyright 2026 The Octav Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OCTAV_CORE_ERROR_HPP_
#define OCTAV_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace octav {

// Mirrors the status codes of the C API one-to-one.
enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kFormat = 3,
  kDegenerate = 4,
  kInternal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace octav

#endif  // OCTAV_CORE_ERROR_HPP_
