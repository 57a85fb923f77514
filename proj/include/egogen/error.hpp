// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace egogen {

// Error categories. The CLI maps these onto its exit codes, so the numeric
// values are part of the public contract.
enum class ErrorCode {
  kInvalidArgument = 1,  // caller passed something that violates a precondition
  kShapeMismatch,
  kNonFinite,            // NaN/Inf in inputs or a diverging computation
  kFileNotFound,
  kIo,
  kParse,                // malformed header, truncated payload, bad JSON
  kInvariant,            // parsed fine but the data breaks a model invariant
  kNormalization,        // skin-weight rows that do not sum to one
  kStreamExhausted,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace egogen
