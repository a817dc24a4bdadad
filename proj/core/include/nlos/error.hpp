#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace nlos {

enum class ErrorCode {
  InvalidInput,
  Aliasing,
  ShapeMismatch,
  EmptyWindow,
  NonConvergence,
  DegenerateFit,
  InfeasibleTime,
  EmptyIntersection,
  AmbiguousAssociation,
  TooManyTargets,
  NoTargetFound,
  Interrupted,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every recoverable failure in the toolkit. The code is
/// what callers branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Input validation failure tied to a named field (e.g. "pixels[2]").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(ErrorCode::InvalidInput, field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace nlos
