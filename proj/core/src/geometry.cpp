#include "nlos/geometry.hpp"

#include <cmath>

#include "nlos/error.hpp"

namespace nlos {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Aliasing: return "Aliasing";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::InfeasibleTime: return "InfeasibleTime";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::AmbiguousAssociation: return "AmbiguousAssociation";
    case ErrorCode::TooManyTargets: return "TooManyTargets";
    case ErrorCode::NoTargetFound: return "NoTargetFound";
    case ErrorCode::Interrupted: return "Interrupted";
  }
  return "Unknown";
}

double standoff_delay_s(double standoff_m, double period_s) {
  const double round_trip = 2.0 * standoff_m / kSpeedOfLight;
  double folded = std::fmod(round_trip, period_s);
  if (folded < 0.0) folded += period_s;
  return folded;
}

}  // namespace nlos
