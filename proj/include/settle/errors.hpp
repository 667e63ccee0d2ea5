#pragma once

#include <stdexcept>
#include <string>

namespace settle {

// Map / terrain errors.
struct OutOfBoundsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidSceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ExcessiveGridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidGridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration / file errors.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CycleInKinematicTreeError : ParseError {
  using ParseError::ParseError;
};
struct MissingParentError : ParseError {
  using ParseError::ParseError;
};
struct JointOutOfLimitsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry / numerics.
struct DegenerateAxisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CollinearContactsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Oracle / benchmark.
struct NoFeasiblePoseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GimbalAmbiguityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace settle
