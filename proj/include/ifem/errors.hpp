#pragma once

#include <stdexcept>
#include <string>

namespace ifem {

// Geometry assumptions on the interface/mesh pairing do not hold; usually the
// mesh is too coarse for the interface curvature.
struct AssumptionViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The level set vanishes on (part of) a mesh face.
struct DegenerateCut : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closest-point root finding along the frame normal failed.
struct MappingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularLifting : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InnerSolveStagnation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingExactSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ifem
