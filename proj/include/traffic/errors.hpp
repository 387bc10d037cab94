#pragma once

#include <stdexcept>
#include <string>

namespace traffic {

// Malformed or out-of-range configuration input.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A closed-form construction is undefined for the given parameters
// (e.g. zero diffusion makes the stationary law a Dirac mass).
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical solver failure: CFL violation, NaN, singular linear system.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace traffic
