#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exitlim {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed expression or config text; carries the byte offset of the
// offending token when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation outside a function's domain (log of non-positive, abs'(0), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid problem definition: missing files, mismatched dimensions, bad
// parameter ranges.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The orbit never reaches the target surface before t_max.
class NoHitError : public Error {
 public:
  using Error::Error;
};

// The drift is tangent to the surface at the crossing point (or the initial
// point already lies on the surface), so the crossing is not transversal.
class TangentialCrossingError : public Error {
 public:
  using Error::Error;
};

// A standing hypothesis fails: b >= 0 or sigma = 0 inside the 1-d interval,
// infeasible rejection sampling, and similar.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// The state left the declared bounding box during integration.
class BoxEscapeError : public Error {
 public:
  BoxEscapeError(const std::string& what, double t_escape)
      : Error(what), t_escape_(t_escape) {}

  double t_escape() const { return t_escape_; }

 private:
  double t_escape_;
};

// Internal numerical failure (non-convergence, non-finite intermediate).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace exitlim
