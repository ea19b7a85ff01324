#ifndef MICROPOST_ERRORS_HPP
#define MICROPOST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace micropost {

// Bad user input: invalid structure, malformed config, out-of-range request.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Grid too coarse for the requested structure.
class ResolutionError : public ValidationError {
 public:
  explicit ResolutionError(const std::string& what) : ValidationError(what) {}
};

// Source, probe, or measurement surface in a forbidden region.
class PlacementError : public ValidationError {
 public:
  explicit PlacementError(const std::string& what) : ValidationError(what) {}
};

// Field blow-up while stepping; carries the step index in the message.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, long step)
      : std::runtime_error(what), step_index(step) {}
  long step_index;
};

// Post-processing could not produce a trustworthy answer.
class AnalysisError : public std::runtime_error {
 public:
  explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace micropost

#endif
