#pragma once

#include <stdexcept>
#include <string>

namespace mcimplicit {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a factor is numerically rank-deficient; carries the offending
// smallest singular value.
struct SingularMatrixError : std::runtime_error {
  SingularMatrixError(const std::string& what, double sigma_min_)
      : std::runtime_error(what), sigma_min(sigma_min_) {}
  double sigma_min;
};

struct DivergedError : std::runtime_error {
  DivergedError(const std::string& what, long iteration_)
      : std::runtime_error(what), iteration(iteration_) {}
  long iteration;
};

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& field_path_, const std::string& what)
      : std::runtime_error(field_path_ + ": " + what), field_path(field_path_) {}
  std::string field_path;
};

}  // namespace mcimplicit
