#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace roughsc {

/// Invalid parameters or a discretization that cannot represent the request.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Array lengths or grids that do not match.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation is undefined for the given density representation (e.g. the
/// sup norm of an atomic measure).
class UnsupportedRepresentation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf encountered or an iteration failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostics collected by long-running operations.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace roughsc
