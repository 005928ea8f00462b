#pragma once

#include <stdexcept>
#include <string>

namespace dsim {

/// Numerical failure that is not a usage error: quadrature that will not
/// converge, an eigensolver that did not settle, and the like.
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dsim
