#pragma once

#include <stdexcept>
#include <string>

namespace dpl {

/// Argument outside the mathematical domain of a formula (b <= 0, negative
/// power base, division by zero in the broken law).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tensor/vector dimensions do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed benchmark or CSV input. `path()` names the offending field,
/// e.g. "configs[3].curve".
class DataError : public std::runtime_error {
 public:
  DataError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The selected configuration has already been trained to b_max.
class FullyEvaluatedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dpl
