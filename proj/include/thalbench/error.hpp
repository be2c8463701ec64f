#pragma once

#include <stdexcept>
#include <string>

namespace thalbench {

/// Caller supplied something unusable (bad file, bad argument, inconsistent
/// inputs). The CLI maps this family to exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class GeometryMismatch : public InputError {
 public:
  using InputError::InputError;
};

class EmptySetError : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace thalbench
