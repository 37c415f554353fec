#pragma once

#include <stdexcept>
#include <string>

namespace vspec {

// Precondition or invariant violation on caller-supplied data.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file or config contents.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace vspec
