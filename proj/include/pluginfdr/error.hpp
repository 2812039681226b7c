#pragma once

#include <stdexcept>
#include <string>

namespace pluginfdr {

/// Raised for malformed or out-of-contract inputs (bad supports, invalid
/// transforms, inconsistent lengths). The CLI maps it to exit code 1.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace pluginfdr
