#pragma once

#include <stdexcept>
#include <string>

namespace climattn {

/// Process exit codes shared by every CLI subcommand.
enum class ExitCode : int {
  kOk = 0,
  kVerdictFail = 1,
  kInputError = 2,
  kNumericalError = 3,
};

/// Malformed or inconsistent input: bad files, invalid configuration,
/// violated preconditions on user-supplied data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to converge or could not bracket a root.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace climattn
