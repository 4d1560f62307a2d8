#pragma once

#include <stdexcept>
#include <string>

namespace flint {

// Error taxonomy mirrors the process exit codes: usage 1, data 2, numeric 3.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

}  // namespace flint
