#pragma once

#include <stdexcept>
#include <string>

namespace gravinst {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid argument: " + what) {}
};

class GridMismatch : public Error {
 public:
  explicit GridMismatch(const std::string& what) : Error("grid mismatch: " + what) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what) : Error("degenerate input: " + what) {}
};

class ConvergenceFailure : public Error {
 public:
  explicit ConvergenceFailure(const std::string& what) : Error("convergence failure: " + what) {}
};

class GuardViolated : public Error {
 public:
  explicit GuardViolated(const std::string& what) : Error("guard violated: " + what) {}
};

class InstabilityDetected : public Error {
 public:
  explicit InstabilityDetected(const std::string& what) : Error("instability detected: " + what) {}
};

class InsufficientHistory : public Error {
 public:
  explicit InsufficientHistory(const std::string& what) : Error("insufficient history: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("i/o failure: " + what) {}
};

}  // namespace gravinst
