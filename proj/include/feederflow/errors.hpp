#pragma once

#include <stdexcept>
#include <string>

namespace feederflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model input: bad topology, out-of-range parameters, unsupported
// topology for an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Unreadable or ill-formed input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Boundary-value solve failed (no convergence, voltage collapse).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int sweeps, double last_change)
      : Error(what), sweeps_(sweeps), last_change_(last_change) {}

  int sweeps() const { return sweeps_; }
  double last_change() const { return last_change_; }

 private:
  int sweeps_;
  double last_change_;
};

}  // namespace feederflow
