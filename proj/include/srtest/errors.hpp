#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace srtest {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Zero-spread column, too few rows, or anything else that makes the
// scale recursion undefined.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// A fixed-point iteration hit its iteration cap. Carries the last iterate so
// callers can inspect how far it got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   double residual, int iterations)
      : Error(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual),
        iterations_(iterations) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
  int iterations_;
};

// A trace estimate came out non-positive, so no variance can be formed.
class EstimatorBreakdown : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

class GeneratorError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field_path, const std::string& what)
      : Error(field_path + ": " + what), field_path_(field_path) {}
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

class PlanValidationError : public Error {
 public:
  PlanValidationError(const std::string& what, std::vector<std::string> problems)
      : Error(what), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace srtest
