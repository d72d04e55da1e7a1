#ifndef MINVINE_ERROR_HPP
#define MINVINE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace minvine {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain (e.g. evaluation outside [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numeric result (kernel value, moment, ...) came out NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Internal construction (e.g. the multiwavelet condition system) did not
// reach its tolerance. Signals a bug rather than bad input.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

// Moment targets that no copula in the exponential family can reach.
class InfeasibleMoments : public Error {
 public:
  InfeasibleMoments(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Optimizer ran out of evaluations above the requested tolerance.
class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class StructureError : public Error {
 public:
  using Error::Error;
};

class UnsupportedStructure : public Error {
 public:
  using Error::Error;
};

class UnfittedParent : public Error {
 public:
  using Error::Error;
};

// A bin (combination) of conditioning variables holds too few observations.
class EmptyBin : public Error {
 public:
  EmptyBin(const std::string& what, std::size_t edge, std::size_t bin,
           std::size_t count)
      : Error(what), edge_(edge), bin_(bin), count_(count) {}
  std::size_t edge() const { return edge_; }
  std::size_t bin() const { return bin_; }
  std::size_t count() const { return count_; }

 private:
  std::size_t edge_;
  std::size_t bin_;
  std::size_t count_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class NonFiniteValue : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace minvine

#endif  // MINVINE_ERROR_HPP
