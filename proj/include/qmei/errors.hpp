#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmei {

enum class ErrorKind {
  validation,   // malformed input, dimension mismatch, non-Hermitian data
  domain,       // scalar function undefined on a retained eigenvalue
  capacity,     // dimension budget exceeded
  support,      // support inclusion violated where a finite value is required
  infeasible,   // constraint targets outside the attainable range
  divergence,   // iterative solver failed to converge
  conditioning  // linear system too ill-conditioned to solve
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class HermiticityError : public ValidationError {
 public:
  HermiticityError(double asymmetry, std::size_t row, std::size_t col);
  double max_asymmetry() const noexcept { return asymmetry_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  double asymmetry_;
  std::size_t row_, col_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(ErrorKind::capacity, what) {}
};

class SupportError : public Error {
 public:
  explicit SupportError(const std::string& what) : Error(ErrorKind::support, what) {}
};

class FeasibilityError : public Error {
 public:
  FeasibilityError(std::size_t observable, double target, double lower, double upper);
  FeasibilityError(const std::string& what)
      : Error(ErrorKind::infeasible, what), observable_(0), target_(0), lower_(0), upper_(0) {}
  std::size_t observable() const noexcept { return observable_; }
  double target() const noexcept { return target_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  std::size_t observable_;
  double target_, lower_, upper_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> history)
      : Error(ErrorKind::divergence, what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what) : Error(ErrorKind::conditioning, what) {}
};

}  // namespace qmei
