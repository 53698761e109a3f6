#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vtspf {

/// Violated precondition on an operation's inputs.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file. Row/column are zero-based; npos when not applicable.
class LoadError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  LoadError(const std::string& what, std::size_t row = npos, std::size_t col = npos)
      : std::runtime_error(what), row_(row), col_(col) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Precision matrix that is not positive definite.
class SingularPrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every particle weight in one cluster collapsed to zero.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(int time, std::size_t cluster)
      : std::runtime_error("weight degeneracy at t=" + std::to_string(time) +
                           " in cluster " + std::to_string(cluster)),
        time_(time),
        cluster_(cluster) {}

  int time() const { return time_; }
  std::size_t cluster() const { return cluster_; }

 private:
  int time_;
  std::size_t cluster_;
};

/// Invalid scenario or CLI configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vtspf
