#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace edgemarket {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix/vector shapes disagree, or an index is out of range.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A market instance violates one of its construction invariants.
class InvalidInstanceError : public Error {
 public:
  using Error::Error;
};

/// A price vector has a non-positive entry where strictly positive prices are required.
class InvalidPriceError : public Error {
 public:
  using Error::Error;
};

/// Bad solver or generator configuration (ranges, rho, step sizes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Every service or every EN was dropped while building an instance.
class EmptyMarketError : public Error {
 public:
  using Error::Error;
};

/// Some service has zero utility, so prices cannot be recovered from the allocation.
class DegenerateAllocationError : public Error {
 public:
  using Error::Error;
};

/// Proportional response hit an EN with no bids at all.
class StalledEnError : public Error {
 public:
  using Error::Error;
};

/// Price iterates of the dual decomposition blew up.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written, or its contents do not parse.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Dual point (p, eta) violates p_j >= a_ij * eta_i or eta_i > 0.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& what,
                   std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs)
      : Error(what), violated_pairs_(std::move(pairs)) {}

  /// (service, EN) pairs that break the constraint; EN index -1 marks a bad eta_i.
  [[nodiscard]] const std::vector<std::pair<Eigen::Index, Eigen::Index>>& violated_pairs()
      const noexcept {
    return violated_pairs_;
  }

 private:
  std::vector<std::pair<Eigen::Index, Eigen::Index>> violated_pairs_;
};

}  // namespace edgemarket
