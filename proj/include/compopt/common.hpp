#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace compopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, non-finite entries.
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// A solver or object was configured with values outside its valid range,
/// or a required constant (Lipschitz bound, Hessian, ...) is missing.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

class InfeasiblePoint : public Error {
public:
  using Error::Error;
};

class UninitializedModel : public Error {
public:
  using Error::Error;
};

/// The convex master problem could not be solved to the requested accuracy.
class MasterFailure : public Error {
public:
  using Error::Error;
};

class OracleFailure : public Error {
public:
  using Error::Error;
};

/// A self-check on an invariant that must hold by construction failed.
class InternalConsistency : public Error {
public:
  using Error::Error;
};

class RegistryError : public Error {
public:
  using Error::Error;
};

class Unsupported : public Error {
public:
  using Error::Error;
};

inline void require_dim(const Vec &v, Eigen::Index n, const char *what) {
  if (v.size() != n) {
    throw InvalidInput(std::string(what) + ": expected dimension " +
                       std::to_string(n) + ", got " +
                       std::to_string(v.size()));
  }
}

inline void require_finite(const Vec &v, const char *what) {
  if (!v.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

/// Feasibility tolerance used for "x belongs to the set" preconditions.
inline double feasibility_tolerance(const Vec &x) {
  return 1e-9 * (1.0 + (x.size() ? x.norm() : 0.0));
}

} // namespace compopt
