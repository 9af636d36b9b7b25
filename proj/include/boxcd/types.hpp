#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace boxcd {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A point in parameter space (length p).
using ParamVector = Vector<double>;
/// A reduced summary t(y) (length d).
using SummaryVector = Vector<double>;
/// Raw simulated or observed data: n rows (i.i.d. models) or a T x 1 count series.
using DataSet = Matrix<double>;

/// Precondition or dimension contract broken by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not offered by this model (e.g. likelihood of an intractable model).
class UnsupportedCapability : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical procedure failed (no accepted draws, optimizer non-convergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

/// Axis-aligned parameter support Theta^b.
template <typename Scalar>
struct Bounds {
  Vector<Scalar> lower;
  Vector<Scalar> upper;

  Eigen::Index dim() const { return lower.size(); }
  Vector<Scalar> width() const { return upper - lower; }

  bool contains(const Eigen::Ref<const Vector<Scalar>>& x) const {
    return x.size() == dim() && (x.array() >= lower.array()).all() &&
           (x.array() <= upper.array()).all();
  }

  void validate() const {
    require(lower.size() == upper.size() && lower.size() > 0,
            "support bounds must be non-empty and of equal length");
    require(lower.allFinite() && upper.allFinite(), "support bounds must be finite");
    require((lower.array() < upper.array()).all(), "support requires lower < upper per coordinate");
  }
};

using Support = Bounds<double>;

}  // namespace boxcd
