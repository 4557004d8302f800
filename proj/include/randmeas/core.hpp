#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace randmeas {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Shared tolerances. Everything that compares numbers against an oracle
// pulls its threshold from here.
namespace tol {
inline constexpr double kPropagator = 1e-10;  // route-vs-route amplitude agreement
inline constexpr double kUnitarity = 1e-12;   // norm drift under unitary evolution
inline constexpr double kExactZero = 1e-14;   // amplitudes that must vanish
inline constexpr double kMonotone = 1e-12;    // allowed upward noise in S_m
inline constexpr double kDiscreteTail = 1e-12;
inline constexpr double kQuadratureRel = 1e-9;
}  // namespace tol

/// Thrown when user-facing parameters violate a documented domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot deliver the requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double squared_norm(const ComplexVector& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

}  // namespace randmeas
