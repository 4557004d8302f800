#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "randmeas/core.hpp"
#include "randmeas/rng.hpp"

namespace randmeas {

// Discrete laws live on tau in {2, 4, 6, ...}; write tau = 2k with k >= 1.
struct DiscreteExponential {
  double r;  // p_tau = r (1-r)^{k-1}
  bool operator==(const DiscreteExponential&) const = default;
};
struct DiscretePowerLaw {
  double s;  // p_tau = 2^s / (zeta(s) tau^s)
  bool operator==(const DiscretePowerLaw&) const = default;
};
struct DiscreteDelta {
  long tau0;
  bool operator==(const DiscreteDelta&) const = default;
};
struct Poisson {
  double lambda;  // k - 1 ~ Poisson(lambda)
  bool operator==(const Poisson&) const = default;
};
struct ContinuousExponential {
  double r;
  bool operator==(const ContinuousExponential&) const = default;
};
struct ContinuousPowerLaw {
  double alpha;
  double tau_ch;
  bool operator==(const ContinuousPowerLaw&) const = default;
};
struct ContinuousDelta {
  double tau0;
  bool operator==(const ContinuousDelta&) const = default;
};
struct HalfNormal {
  double tau_hn;
  double sigma;
  bool operator==(const HalfNormal&) const = default;
};

/// Second moment result; heavy tails report `infinite` instead of a number.
struct Variance {
  bool infinite = false;
  double value = 0.0;
};

/// Expectation tuning. `panel` is the natural oscillation scale of the
/// integrand; quadrature panels never exceed it near the origin.
struct ExpectOptions {
  double panel = 0.0;  // 0 selects a law-dependent default
};

/// Waiting-time law between consecutive measurements.
class IntervalLaw {
 public:
  using Params = std::variant<DiscreteExponential, DiscretePowerLaw, DiscreteDelta, Poisson,
                              ContinuousExponential, ContinuousPowerLaw, ContinuousDelta, HalfNormal>;

  /// Validates parameter domains; throws DomainError.
  explicit IntervalLaw(Params params);

  const Params& params() const { return params_; }
  /// Stable lowercase identifier, e.g. "discrete_power_law".
  std::string kind() const;
  bool is_discrete() const;
  bool is_delta() const;
  /// True if every support point is an even integer.
  bool even_support() const { return is_discrete(); }

  double sample(Rng& rng) const;
  double mean() const;
  Variance variance() const;
  /// Mass (discrete) or density (continuous); 0 outside the support.
  double mass_or_density(double tau) const;

  /// sum_tau p_tau f(tau) or the integral of p(tau) f(tau).
  /// Throws NumericalError when the quadrature does not reach its tolerance.
  double expect(const std::function<double(double)>& f, ExpectOptions opts = {}) const;

  /// Explicit support points and masses of a discrete law, truncated once the
  /// cumulative mass reaches 1 - 1e-12. Throws for continuous laws.
  std::vector<std::pair<double, double>> truncated_support() const;

 private:
  Params params_;
  std::shared_ptr<const std::vector<double>> cdf_table_;  // discrete power law only
};

std::string law_kind(const IntervalLaw::Params& params);

}  // namespace randmeas
