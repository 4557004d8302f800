#pragma once

#include <functional>
#include <string>
#include <vector>

#include "randmeas/intervals.hpp"

namespace randmeas {

using ReturnFn = std::function<double(double)>;

/// exp(m log E[q(tau)]).
double average_survival(const IntervalLaw& law, const ReturnFn& q, long m, ExpectOptions opts = {});

/// exp(m E[log q(tau)]). Returns exactly 0 when the law puts mass on a zero
/// of q; the reason is written to `diagnostic` if given.
double typical_survival(const IntervalLaw& law, const ReturnFn& q, long m, ExpectOptions opts = {},
                        std::string* diagnostic = nullptr);

/// Finite-support law over distinct interval values.
struct BernoulliLaw {
  BernoulliLaw(std::vector<double> taus, std::vector<double> probs);

  std::vector<double> taus;
  std::vector<double> probs;
  int size() const { return static_cast<int>(taus.size()); }
};

struct RateFunctionSample {
  double x;
  double rate;
};

/// Achievable range [min log q, max log q] of L/m.
std::pair<double, double> ld_domain(const std::vector<double>& q_values);

/// x* = sum_alpha p_alpha log q_alpha.
double ld_typical_point(const BernoulliLaw& bern, const std::vector<double>& q_values);

/// Rate function of L/m = (1/m) log S_m for a finite-support law.
///
/// Evaluated as the contraction of the empirical-frequency rate (a KL
/// divergence) onto x: the minimizing frequencies are the tilted law
/// f_alpha ~ p_alpha q_alpha^beta with beta fixed by sum f log q = x.
/// Support points with equal q are merged first. Throws DomainError for x
/// outside the achievable range or for q values that are not positive.
double ld_rate_function(const BernoulliLaw& bern, const std::vector<double>& q_values, double x);

/// Frequencies f_alpha of the tilted law at x (after merging equal q values,
/// reported per original support point in proportion to p).
std::vector<double> ld_frequencies(const BernoulliLaw& bern, const std::vector<double>& q_values, double x);

/// The symmetric closed-form frequencies
///   f_alpha = (log q_d - x) / ((d - 1)(log q_d - log q_alpha)),  alpha < d,
/// inserted into sum f log(f/p). Coincides with `ld_rate_function` for two
/// distinct q values; for more it is one particular solution of an
/// underdetermined system and may leave [0, 1] (then DomainError).
double ld_rate_function_symmetric(const BernoulliLaw& bern, const std::vector<double>& q_values, double x);

std::vector<RateFunctionSample> ld_rate_curve(const BernoulliLaw& bern, const std::vector<double>& q_values,
                                              int points);

/// exp(m sum_alpha p_alpha log q_alpha).
double typical_from_ld(const BernoulliLaw& bern, const std::vector<double>& q_values, long m);

/// 1 - q(tau0)^m, evaluated without cancellation.
double zeno_deviation(const ReturnFn& q, double tau0, long m);

}  // namespace randmeas
