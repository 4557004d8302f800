#include "randmeas/scheme1.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <map>

namespace randmeas {
namespace {

struct Merged {
  std::vector<double> logq;  // distinct, ascending
  std::vector<double> p;
};

Merged merge_levels(const BernoulliLaw& bern, const std::vector<double>& q_values) {
  if (static_cast<int>(q_values.size()) != bern.size()) {
    throw DomainError("rate function: need one q value per support point");
  }
  std::map<double, double> by_level;
  for (int i = 0; i < bern.size(); ++i) {
    const double q = q_values[i];
    if (!(q > 0.0 && q <= 1.0)) throw DomainError("rate function: q values must lie in (0, 1]");
    by_level[std::log(q)] += bern.probs[i];
  }
  Merged m;
  for (const auto& [l, p] : by_level) {
    m.logq.push_back(l);
    m.p.push_back(p);
  }
  return m;
}

// log sum_a p_a exp(beta l_a)
double log_partition(const Merged& m, double beta) {
  double top = -std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < m.p.size(); ++a) top = std::max(top, std::log(m.p[a]) + beta * m.logq[a]);
  double s = 0.0;
  for (size_t a = 0; a < m.p.size(); ++a) s += std::exp(std::log(m.p[a]) + beta * m.logq[a] - top);
  return top + std::log(s);
}

std::vector<double> tilted(const Merged& m, double beta) {
  const double lz = log_partition(m, beta);
  std::vector<double> f(m.p.size());
  for (size_t a = 0; a < f.size(); ++a) f[a] = std::exp(std::log(m.p[a]) + beta * m.logq[a] - lz);
  return f;
}

double tilted_mean(const Merged& m, double beta) {
  const auto f = tilted(m, beta);
  double x = 0.0;
  for (size_t a = 0; a < f.size(); ++a) x += f[a] * m.logq[a];
  return x;
}

// Returns beta with tilted_mean(beta) = x, or +-inf at the domain edges.
double solve_beta(const Merged& m, double x) {
  const double lo = m.logq.front();
  const double hi = m.logq.back();
  const double span = hi - lo;
  if (x < lo - 1e-12 * std::max(1.0, span) || x > hi + 1e-12 * std::max(1.0, span)) {
    throw DomainError("rate function: x outside the achievable range (rate is +infinity)");
  }
  if (m.p.size() == 1) return 0.0;
  if (x <= lo) return -std::numeric_limits<double>::infinity();
  if (x >= hi) return std::numeric_limits<double>::infinity();
  double x0 = 0.0;
  for (size_t a = 0; a < m.p.size(); ++a) x0 += m.p[a] * m.logq[a];
  if (x == x0) return 0.0;
  // Bracket: the tilted mean is increasing in beta.
  double b_lo = -1.0, b_hi = 1.0;
  while (tilted_mean(m, b_lo) > x) b_lo *= 2.0;
  while (tilted_mean(m, b_hi) < x) b_hi *= 2.0;
  boost::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve([&](double beta) { return tilted_mean(m, beta) - x; },
                                                        b_lo, b_hi, boost::math::tools::eps_tolerance<double>(52),
                                                        iters);
  return 0.5 * (a + b);
}

}  // namespace

double average_survival(const IntervalLaw& law, const ReturnFn& q, long m, ExpectOptions opts) {
  if (m < 0) throw DomainError("average_survival: m must be >= 0");
  if (m == 0) return 1.0;
  const double e = law.expect(q, opts);
  if (e <= 0.0) return 0.0;
  return std::exp(static_cast<double>(m) * std::log(e));
}

double typical_survival(const IntervalLaw& law, const ReturnFn& q, long m, ExpectOptions opts,
                        std::string* diagnostic) {
  if (m < 0) throw DomainError("typical_survival: m must be >= 0");
  if (m == 0) return 1.0;
  if (law.is_discrete()) {
    for (const auto& [tau, mass] : law.truncated_support()) {
      if (mass > 0.0 && q(tau) <= 0.0) {
        if (diagnostic) *diagnostic = "q vanishes at tau = " + std::to_string(tau) + " which carries positive mass";
        return 0.0;
      }
    }
  }
  double e = 0.0;
  try {
    e = law.expect([&](double t) { return std::log(q(t)); }, opts);
  } catch (const NumericalError& err) {
    if (diagnostic) *diagnostic = std::string("log q is not integrable: ") + err.what();
    return 0.0;
  }
  if (!std::isfinite(e)) {
    if (diagnostic) *diagnostic = "expected log q is -infinity";
    return 0.0;
  }
  return std::exp(static_cast<double>(m) * e);
}

BernoulliLaw::BernoulliLaw(std::vector<double> t, std::vector<double> p) : taus(std::move(t)), probs(std::move(p)) {
  if (taus.empty() || taus.size() != probs.size()) throw DomainError("BernoulliLaw: need matching nonempty arrays");
  double total = 0.0;
  for (double x : probs) {
    if (!(x > 0.0)) throw DomainError("BernoulliLaw: probabilities must be positive");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("BernoulliLaw: probabilities must sum to 1");
  auto sorted = taus;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("BernoulliLaw: support points must be distinct");
  }
}

std::pair<double, double> ld_domain(const std::vector<double>& q_values) {
  if (q_values.empty()) throw DomainError("ld_domain: empty support");
  const auto [lo, hi] = std::minmax_element(q_values.begin(), q_values.end());
  if (!(*lo > 0.0)) throw DomainError("ld_domain: q values must be positive");
  return {std::log(*lo), std::log(*hi)};
}

double ld_typical_point(const BernoulliLaw& bern, const std::vector<double>& q_values) {
  if (static_cast<int>(q_values.size()) != bern.size()) throw DomainError("ld_typical_point: size mismatch");
  double x = 0.0;
  for (int i = 0; i < bern.size(); ++i) x += bern.probs[i] * std::log(q_values[i]);
  return x;
}

double ld_rate_function(const BernoulliLaw& bern, const std::vector<double>& q_values, double x) {
  const Merged m = merge_levels(bern, q_values);
  const double beta = solve_beta(m, x);
  if (beta == 0.0) return 0.0;
  if (std::isinf(beta)) return -std::log(beta < 0 ? m.p.front() : m.p.back());
  // I = sum f log(f/p) = beta x - log Z(beta)
  return std::max(0.0, beta * x - log_partition(m, beta));
}

std::vector<double> ld_frequencies(const BernoulliLaw& bern, const std::vector<double>& q_values, double x) {
  const Merged m = merge_levels(bern, q_values);
  const double beta = solve_beta(m, x);
  std::vector<double> level_f(m.p.size(), 0.0);
  if (std::isinf(beta)) {
    (beta < 0 ? level_f.front() : level_f.back()) = 1.0;
  } else {
    level_f = tilted(m, beta);
  }
  std::vector<double> f(static_cast<size_t>(bern.size()));
  for (int i = 0; i < bern.size(); ++i) {
    const double l = std::log(q_values[i]);
    const size_t a = static_cast<size_t>(std::lower_bound(m.logq.begin(), m.logq.end(), l) - m.logq.begin());
    f[i] = level_f[a] * bern.probs[i] / m.p[a];
  }
  return f;
}

double ld_rate_function_symmetric(const BernoulliLaw& bern, const std::vector<double>& q_values, double x) {
  const Merged m = merge_levels(bern, q_values);
  const size_t d = m.p.size();
  const auto [lo, hi] = std::make_pair(m.logq.front(), m.logq.back());
  if (x < lo - 1e-12 || x > hi + 1e-12) throw DomainError("rate function: x outside the achievable range");
  if (d == 1) return 0.0;
  // The last level plays the role of the reference point tau^(d).
  const double ld = m.logq.back();
  std::vector<double> f(d);
  double rest = 1.0;
  for (size_t a = 0; a + 1 < d; ++a) {
    f[a] = (ld - x) / ((d - 1.0) * (ld - m.logq[a]));
    rest -= f[a];
  }
  f[d - 1] = rest;
  double rate = 0.0;
  for (size_t a = 0; a < d; ++a) {
    if (f[a] < -1e-12 || f[a] > 1.0 + 1e-12) {
      throw DomainError("symmetric rate function: frequencies leave [0, 1] at this x");
    }
    if (f[a] > 0.0) rate += f[a] * std::log(f[a] / m.p[a]);
  }
  return rate;
}

std::vector<RateFunctionSample> ld_rate_curve(const BernoulliLaw& bern, const std::vector<double>& q_values,
                                              int points) {
  if (points < 2) throw DomainError("ld_rate_curve: need at least two points");
  const auto [lo, hi] = ld_domain(q_values);
  std::vector<RateFunctionSample> out;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    out.push_back({x, ld_rate_function(bern, q_values, x)});
  }
  return out;
}

double typical_from_ld(const BernoulliLaw& bern, const std::vector<double>& q_values, long m) {
  if (m < 0) throw DomainError("typical_from_ld: m must be >= 0");
  for (double q : q_values) {
    if (q <= 0.0) return 0.0;
  }
  return std::exp(static_cast<double>(m) * ld_typical_point(bern, q_values));
}

double zeno_deviation(const ReturnFn& q, double tau0, long m) {
  if (m < 0 || tau0 < 0.0) throw DomainError("zeno_deviation: need m >= 0 and tau0 >= 0");
  if (tau0 == 0.0 || m == 0) return 0.0;
  const double qv = q(tau0);
  if (qv <= 0.0) return 1.0;
  return -std::expm1(static_cast<double>(m) * std::log(qv));
}

}  // namespace randmeas
