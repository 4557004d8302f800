#include "randmeas/intervals.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

#include "randmeas/zeta.hpp"

namespace randmeas {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kTailMass = 1e-12;
constexpr long kPowerTableSize = 65536;  // explicit k range for the discrete power law
constexpr int kMaxSplits = 4000;  // per panel of the outer integration grid
constexpr double kPanelRel = 1e-13;  // per-panel absolute tolerance, relative to accumulated L1

// k = tau / 2 for a valid discrete support point, else 0.
long half_index(double tau) {
  if (!(tau >= 2.0) || tau != std::floor(tau) || std::fmod(tau, 2.0) != 0.0) return 0;
  return static_cast<long>(tau / 2.0);
}

double poisson_log_mass(double lambda, long j) {
  return -lambda + static_cast<double>(j) * std::log(lambda) - std::lgamma(static_cast<double>(j) + 1.0);
}

double gk15(const std::function<double(double)>& g, double a, double b, double* err, double* l1) {
  const double r = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, 0, 0.0, err, l1);
  // Boost reports the single-panel error on the reference interval [-1, 1].
  *err *= 0.5 * (b - a);
  return r;
}

// Globally adaptive bisection: the panel with the largest error estimate is
// split until the total meets an absolute tolerance or the split budget runs
// out. Boost's own recursion halves the tolerance per level, which is far too
// costly for peaked integrands such as log q near a near-zero of q.
double adaptive_gk(const std::function<double(double)>& g, double a, double b, double abs_tol, double* err,
                   double* l1) {
  struct Panel {
    double a, b, value, err, l1;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  std::priority_queue<Panel> heap;
  auto make = [&](double lo, double hi) {
    Panel p{lo, hi, 0.0, 0.0, 0.0};
    p.value = gk15(g, lo, hi, &p.err, &p.l1);
    return p;
  };
  Panel first = make(a, b);
  double total_err = first.err;
  heap.push(first);
  for (int splits = 0; total_err > abs_tol && splits < kMaxSplits; ++splits) {
    const Panel worst = heap.top();
    // Below the panel's roundoff level further bisection cannot help.
    if (worst.err <= 1e3 * std::numeric_limits<double>::epsilon() * worst.l1) break;
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = make(worst.a, mid), right = make(mid, worst.b);
    total_err += left.err + right.err - worst.err;
    heap.push(left);
    heap.push(right);
  }
  double value = 0.0;
  for (; !heap.empty(); heap.pop()) {
    value += heap.top().value;
    *err += heap.top().err;
    *l1 += heap.top().l1;
  }
  return value;
}

struct QuadratureSum {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;

  void add(const std::function<double(double)>& g, double a, double b) {
    // Reference scale: the L1 mass accumulated so far, seeded by a coarse pass.
    double l_ref = l1;
    if (l_ref == 0.0) {
      double e0 = 0.0;
      gk15(g, a, b, &e0, &l_ref);
    }
    value += adaptive_gk(g, a, b, kPanelRel * std::max(l_ref, 1e-300), &error, &l1);
  }

  double checked(const char* who) const {
    if (!std::isfinite(value)) throw NumericalError(std::string(who) + ": integrand produced a non-finite value");
    if (error > tol::kQuadratureRel * std::max(l1, 1e-300) && error > 1e-15) {
      throw NumericalError(std::string(who) + ": quadrature error estimate " + std::to_string(error) +
                           " exceeds the relative tolerance");
    }
    return value;
  }
};

// Integrates w(tau) f(tau) over [lo, hi] in panels that start at `panel` wide
// and grow linearly with the distance from `lo`.
template <class W>
void panel_integrate(QuadratureSum& acc, const std::function<double(double)>& f, W weight, double lo, double hi,
                     double panel) {
  const std::function<double(double)> g = [&](double t) { return weight(t) * f(t); };
  double a = lo;
  long guard = 0;
  while (a < hi) {
    const double width = std::max(panel, (a - lo) / 256.0);
    const double b = std::min(hi, a + width);
    acc.add(g, a, b);
    a = b;
    if (++guard > 10'000'000) throw NumericalError("expect: panel budget exhausted");
  }
}

}  // namespace

std::string law_kind(const IntervalLaw::Params& params) {
  return std::visit(Overloaded{
                        [](const DiscreteExponential&) { return std::string("discrete_exponential"); },
                        [](const DiscretePowerLaw&) { return std::string("discrete_power_law"); },
                        [](const DiscreteDelta&) { return std::string("discrete_delta"); },
                        [](const Poisson&) { return std::string("poisson"); },
                        [](const ContinuousExponential&) { return std::string("exponential"); },
                        [](const ContinuousPowerLaw&) { return std::string("power_law"); },
                        [](const ContinuousDelta&) { return std::string("delta"); },
                        [](const HalfNormal&) { return std::string("half_normal"); },
                    },
                    params);
}

IntervalLaw::IntervalLaw(Params params) : params_(params) {
  auto finite_positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  std::visit(Overloaded{
                 [&](const DiscreteExponential& p) {
                   if (!(p.r > 0.0 && p.r < 1.0)) throw DomainError("discrete_exponential: r must lie in (0, 1)");
                 },
                 [&](const DiscretePowerLaw& p) {
                   if (!(std::isfinite(p.s) && p.s > 2.0)) {
                     throw DomainError("discrete_power_law: s must exceed 2 (finite mean)");
                   }
                   auto table = std::make_shared<std::vector<double>>(kPowerTableSize);
                   const double z = riemann_zeta(p.s);
                   double cum = 0.0;
                   for (long k = 1; k <= kPowerTableSize; ++k) {
                     cum += std::pow(static_cast<double>(k), -p.s) / z;
                     (*table)[k - 1] = cum;
                   }
                   cdf_table_ = table;
                 },
                 [&](const DiscreteDelta& p) {
                   if (p.tau0 < 2 || p.tau0 % 2 != 0) {
                     throw DomainError("discrete_delta: tau0 must be an even positive integer");
                   }
                 },
                 [&](const Poisson& p) {
                   if (!finite_positive(p.lambda)) throw DomainError("poisson: lambda must be positive");
                 },
                 [&](const ContinuousExponential& p) {
                   if (!finite_positive(p.r)) throw DomainError("exponential: r must be positive");
                 },
                 [&](const ContinuousPowerLaw& p) {
                   if (!(std::isfinite(p.alpha) && p.alpha > 1.0)) {
                     throw DomainError("power_law: alpha must exceed 1 (finite mean)");
                   }
                   if (!finite_positive(p.tau_ch)) throw DomainError("power_law: tau_ch must be positive");
                 },
                 [&](const ContinuousDelta& p) {
                   if (!finite_positive(p.tau0)) throw DomainError("delta: tau0 must be positive");
                 },
                 [&](const HalfNormal& p) {
                   if (!(std::isfinite(p.tau_hn) && p.tau_hn >= 0.0)) {
                     throw DomainError("half_normal: tau_hn must be >= 0");
                   }
                   if (!finite_positive(p.sigma)) throw DomainError("half_normal: sigma must be positive");
                 },
             },
             params_);
}

std::string IntervalLaw::kind() const { return law_kind(params_); }

bool IntervalLaw::is_discrete() const { return params_.index() <= 3; }

bool IntervalLaw::is_delta() const {
  return std::holds_alternative<DiscreteDelta>(params_) || std::holds_alternative<ContinuousDelta>(params_);
}

double IntervalLaw::sample(Rng& rng) const {
  return std::visit(
      Overloaded{
          [&](const DiscreteExponential& p) {
            // k - 1 is geometric with success probability r
            const double u = uniform_open01(rng);
            return 2.0 * (1.0 + std::floor(std::log(u) / std::log1p(-p.r)));
          },
          [&](const DiscretePowerLaw& p) {
            const double u = uniform_open01(rng);
            const auto& table = *cdf_table_;
            if (u <= table.back()) {
              const auto it = std::lower_bound(table.begin(), table.end(), u);
              return 2.0 * static_cast<double>(it - table.begin() + 1);
            }
            // Continuous Pareto approximation of the remaining tail beyond the table.
            const double tail = 1.0 - table.back();
            const double v = std::max((1.0 - u) / tail, 1e-300);
            const double k0 = static_cast<double>(kPowerTableSize) + 0.5;
            return 2.0 * std::max(static_cast<double>(kPowerTableSize + 1),
                                  std::round(k0 * std::pow(v, -1.0 / (p.s - 1.0))));
          },
          [&](const DiscreteDelta& p) { return static_cast<double>(p.tau0); },
          [&](const Poisson& p) {
            std::poisson_distribution<long> dist(p.lambda);
            return 2.0 * static_cast<double>(dist(rng) + 1);
          },
          [&](const ContinuousExponential& p) { return -std::log(uniform_open01(rng)) / p.r; },
          [&](const ContinuousPowerLaw& p) { return p.tau_ch * std::pow(uniform_open01(rng), -1.0 / p.alpha); },
          [&](const ContinuousDelta& p) { return p.tau0; },
          [&](const HalfNormal& p) {
            return p.tau_hn + p.sigma * std::sqrt(2.0) * boost::math::erf_inv(uniform_open01(rng));
          },
      },
      params_);
}

double IntervalLaw::mean() const {
  return std::visit(Overloaded{
                        [](const DiscreteExponential& p) { return 2.0 / p.r; },
                        [](const DiscretePowerLaw& p) { return 2.0 * riemann_zeta(p.s - 1.0) / riemann_zeta(p.s); },
                        [](const DiscreteDelta& p) { return static_cast<double>(p.tau0); },
                        [](const Poisson& p) { return 2.0 * (1.0 + p.lambda); },
                        [](const ContinuousExponential& p) { return 1.0 / p.r; },
                        [](const ContinuousPowerLaw& p) { return p.tau_ch * p.alpha / (p.alpha - 1.0); },
                        [](const ContinuousDelta& p) { return p.tau0; },
                        [](const HalfNormal& p) { return p.tau_hn + p.sigma * std::sqrt(2.0 / kPi); },
                    },
                    params_);
}

Variance IntervalLaw::variance() const {
  return std::visit(Overloaded{
                        [](const DiscreteExponential& p) { return Variance{false, 4.0 * (1.0 - p.r) / (p.r * p.r)}; },
                        [](const DiscretePowerLaw& p) {
                          if (p.s <= 3.0) return Variance{true, 0.0};
                          const double z = riemann_zeta(p.s);
                          const double m = 2.0 * riemann_zeta(p.s - 1.0) / z;
                          return Variance{false, 4.0 * riemann_zeta(p.s - 2.0) / z - m * m};
                        },
                        [](const DiscreteDelta&) { return Variance{false, 0.0}; },
                        [](const Poisson& p) { return Variance{false, 4.0 * p.lambda}; },
                        [](const ContinuousExponential& p) { return Variance{false, 1.0 / (p.r * p.r)}; },
                        [](const ContinuousPowerLaw& p) {
                          if (p.alpha <= 2.0) return Variance{true, 0.0};
                          const double am1 = p.alpha - 1.0;
                          return Variance{false, p.tau_ch * p.tau_ch * p.alpha / (am1 * am1 * (p.alpha - 2.0))};
                        },
                        [](const ContinuousDelta&) { return Variance{false, 0.0}; },
                        [](const HalfNormal& p) { return Variance{false, p.sigma * p.sigma * (1.0 - 2.0 / kPi)}; },
                    },
                    params_);
}

double IntervalLaw::mass_or_density(double tau) const {
  return std::visit(
      Overloaded{
          [&](const DiscreteExponential& p) {
            const long k = half_index(tau);
            return k == 0 ? 0.0 : p.r * std::pow(1.0 - p.r, static_cast<double>(k - 1));
          },
          [&](const DiscretePowerLaw& p) {
            const long k = half_index(tau);
            return k == 0 ? 0.0 : std::pow(static_cast<double>(k), -p.s) / riemann_zeta(p.s);
          },
          [&](const DiscreteDelta& p) { return tau == static_cast<double>(p.tau0) ? 1.0 : 0.0; },
          [&](const Poisson& p) {
            const long k = half_index(tau);
            return k == 0 ? 0.0 : std::exp(poisson_log_mass(p.lambda, k - 1));
          },
          [&](const ContinuousExponential& p) { return tau < 0.0 ? 0.0 : p.r * std::exp(-p.r * tau); },
          [&](const ContinuousPowerLaw& p) {
            return tau < p.tau_ch ? 0.0 : p.alpha / (p.tau_ch * std::pow(tau / p.tau_ch, 1.0 + p.alpha));
          },
          [&](const ContinuousDelta& p) {
            // Point mass: no density; report the atom weight at tau0 as for discrete laws.
            return tau == p.tau0 ? 1.0 : 0.0;
          },
          [&](const HalfNormal& p) {
            if (tau < p.tau_hn) return 0.0;
            const double z = (tau - p.tau_hn) / p.sigma;
            return std::sqrt(2.0 / (kPi * p.sigma * p.sigma)) * std::exp(-0.5 * z * z);
          },
      },
      params_);
}

std::vector<std::pair<double, double>> IntervalLaw::truncated_support() const {
  std::vector<std::pair<double, double>> out;
  std::visit(Overloaded{
                 [&](const DiscreteExponential& p) {
                   double mass = p.r;
                   double cum = 0.0;
                   for (long k = 1; cum < 1.0 - kTailMass && mass > 0.0; ++k) {
                     out.emplace_back(2.0 * k, mass);
                     cum += mass;
                     mass *= 1.0 - p.r;
                   }
                 },
                 [&](const DiscretePowerLaw& p) {
                   // Direct masses; differencing the CDF table loses the small ones.
                   const double z = riemann_zeta(p.s);
                   for (long k = 1; k <= kPowerTableSize; ++k) {
                     out.emplace_back(2.0 * k, std::pow(static_cast<double>(k), -p.s) / z);
                   }
                 },
                 [&](const DiscreteDelta& p) { out.emplace_back(static_cast<double>(p.tau0), 1.0); },
                 [&](const Poisson& p) {
                   double cum = 0.0;
                   for (long j = 0; cum < 1.0 - kTailMass || static_cast<double>(j) < p.lambda; ++j) {
                     const double mass = std::exp(poisson_log_mass(p.lambda, j));
                     if (mass > 0.0) out.emplace_back(2.0 * (j + 1), mass);
                     cum += mass;
                   }
                 },
                 [&](const auto&) -> void { throw DomainError("truncated_support: law is continuous"); },
             },
             params_);
  return out;
}

double IntervalLaw::expect(const std::function<double(double)>& f, ExpectOptions opts) const {
  if (std::holds_alternative<DiscreteDelta>(params_)) {
    return f(static_cast<double>(std::get<DiscreteDelta>(params_).tau0));
  }
  if (std::holds_alternative<ContinuousDelta>(params_)) return f(std::get<ContinuousDelta>(params_).tau0);

  if (const auto* p = std::get_if<DiscretePowerLaw>(&params_)) {
    // Explicit sum over the tabulated range, then doubling blocks split into
    // sub-blocks of equal width. Each sub-block carries its exact zeta-tail
    // mass and f is sampled at the support point nearest its mass centroid.
    double acc = 0.0;
    for (const auto& [tau, mass] : truncated_support()) acc += mass * f(tau);
    const double z = riemann_zeta(p->s);
    const double s = p->s;
    double lo = static_cast<double>(kPowerTableSize + 1);
    double remaining = zeta_tail(s, lo) / z;
    while (remaining > 1e-16) {
      const double hi = std::floor(lo * 2.0);
      const double block = remaining - zeta_tail(s, hi) / z;
      constexpr int kSub = 256;
      double avg = 0.0;
      double weight = 0.0;
      for (int i = 0; i < kSub; ++i) {
        const double a = lo + (hi - lo) * i / kSub;
        const double b = lo + (hi - lo) * (i + 1) / kSub;
        const double w = std::pow(a, 1.0 - s) - std::pow(b, 1.0 - s);
        const double centroid = (s - 1.0) / (s - 2.0) * (std::pow(a, 2.0 - s) - std::pow(b, 2.0 - s)) / w;
        avg += w * f(2.0 * std::clamp(std::round(centroid), lo, hi - 1.0));
        weight += w;
      }
      avg /= weight;
      acc += block * avg;
      remaining -= block;
      lo = hi;
    }
    return acc;
  }

  if (is_discrete()) {
    double acc = 0.0;
    for (const auto& [tau, mass] : truncated_support()) acc += mass * f(tau);
    return acc;
  }

  QuadratureSum sum;
  std::visit(Overloaded{
                 [&](const ContinuousExponential& p) {
                   const double panel = opts.panel > 0.0 ? opts.panel : 1.0 / p.r;
                   const double hi = -std::log(kTailMass * 1e-2) / p.r;
                   panel_integrate(sum, f, [&](double t) { return p.r * std::exp(-p.r * t); }, 0.0, hi, panel);
                 },
                 [&](const ContinuousPowerLaw& p) {
                   const double panel = opts.panel > 0.0 ? opts.panel : p.tau_ch;
                   const double hi = p.tau_ch * std::pow(kTailMass * 1e-2, -1.0 / p.alpha);
                   panel_integrate(sum, f,
                                   [&](double t) { return p.alpha / (p.tau_ch * std::pow(t / p.tau_ch, 1.0 + p.alpha)); },
                                   p.tau_ch, hi, panel);
                 },
                 [&](const HalfNormal& p) {
                   const double panel = opts.panel > 0.0 ? std::min(opts.panel, p.sigma) : p.sigma / 2.0;
                   const double norm = std::sqrt(2.0 / (kPi * p.sigma * p.sigma));
                   panel_integrate(
                       sum, f,
                       [&](double t) {
                         const double z = (t - p.tau_hn) / p.sigma;
                         return norm * std::exp(-0.5 * z * z);
                       },
                       p.tau_hn, p.tau_hn + 9.0 * p.sigma, panel);
                 },
                 [](const auto&) {},
             },
             params_);
  return sum.checked("expect");
}

}  // namespace randmeas
