#include "randmeas/zeta.hpp"

#include <array>
#include <cmath>

#include "randmeas/core.hpp"

namespace randmeas {
namespace {

// B_{2k} / (2k)! for k = 1..8
constexpr std::array<double, 8> kBernoulliOverFactorial = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
};

// sum_{j >= b} j^{-s} for b >= 16 by Euler-Maclaurin.
double euler_maclaurin_tail(double s, double b) {
  double sum = std::pow(b, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(b, -s);
  // rising factorial s (s+1) ... (s+2k-2) times b^{-s-2k+1}
  double rising = s;
  double bpow = std::pow(b, -s - 1.0);
  const double inv_b2 = 1.0 / (b * b);
  for (size_t k = 0; k < kBernoulliOverFactorial.size(); ++k) {
    const double term = kBernoulliOverFactorial[k] * rising * bpow;
    sum += term;
    if (std::abs(term) < 1e-18 * sum) break;
    rising *= (s + 2.0 * k + 1.0) * (s + 2.0 * k + 2.0);
    bpow *= inv_b2;
  }
  return sum;
}

}  // namespace

double zeta_tail(double s, double a) {
  if (!(s > 1.0)) throw DomainError("zeta_tail: s must exceed 1");
  if (!(a >= 1.0)) throw DomainError("zeta_tail: offset must be >= 1");
  constexpr double kSwitch = 32.0;
  double sum = 0.0;
  double j = a;
  while (j < kSwitch) {
    sum += std::pow(j, -s);
    j += 1.0;
  }
  return sum + euler_maclaurin_tail(s, j);
}

double riemann_zeta(double s) { return zeta_tail(s, 1.0); }

}  // namespace randmeas
