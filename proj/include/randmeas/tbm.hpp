#pragma once

#include <vector>

#include "randmeas/core.hpp"

namespace randmeas::tbm {

/// Periodic tight-binding chain H = -gamma sum_j (|j+1><j| + h.c.).
struct TbmParams {
  TbmParams(int n, double gamma);

  int n;
  double gamma;

  /// Mode frequency 2 gamma cos(2 pi q / N).
  double mode_frequency(int q) const;
};

/// One complex amplitude per site.
struct TbmState {
  ComplexVector amplitudes;

  static TbmState localized(int n, int n0);
  int size() const { return static_cast<int>(amplitudes.size()); }
  double squared_norm() const { return randmeas::squared_norm(amplitudes); }
};

/// psi_{n,n0}(t) = (1/N) sum_q exp(i 2 gamma t cos(2 pi q/N) + i 2 pi q (n - n0)/N).
Complex propagator_amplitude(const TbmParams& params, int n, int n0, double t);

/// Exact evolution through the plane-wave basis.
TbmState evolve(const TbmState& state, const TbmParams& params, double tau);

/// Classical fourth-order Runge-Kutta on i d psi/dt = H psi in the site
/// basis, with steps no longer than `dt`. The independent reference route.
TbmState integrate_rk4(const TbmState& state, const TbmParams& params, double t, double dt);

std::vector<double> site_occupation(const TbmState& state);

/// |(1/N) sum_q exp(i 2 gamma tau cos(2 pi q/N))|^2, independent of the start site.
double q_return(const TbmParams& params, double tau);

}  // namespace randmeas::tbm
